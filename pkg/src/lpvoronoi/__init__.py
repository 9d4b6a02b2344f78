"""Voronoi cells and Voronoi-relevant vectors of lattices under ℓp norms."""

from .errors import (
    BudgetExceeded,
    ClaimViolated,
    CountViolation,
    DimensionMismatch,
    InputError,
    InvalidNorm,
    KOutOfRange,
    LatticeError,
    NonConvexNormRouting,
    NotEuclidean,
    NotPlanar,
    SingularBasis,
    Violation,
)
from .lattice import (
    Basis,
    LatticeParams,
    LatticeVector,
    covering_radius_independent,
    covering_radius_upper,
    enumerate_in_ball,
    first_minimum,
    lattice_params,
    make_basis,
)
from .lmfamily import (
    LmInstance,
    LmWitness,
    TheoremReport,
    VerificationRecord,
    build_lm,
    f_value,
    verify_claim_offplane,
    verify_claims_inplane,
    verify_theorem_main,
    witness_xmk,
)
from .norms import NormSpec, bisector_margin, distance_to_plane_l3, ray_bisector_crossing
from .planar import (
    Cell2D,
    L1FamilyReport,
    check_4or6,
    classify_planar,
    extract_facets,
    l1_counterexample_check,
    l1_family_weak_relevant,
    trace_cell2d,
)
from .relevant import (
    RelevantReport,
    SearchParams,
    Status,
    WitnessResult,
    cvp_bruteforce,
    cvp_walk_euclidean,
    enumerate_relevant,
    euclidean_relevant_oracle,
    witness_search,
)
from .render import RenderOptions, render_svg

__version__ = "0.1.0"
