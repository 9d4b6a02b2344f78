"""Lattice bases, point enumeration in norm balls, λ1 and a covering-radius bound."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, SingularBasis
from .norms import NormSpec

DEFAULT_BUDGET = 10**7
MEMBERSHIP_TOL = 1e-9
MAX_CONDITION = 1e8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Basis:
    """Full-rank basis; ``matrix[:, i]`` is the i-th basis vector."""

    matrix: np.ndarray
    gram: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def columns(self) -> list[np.ndarray]:
        return [self.matrix[:, i] for i in range(self.dim)]

    def coords(self, coeffs) -> np.ndarray:
        return self.matrix @ np.asarray(coeffs, dtype=float)

    def vector(self, coeffs) -> "LatticeVector":
        return LatticeVector.make(self, coeffs)

    def __eq__(self, other):
        return isinstance(other, Basis) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def to_json(self) -> dict:
        return {"dim": self.dim, "columns": self.matrix.T.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Basis":
        cols = obj["columns"]
        if "dim" in obj and obj["dim"] != len(cols):
            raise DimensionMismatch(f"dim={obj['dim']} but {len(cols)} columns given")
        return make_basis(np.array(cols, dtype=float).T)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def load(cls, path) -> "Basis":
        return cls.from_json(json.loads(Path(path).read_text()))


def make_basis(matrix) -> Basis:
    """Validate a square matrix whose columns are the basis vectors."""
    a = np.array(matrix, dtype=float)
    if a.ndim == 1 and a.size == 1:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"basis must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SingularBasis("basis has non-finite entries")
    col_norms = np.linalg.norm(a, axis=0)
    if np.any(col_norms == 0):
        raise SingularBasis("basis has a zero column")
    det = np.linalg.det(a)
    if abs(det) < 1e-10 * float(np.prod(col_norms)):
        raise SingularBasis(f"columns are linearly dependent (det={det:.3g})")
    # scale-invariant conditioning: long but orthogonal columns are fine
    cond = np.linalg.cond(a / col_norms)
    if not cond <= MAX_CONDITION:
        raise SingularBasis(f"basis is too ill-conditioned (cond={cond:.3g})")
    return Basis(matrix=_frozen(a), gram=_frozen(a.T @ a))


@dataclass(frozen=True, order=True)
class LatticeVector:
    coeffs: tuple[int, ...]
    coords: tuple[float, ...] = field(compare=False)

    @classmethod
    def make(cls, basis: Basis, coeffs) -> "LatticeVector":
        z = tuple(int(c) for c in coeffs)
        if len(z) != basis.dim:
            raise DimensionMismatch(f"expected {basis.dim} coefficients, got {len(z)}")
        return cls(z, tuple(float(t) for t in basis.coords(z)))

    @property
    def x(self) -> np.ndarray:
        return np.array(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __neg__(self) -> "LatticeVector":
        return LatticeVector(tuple(-c for c in self.coeffs), tuple(-t for t in self.coords))


@dataclass(frozen=True)
class LatticeParams:
    lambda1: float
    lambda1_witness: LatticeVector
    mu_upper: float

    def packing_bound(self, n: int) -> float:
        """Upper bound on the number of weak relevant vectors."""
        return (1.0 + 4.0 * self.mu_upper / self.lambda1) ** n


def _enumerate_coeffs(basis: Basis, center: np.ndarray, radius2: float, budget: int) -> np.ndarray:
    """All z with ``||B z - center||_2 <= radius2``, depth-first on the QR factor."""
    n = basis.dim
    q, r = np.linalg.qr(basis.matrix)
    y = q.T @ center
    diag = np.abs(np.diag(r))
    out: list[tuple[int, ...]] = []
    z = [0] * n
    visited = 0
    r2 = radius2 * radius2

    def rec(i: int, partial: float):
        nonlocal visited
        # residual contribution of coordinates > i
        s = y[i] - sum(r[i, j] * z[j] for j in range(i + 1, n))
        c = s / r[i, i]
        room = r2 - partial
        if room < 0:
            return
        w = math.sqrt(room) / diag[i]
        lo, hi = math.ceil(c - w - 1e-12), math.floor(c + w + 1e-12)
        visited += max(hi - lo + 1, 0)
        if visited > budget:
            raise BudgetExceeded(f"enumeration visited more than {budget} nodes")
        for zi in range(lo, hi + 1):
            z[i] = zi
            d = r[i, i] * zi - s
            if i == 0:
                out.append(tuple(z))
            else:
                rec(i - 1, partial + d * d)
        z[i] = 0

    rec(n - 1, 0.0)
    if not out:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(out, dtype=np.int64)


def enumerate_in_ball(basis: Basis, norm: NormSpec, center, radius: float,
                      budget: int = DEFAULT_BUDGET) -> list[LatticeVector]:
    """Every lattice vector within ``radius`` (+1e-9) of ``center``, sorted by coefficients."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    n = basis.dim
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if center.shape != (n,):
        raise DimensionMismatch(f"center must have length {n}")
    r_euclid = (radius + MEMBERSHIP_TOL) * norm.euclid_factor(n)
    r_euclid += 1e-12 * (1.0 + r_euclid)
    coeffs = _enumerate_coeffs(basis, center, r_euclid, budget)
    if coeffs.size == 0:
        return []
    pts = coeffs @ basis.matrix.T
    keep = norm(pts - center) <= radius + MEMBERSHIP_TOL
    coeffs, pts = coeffs[keep], pts[keep]
    order = np.lexsort(coeffs.T[::-1])
    return [LatticeVector(tuple(int(c) for c in coeffs[i]), tuple(float(t) for t in pts[i]))
            for i in order]


def _canonical_shortest(vectors: Sequence[LatticeVector]) -> LatticeVector:
    # prefer a positive leading coefficient, then the lexicographically smallest
    def leading_positive(v):
        for c in v.coeffs:
            if c:
                return c > 0
        return False

    pos = [v for v in vectors if leading_positive(v)]
    return min(pos or vectors)


def first_minimum(basis: Basis, norm: NormSpec,
                  budget: int = DEFAULT_BUDGET) -> tuple[float, LatticeVector]:
    radius = min(norm(b) for b in basis.columns)
    pts = [v for v in enumerate_in_ball(basis, norm, None, radius, budget) if not v.is_zero()]
    values = norm(np.array([v.coords for v in pts]))
    lam = float(values.min())
    shortest = [v for v, val in zip(pts, values) if val <= lam * (1 + 1e-12)]
    return lam, _canonical_shortest(shortest)


def covering_radius_upper(basis: Basis, norm: NormSpec) -> float:
    """Half the sum of basis lengths: rounding coefficients never moves farther."""
    return 0.5 * math.fsum(norm(b) for b in basis.columns)


def _ball_volume(norm: NormSpec, n: int, radius: float) -> float:
    p = norm.p
    if p == math.inf:
        unit = 2.0**n
    else:
        unit = (2.0 * math.gamma(1.0 + 1.0 / p)) ** n / math.gamma(1.0 + n / p)
    return unit * radius**n


def covering_radius_independent(basis: Basis, norm: NormSpec, max_points: float = 2e4,
                                budget: int = DEFAULT_BUDGET) -> float | None:
    """Half the summed length of n short linearly independent lattice vectors.

    Any n independent lattice vectors span a sublattice whose covering radius
    bounds the lattice's, so this is again an upper bound, usually much tighter
    than the basis one on skewed bases.  Returns None when the ball holding the
    basis vectors is too crowded to enumerate cheaply.
    """
    n = basis.dim
    radius = max(norm(b) for b in basis.columns)
    det = abs(float(np.linalg.det(basis.matrix)))
    if _ball_volume(norm, n, radius) / det > max_points:
        return None
    pts = nonzero(enumerate_in_ball(basis, norm, None, radius, budget))
    values = norm(np.array([v.coords for v in pts]))
    chosen: list[np.ndarray] = []
    lengths: list[float] = []
    for i in np.argsort(values, kind="stable"):
        trial = np.array(chosen + [pts[i].x])
        if np.linalg.matrix_rank(trial, tol=1e-9 * max(1.0, values[i])) == len(trial):
            chosen.append(pts[i].x)
            lengths.append(float(values[i]))
            if len(chosen) == n:
                return 0.5 * math.fsum(lengths)
    return None


def lattice_params(basis: Basis, norm: NormSpec, budget: int = DEFAULT_BUDGET) -> LatticeParams:
    lam, wit = first_minimum(basis, norm, budget)
    mu = covering_radius_upper(basis, norm)
    tight = covering_radius_independent(basis, norm, budget=budget)
    if tight is not None:
        mu = min(mu, tight)
    return LatticeParams(lambda1=lam, lambda1_witness=wit, mu_upper=mu)


def nonzero(vectors: Iterable[LatticeVector]) -> list[LatticeVector]:
    return [v for v in vectors if not v.is_zero()]
