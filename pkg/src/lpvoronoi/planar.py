"""Planar Voronoi cells: radial tracing, facets, the 4-or-6 count and two ℓ1 examples."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CountViolation, NonConvexNormRouting, NotPlanar
from .lattice import (
    DEFAULT_BUDGET,
    Basis,
    LatticeVector,
    enumerate_in_ball,
    lattice_params,
    make_basis,
    nonzero,
)
from .norms import NormSpec
from .relevant import RelevantReport, SearchParams, Status, WitnessResult, enumerate_relevant, witness_search

TIE_TOL = 1e-8
MIN_RUN = 3


@dataclass(frozen=True)
class CellSample:
    angle: float
    radius: float
    outer_radius: float
    tie_set: tuple[LatticeVector, ...]

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def point(self) -> np.ndarray:
        return self.radius * self.direction


@dataclass(frozen=True)
class Facet:
    generator: LatticeVector
    intervals: tuple[tuple[float, float], ...]
    samples: int


@dataclass(frozen=True, eq=False)
class Cell2D:
    """Radial description of the cell.

    ``radius`` is the boundary of the open cell along each ray and
    ``outer_radius`` that of the closed cell; they differ only where a whole
    2D region is equidistant to 0 and another lattice point (possible for ℓ1).
    """

    basis: Basis
    norm: NormSpec
    samples: tuple[CellSample, ...]
    candidates: tuple[LatticeVector, ...]
    mu_upper: float

    @property
    def n_angles(self) -> int:
        return len(self.samples)

    @property
    def facets(self) -> list[Facet]:
        return extract_facets(self)

    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.samples])

    def to_json(self) -> dict:
        return {
            "lattice": self.basis.to_json(),
            "norm": self.norm.label(),
            "n_angles": self.n_angles,
            "mu_upper": self.mu_upper,
            "facets": [
                {"generator": list(f.generator.coeffs), "intervals": [list(iv) for iv in f.intervals],
                 "samples": f.samples}
                for f in self.facets
            ],
            "samples": [
                {"angle": s.angle, "radius": s.radius, "outer_radius": s.outer_radius,
                 "ties": [list(w.coeffs) for w in s.tie_set]}
                for s in self.samples
            ],
        }


def _require_planar(basis: Basis):
    if basis.dim != 2:
        raise NotPlanar(f"planar routines need a 2D lattice, got dimension {basis.dim}")


def cell_margins(norm: NormSpec, X: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``||x|| - ||x - w||`` for every point (rows of X) and competitor (rows of W)."""
    X = np.atleast_2d(X)
    return norm(X)[:, None] - norm(X[:, None, :] - W[None, :, :])


def _radial_bisection(norm, D, W, hi, inside, iters=80):
    lo = np.zeros(D.shape[0])
    hi = np.full(D.shape[0], hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = inside(cell_margins(norm, mid[:, None] * D, W).max(axis=1))
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def trace_cell2d(basis: Basis, norm: NormSpec, n_angles: int = 720,
                 budget: int = DEFAULT_BUDGET) -> Cell2D:
    """Boundary radius of the Voronoi cell along ``n_angles`` equispaced rays."""
    _require_planar(basis)
    if n_angles < 64:
        raise ValueError("n_angles must be at least 64")
    params = lattice_params(basis, norm, budget)
    mu = params.mu_upper
    # every weak relevant vector is this short, and the closed cell lies in the mu-ball
    cands = nonzero(enumerate_in_ball(basis, norm, None, 2.0 * mu, budget))
    W = np.array([w.coords for w in cands])
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles
    D = np.column_stack([np.cos(angles), np.sin(angles)])
    hi = 1.01 * mu * norm.from_euclid_factor(2) + 1e-9
    tol = 1e-12 * max(1.0, mu)
    r_in = _radial_bisection(norm, D, W, hi, lambda g: g < -tol)
    r_out = _radial_bisection(norm, D, W, hi, lambda g: g <= tol)
    G = cell_margins(norm, r_in[:, None] * D, W)
    samples = []
    for i in range(n_angles):
        ties = tuple(cands[j] for j in np.flatnonzero(np.abs(G[i]) <= TIE_TOL))
        samples.append(CellSample(float(angles[i]), float(r_in[i]), float(max(r_out[i], r_in[i])), ties))
    return Cell2D(basis, norm, tuple(samples), tuple(cands), mu)


def circular_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """(start, length) of each maximal run of True, wrapping around the end."""
    n = mask.size
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    start = int(np.flatnonzero(~mask)[0]) + 1
    runs, i = [], 0
    while i < n:
        j = (start + i) % n
        if mask[j]:
            length = 0
            while length < n and mask[(j + length) % n]:
                length += 1
            runs.append((j, length))
            i += length
        else:
            i += 1
    return runs


def extract_facets(cell: Cell2D, min_run: int = MIN_RUN) -> list[Facet]:
    """Angular runs of at least ``min_run`` samples sharing a tie generator.

    A run lying strictly inside another generator's run is a bisector piece
    swallowed by a genuine facet and is dropped.
    """
    n = cell.n_angles
    step = 2.0 * math.pi / n
    gens = sorted({w for s in cell.samples for w in s.tie_set})
    runs = []
    for g in gens:
        mask = np.array([g in s.tie_set for s in cell.samples])
        for start, length in circular_runs(mask):
            if length >= min_run:
                runs.append((g, start, length))

    def cover(start, length):
        return {(start + t) % n for t in range(length)}

    covers = [cover(s, l) for _, s, l in runs]
    keep = []
    for i, (g, s, l) in enumerate(runs):
        swallowed = any(h != g and covers[i] < covers[j] for j, (h, _, _) in enumerate(runs))
        if not swallowed:
            keep.append((g, s, l))
    facets = []
    for g, group in itertools.groupby(sorted(keep, key=lambda t: t[0]), key=lambda t: t[0]):
        group = list(group)
        intervals = tuple((s * step, ((s + l - 1) % n) * step) for _, s, l in group)
        facets.append(Facet(g, intervals, sum(l for _, _, l in group)))
    return facets


def classify_planar(cell: Cell2D, budget: int = DEFAULT_BUDGET) -> list[WitnessResult]:
    """Grid-mode classification from the traced boundary; works for every ℓp.

    A boundary point tied with exactly one lattice vector witnesses relevance,
    a point tied with several witnesses weak relevance.  Each witness is moved
    onto the exact bisector and re-certified.  Vectors never seen in a tie set
    are reported NotRelevant, which is only as good as the angular sampling.
    """
    norm, basis = cell.norm, cell.basis
    W = np.array([w.coords for w in cell.candidates])
    probes: dict[LatticeVector, list[tuple[int, np.ndarray]]] = {}
    for s in cell.samples:
        d = s.direction
        for lam in sorted({s.radius, 0.5 * (s.radius + s.outer_radius), s.outer_radius}):
            x = lam * d
            g = cell_margins(norm, x, W)[0]
            ties = np.flatnonzero(np.abs(g) <= TIE_TOL)
            if ties.size and g.max() <= TIE_TOL:
                for j in ties:
                    probes.setdefault(cell.candidates[j], []).append((ties.size, x))
    results = []
    for v in cell.candidates:
        best = None
        found = probes.get(v, [])
        single = [x for n_ties, x in found if n_ties == 1][:3]
        multi = [x for n_ties, x in found if n_ties > 1][:1]
        for x in single + multi:
            r = witness_search(basis, norm, v, witness=_onto_bisector(norm, v.x, x), budget=budget)
            if r.status == Status.RELEVANT:
                best = r
                break
            if r.status == Status.WEAK_ONLY and best is None:
                best = r
        results.append(best or WitnessResult(v, Status.NOT_RELEVANT, None, math.nan))
    return results


def _onto_bisector(norm: NormSpec, v: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Nudge x along v until ``||x|| = ||x - v||`` to rounding accuracy."""
    lo, hi = -1e-6, 1e-6
    f = lambda t: norm(x + t * v) - norm(x + t * v - v)
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        return x
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return x + mid * v
        lo, hi = (mid, hi) if fm < 0 else (lo, mid)
    return x + 0.5 * (lo + hi) * v


def check_4or6(basis: Basis, norm: NormSpec, n_angles: int = 720,
               search: SearchParams | None = None, *, report: RelevantReport | None = None,
               cell: Cell2D | None = None) -> int:
    """Relevant-vector count of a strictly convex planar cell; must be 4 or 6 and match the facets.

    ``report`` and ``cell`` may be passed in when they are already computed.
    """
    _require_planar(basis)
    if not norm.strictly_convex:
        raise NonConvexNormRouting(f"{norm.label()} is not strictly convex")
    report = report or enumerate_relevant(basis, norm, search)
    cell = cell or trace_cell2d(basis, norm, n_angles)
    relevant = set(report.relevant)
    generators = {f.generator for f in extract_facets(cell)}
    count = len(relevant)
    payload = {"relevant": sorted(v.coeffs for v in relevant),
               "facet_generators": sorted(v.coeffs for v in generators)}
    if count not in (4, 6) or count % 2:
        raise CountViolation(f"{count} relevant vectors, expected 4 or 6", payload)
    if relevant != generators:
        raise CountViolation("facet generators differ from relevant vectors", payload)
    return count


# -- exact ℓ1 examples ----------------------------------------------------------------

def _l1(v) -> Fraction:
    return sum((abs(Fraction(t)) for t in v), Fraction(0))


def _sub(a, b):
    return tuple(Fraction(p) - Fraction(q) for p, q in zip(a, b))


@dataclass(frozen=True)
class L1FamilyReport:
    m: int
    witnessed_weak: tuple[LatticeVector, ...]
    witnesses: tuple[tuple[Fraction, Fraction], ...]

    @property
    def count(self) -> int:
        return len(self.witnessed_weak)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "count": self.count,
            "lower_bound": 4 * (self.m // 2) + 2,
            "vectors": [
                {"coeffs": list(v.coeffs), "coords": [int(c) for c in v.coords],
                 "witness": [str(t) for t in x]}
                for v, x in zip(self.witnessed_weak, self.witnesses)
            ],
        }


def l1_family_weak_relevant(m: int) -> L1FamilyReport:
    """Weak ℓ1-relevant vectors of L((1,1), (0,m)) found with the witness (0, m/2).

    Vectors ``(z1, z1 + m z2)`` with z2 = 0, 0 < z1 <= m/2 or z2 = 1, -m/2 <= z1 <= 0
    are witnessed by x = (0, m/2) directly; their negatives by ``x - v``.
    Every check is exact: the witness must be equidistant from 0 and v and no
    lattice point with coefficients in [-m, m]^2 may be strictly closer.
    """
    if int(m) != m or m < 3 or m % 2 == 0:
        raise ValueError(f"m must be an odd integer >= 3, got {m!r}")
    m = int(m)
    basis = make_basis(np.array([[1, 0], [1, m]]))
    half = m // 2
    x = (Fraction(0), Fraction(m, 2))
    pts = [(z1, z1 + m * z2) for z1 in range(-m, m + 1) for z2 in range(-m, m + 1)]
    direct = [(z1, 0) for z1 in range(1, half + 1)] + [(z1, 1) for z1 in range(-half, 1)]

    def weakly_witnessed(y, v) -> bool:
        r = _l1(y)
        if r != _l1(_sub(y, v)):
            return False
        return all(_l1(_sub(y, w)) >= r for w in pts)

    found: list[tuple[LatticeVector, tuple]] = []
    for z in direct:
        v = basis.vector(z)
        vc = (z[0], z[0] + m * z[1])
        if weakly_witnessed(x, vc):
            found.append((v, x))
        y = _sub(x, vc)  # witnesses -v
        if weakly_witnessed(y, tuple(-c for c in vc)):
            found.append((-v, y))
    found.sort(key=lambda t: t[0])
    return L1FamilyReport(m, tuple(v for v, _ in found), tuple(w for _, w in found))


@dataclass(frozen=True)
class L1CounterexampleReport:
    point: tuple[Fraction, Fraction]
    norm: Fraction
    relevant_distances: dict
    closer_point: tuple[int, int]
    closer_distance: Fraction

    @property
    def satisfies_relevant_constraints(self) -> bool:
        return all(d > self.norm for d in self.relevant_distances.values())

    @property
    def outside_cell(self) -> bool:
        return self.closer_distance < self.norm


def l1_counterexample_check(point=(Fraction(7, 8), Fraction(-7, 8)),
                            relevant=((1, 1), (-1, -1))) -> L1CounterexampleReport:
    """Exact check, on L((1,1),(0,3)) under ℓ1, that the halfspaces of the strictly
    relevant vectors alone do not cut out the cell."""
    p = tuple(Fraction(t) for t in point)
    r = _l1(p)
    dists = {tuple(v): _l1(_sub(p, v)) for v in relevant}
    pts = [(z1, z1 + 3 * z2) for z1 in range(-6, 7) for z2 in range(-6, 7) if (z1, z2) != (0, 0)]
    best = min(pts, key=lambda w: (_l1(_sub(p, w)), w))
    return L1CounterexampleReport(p, r, dists, best, _l1(_sub(p, best)))
