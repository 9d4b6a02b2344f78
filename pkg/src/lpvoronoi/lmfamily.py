"""A family of 3D lattices whose ℓ3 Voronoi cells have ever more facets.

``L_m`` is spanned by two orthonormal vectors b1, b2 lying in a tilted plane
and a very long third vector b3 perpendicular to that plane.  For every
integer ``2 <= k <= sqrt(m)`` the vector ``b1 + k*b2`` is ℓ3-relevant, with
an explicit witness point.  This module builds the lattice and checks the
inequalities behind that statement numerically:

* off-plane: lattice points outside the plane of b1, b2 are too far away;
* in-plane: on a window of integer coefficients ``f(z1, z2) > f(0, 0)``, where
  ``f(r1, r2) = ||r1*b1 + r2*b2 - x||_3^3``; since f is strictly convex with its
  minimum inside the window, the window boundary certifies the tail.

binary64 with compensated sums is used up to ``m = 25`` and mpmath beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import ClaimViolated, KOutOfRange
from .lattice import Basis, make_basis
from .norms import SQRT2, NormSpec, distance_to_plane_l3

L3 = NormSpec(3)
EXTENDED_DPS = 60
SPEC_REL_SLACK = 1e-6
EXTENDED_ABOVE_M = 25


@dataclass(frozen=True, eq=False)
class LmInstance:
    m: int
    M: float
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    basis: Basis
    numeric: str = "binary64"

    @property
    def extended(self) -> bool:
        return self.numeric == "extended"

    @property
    def max_k(self) -> int:
        return math.isqrt(self.m)


def build_lm(m: int, numeric: str = "auto") -> LmInstance:
    if int(m) != m or m < 2:
        raise KOutOfRange(f"m must be an integer >= 2, got {m!r}")
    m = int(m)
    if numeric == "auto":
        numeric = "extended" if m > EXTENDED_ABOVE_M else "binary64"
    if numeric not in ("binary64", "extended"):
        raise ValueError(f"numeric mode must be 'auto', 'binary64' or 'extended', got {numeric!r}")
    s = math.sqrt(m * m + 1)
    M = 5.0 * SQRT2 * m**5
    b1 = np.array([m / SQRT2, 1.0, -m / SQRT2]) / s
    b2 = np.array([-1.0 / SQRT2, float(m), 1.0 / SQRT2]) / s
    b3 = (M / SQRT2) * np.array([1.0, 0.0, 1.0])
    basis = make_basis(np.column_stack([b1, b2, b3]))
    return LmInstance(m, M, b1, b2, b3, basis, numeric)


# -- the witness and f, generic over float / mpf -------------------------------------

class _Binary64:
    name = "binary64"

    @staticmethod
    def num(x):
        return float(x)

    sqrt = staticmethod(math.sqrt)
    fsum = staticmethod(math.fsum)

    @staticmethod
    def rel_eps() -> float:
        # a handful of roundings per term, each <= 2^-53
        return 2.0**8 * np.finfo(float).eps


class _Extended:
    name = "extended"

    @staticmethod
    def num(x):
        return mpmath.mpf(x)

    sqrt = staticmethod(mpmath.sqrt)
    fsum = staticmethod(mpmath.fsum)

    @staticmethod
    def rel_eps() -> float:
        return 10.0 ** -(EXTENDED_DPS - 10)


def _arith(inst: LmInstance):
    return _Extended if inst.extended else _Binary64


def _alpha(ar, m: int, k: int):
    # shift of the witness along (1, 0, 1)
    return (ar.num(k * k) / 4 + ar.num(1) / 3) * m


def _witness_components(ar, m: int, k: int):
    s = ar.sqrt(ar.num(m * m + 1))
    a = _alpha(ar, m, k)
    r2 = ar.sqrt(ar.num(2))
    return ((m - k) / (2 * r2 * s) + a, ar.num(k * m + 1) / (2 * s), (k - m) / (2 * r2 * s) + a)


def _f(ar, m: int, k: int, r1, r2):
    """``||r1 b1 + r2 b2 - x||_3^3`` written in the b1/b2 plane coordinates."""
    s = ar.sqrt(ar.num(m * m + 1))
    a = _alpha(ar, m, k)
    r1, r2 = ar.num(r1), ar.num(r2)
    u = (2 * r1 * m - 2 * r2 - m + k) / (2 * ar.sqrt(ar.num(2)) * s)
    d2 = (2 * r1 + 2 * r2 * m - k * m - 1) / (2 * s)
    return ar.fsum([abs(u - a) ** 3, abs(d2) ** 3, abs(u + a) ** 3])


def _check_k(inst: LmInstance, k: int, upper: int):
    if int(k) != k or not 2 <= k <= upper:
        raise KOutOfRange(f"k must be an integer in [2, {upper}] for m={inst.m}, got {k!r}")


@dataclass(frozen=True)
class LmWitness:
    m: int
    k: int
    x: np.ndarray

    @property
    def v(self) -> tuple[int, int, int]:
        return (1, self.k, 0)


def witness_xmk(inst: LmInstance, k: int) -> LmWitness:
    _check_k(inst, k, inst.m)
    x = np.array([float(c) for c in _witness_components(_Binary64, inst.m, int(k))])
    return LmWitness(inst.m, int(k), x)


def f_value(inst: LmInstance, k: int, r1, r2):
    """Cubed ℓ3 distance from ``r1*b1 + r2*b2`` to the witness; mpf in extended mode."""
    _check_k(inst, k, inst.m)
    if inst.extended:
        with mpmath.workdps(EXTENDED_DPS):
            return +_f(_Extended, inst.m, int(k), r1, r2)
    return _f(_Binary64, inst.m, int(k), r1, r2)


# -- verification records ----------------------------------------------------------

@dataclass(frozen=True)
class Inequality:
    """``lhs < rhs``, decided with a rounding allowance ``tolerance``."""

    label: str
    lhs: float
    rhs: float
    abs_slack: float
    rel_slack: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.abs_slack > self.tolerance

    @property
    def meets_slack_floor(self) -> bool:
        return self.rel_slack > SPEC_REL_SLACK

    def to_json(self) -> dict:
        return {"label": self.label, "lhs": self.lhs, "rhs": self.rhs, "abs_slack": self.abs_slack,
                "rel_slack": self.rel_slack, "holds": self.holds}


def _ineq(ar, label: str, lhs, rhs) -> Inequality:
    diff = rhs - lhs
    scale = max(abs(lhs), abs(rhs))
    return Inequality(label, float(lhs), float(rhs), float(diff), float(diff / abs(lhs)),
                      float(ar.rel_eps() * scale))


@dataclass(frozen=True)
class VerificationRecord:
    claim: str
    m: int
    k: int
    numeric: str
    inequalities: tuple[Inequality, ...]
    notes: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(q.holds for q in self.inequalities)

    @property
    def min_rel_slack(self) -> float:
        return min(q.rel_slack for q in self.inequalities)

    @property
    def meets_slack_floor(self) -> bool:
        return all(q.meets_slack_floor for q in self.inequalities)

    def worst(self) -> Inequality:
        return min(self.inequalities, key=lambda q: q.rel_slack)

    def to_json(self, full: bool = False) -> dict:
        out = {"claim": self.claim, "m": self.m, "k": self.k, "numeric": self.numeric,
               "holds": self.holds, "checked": len(self.inequalities),
               "min_rel_slack": self.min_rel_slack, "meets_1e-6_slack": self.meets_slack_floor,
               "worst": self.worst().to_json(), **self.notes}
        if full:
            out["inequalities"] = [q.to_json() for q in self.inequalities]
        return out


def _raise_if_failed(rec: VerificationRecord):
    bad = [q for q in rec.inequalities if not q.holds]
    if bad:
        raise ClaimViolated(f"{rec.claim} claim fails for m={rec.m}, k={rec.k}: {bad[0].label}",
                            {"record": rec.to_json(), "failed": [q.to_json() for q in bad]})


def verify_claim_offplane(inst: LmInstance, k: int) -> VerificationRecord:
    """Lattice points off the b1/b2 plane are farther from x than 0 is."""
    _check_k(inst, k, inst.max_k)
    ar, m = _arith(inst), inst.m
    with mpmath.workdps(EXTENDED_DPS):
        x_cubed = _f(ar, m, k, 0, 0)
        x = _witness_components(ar, m, k)
        bound_in = 4 * ar.num(m) ** 15
        bound_out = 200 * ar.num(m) ** 15
        M = 5 * ar.sqrt(ar.num(2)) * ar.num(m) ** 5
        ineqs = [_ineq(ar, "||x||^3 < 4 m^15", x_cubed, bound_in)]
        for z3 in (1, -1):
            layer = ar.num(0.25) * abs(ar.sqrt(ar.num(2)) * M * z3 - x[0] - x[2]) ** 3
            ineqs.append(_ineq(ar, f"200 m^15 <= layer(z3={z3:+d})", bound_out, layer))
            ineqs.append(_ineq(ar, f"||x||^3 < layer(z3={z3:+d})", x_cubed, layer))
    # the float closed form of the plane distance must agree
    xf = np.array([float(c) for c in x])
    pd = distance_to_plane_l3(inst.M, xf).cubed_distance
    notes = {"plane_distance_check": float(abs(pd - float(ineqs[1].rhs)) / float(ineqs[1].rhs))}
    rec = VerificationRecord("offplane", m, k, ar.name, tuple(ineqs), notes)
    _raise_if_failed(rec)
    return rec


def window_box(k: int, window: int) -> tuple[range, range]:
    return range(-window, window + 2), range(k - window * (k + 2), window * (k + 2) + 1)


def _golden_min(fun, lo, hi, iters: int = 120):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    ends = [(fun(lo), lo), (fun(hi), hi), (fc, c), (fd, d)]
    return min(ends, key=lambda t: t[0])


def verify_claims_inplane(inst: LmInstance, k: int, window: int = 6) -> VerificationRecord:
    """f(0,0) < f(z1,z2) on the integer window, plus the convex-tail certificate."""
    _check_k(inst, k, inst.max_k)
    if int(window) != window or window < 2:
        raise ValueError("window must be an integer >= 2")
    ar, m = _arith(inst), inst.m
    Z1, Z2 = window_box(k, window)
    with mpmath.workdps(EXTENDED_DPS):
        vals = {(a, b): _f(ar, m, k, a, b) for a in Z1 for b in Z2}
        f0 = vals[(0, 0)]
        ineqs = [_ineq(ar, f"f(0,0) < f({a},{b})", f0, fv)
                 for (a, b), fv in vals.items() if (a, b) not in ((0, 0), (1, k))]
        sym = abs(vals[(1, k)] - f0)
        if not sym <= ar.rel_eps() * abs(f0):
            raise ClaimViolated(f"f(1,k) != f(0,0) for m={m}, k={k}", {"difference": float(sym)})
        # outward increase on the boundary, relative to the inward neighbour
        lo1, hi1, lo2, hi2 = Z1[0], Z1[-1], Z2[0], Z2[-1]
        for (a, b) in vals:
            steps = []
            if a == lo1:
                steps.append((1, 0))
            if a == hi1:
                steps.append((-1, 0))
            if b == lo2:
                steps.append((0, 1))
            if b == hi2:
                steps.append((0, -1))
            for da, db in steps:
                q = (a + da, b + db)
                ineqs.append(_ineq(ar, f"f{q} < f({a},{b}) outward", vals[q], vals[(a, b)]))
        # continuous minimum of f along each box edge; by convexity this bounds
        # f from below everywhere outside the box
        edges = {
            f"z1={lo1}": lambda t: _f(ar, m, k, lo1, t),
            f"z1={hi1}": lambda t: _f(ar, m, k, hi1, t),
            f"z2={lo2}": lambda t: _f(ar, m, k, t, lo2),
            f"z2={hi2}": lambda t: _f(ar, m, k, t, hi2),
        }
        spans = {f"z1={lo1}": (lo2, hi2), f"z1={hi1}": (lo2, hi2),
                 f"z2={lo2}": (lo1, hi1), f"z2={hi2}": (lo1, hi1)}
        for name, fun in edges.items():
            lo, hi = spans[name]
            fmin, _ = _golden_min(fun, ar.num(lo), ar.num(hi))
            ineqs.append(_ineq(ar, f"f(0,0) < min f on edge {name}", f0, fmin))
    notes = {"window": window, "box_z1": [Z1[0], Z1[-1]], "box_z2": [Z2[0], Z2[-1]],
             "symmetry_residual": float(sym / abs(f0))}
    rec = VerificationRecord("inplane", m, k, ar.name, tuple(ineqs), notes)
    _raise_if_failed(rec)
    return rec


@dataclass(frozen=True)
class TheoremReport:
    m: int
    M: float
    certified_k: tuple[int, ...]
    records: tuple[VerificationRecord, ...]
    numeric: str

    @property
    def count(self) -> int:
        return len(self.certified_k)

    @property
    def min_rel_slack(self) -> float:
        return min(r.min_rel_slack for r in self.records) if self.records else math.inf

    @property
    def meets_slack_floor(self) -> bool:
        return all(r.meets_slack_floor for r in self.records)

    def to_json(self, full: bool = False) -> dict:
        return {"m": self.m, "M": self.M, "numeric": self.numeric, "certified_k": list(self.certified_k),
                "count": self.count, "min_rel_slack": self.min_rel_slack,
                "meets_1e-6_slack": self.meets_slack_floor,
                "records": [r.to_json(full) for r in self.records]}


def verify_theorem_main(m: int, window: int = 6, numeric: str = "auto") -> TheoremReport:
    """Certify ``b1 + k b2`` relevant for every ``2 <= k <= sqrt(m)``."""
    inst = build_lm(m, numeric)
    if inst.max_k < 2:
        raise KOutOfRange(f"need sqrt(m) >= 2, got m={m}")
    records, certified = [], []
    for k in range(2, inst.max_k + 1):
        off = verify_claim_offplane(inst, k)
        inp = verify_claims_inplane(inst, k, window)
        records += [off, inp]
        if off.holds and inp.holds:
            certified.append(k)
    return TheoremReport(inst.m, inst.M, tuple(certified), tuple(records), inst.numeric)
