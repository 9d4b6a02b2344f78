"""Voronoi-relevant and weak Voronoi-relevant vectors under ℓp norms.

A nonzero lattice vector v is *relevant* if some x on the bisector of 0 and v
is strictly closer to 0 (and v) than to every other lattice point, and *weak
relevant* if that holds with non-strict inequality.  Positive answers carry a
witness point that is re-checked against every lattice point near it, so
``Relevant`` and ``WeakOnly`` are certificates.  ``NotRelevant`` only means the
search did not find a witness.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NonConvexNormRouting, NotEuclidean
from .lattice import (
    DEFAULT_BUDGET,
    Basis,
    LatticeParams,
    LatticeVector,
    covering_radius_upper,
    enumerate_in_ball,
    lattice_params,
    make_basis,
    nonzero,
)
from .norms import NormSpec

TOL = 1e-9


class Status(str, enum.Enum):
    RELEVANT = "Relevant"
    WEAK_ONLY = "WeakOnly"
    NOT_RELEVANT = "NotRelevant"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SearchParams:
    grid_points: int = 33
    rounds: int = 3
    shrink: float = 0.2
    step_tol: float = 1e-10
    random_starts: int = 2
    seed: int = 0
    polish: bool = True


@dataclass(frozen=True)
class WitnessResult:
    vector: LatticeVector
    status: Status
    witness: tuple[float, ...] | None
    margin: float
    bisector_residual: float = math.nan

    def to_json(self) -> dict:
        return {
            "coeffs": list(self.vector.coeffs),
            "status": self.status.value,
            "witness": None if self.witness is None else list(self.witness),
            "margin": None if math.isnan(self.margin) else self.margin,
        }


@dataclass(frozen=True)
class RelevantReport:
    basis: Basis
    norm: NormSpec
    params: LatticeParams
    candidate_radius: float
    results: tuple[WitnessResult, ...]
    mode: str = "search"

    def with_status(self, *statuses: Status) -> list[LatticeVector]:
        return [r.vector for r in self.results if r.status in statuses]

    @property
    def relevant(self) -> list[LatticeVector]:
        return self.with_status(Status.RELEVANT)

    @property
    def weak_only(self) -> list[LatticeVector]:
        return self.with_status(Status.WEAK_ONLY)

    @property
    def counts(self) -> tuple[int, int, int]:
        c = {s: 0 for s in Status}
        for r in self.results:
            c[r.status] += 1
        return c[Status.RELEVANT], c[Status.WEAK_ONLY], c[Status.UNDECIDED]

    @property
    def packing_bound(self) -> float:
        return self.params.packing_bound(self.basis.dim)

    def to_json(self) -> dict:
        rel, weak, und = self.counts
        return {
            "lattice": self.basis.to_json(),
            "norm": self.norm.label(),
            "lambda1": self.params.lambda1,
            "mu_upper": self.params.mu_upper,
            "candidate_radius": self.candidate_radius,
            "mode": self.mode,
            "counts": {"relevant": rel, "weak_only": weak, "undecided": und},
            "packing_bound": self.packing_bound,
            "results": [r.to_json() for r in self.results],
        }


def _orth_complement(v: np.ndarray) -> np.ndarray:
    n = v.size
    if n == 1:
        return np.zeros((1, 0))
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
    return q[:, 1:n]


def _zigzag(c: int) -> int:
    return 2 * c if c >= 0 else -2 * c - 1


class _BisectorSearch:
    """Minimise the competitor margin over the bisector of 0 and v."""

    def __init__(self, norm: NormSpec, v: np.ndarray, competitors: np.ndarray, mu_upper: float):
        self.norm = norm
        self.v = v
        self.comps = competitors.reshape(-1, v.size)
        self.mu = mu_upper
        self.U = _orth_complement(v)
        self.half = 0.5 * v

    # -- bisector parametrisation -------------------------------------------------
    def _margin_t(self, Y: np.ndarray, t: np.ndarray) -> np.ndarray:
        X = Y + t[:, None] * self.v
        return self.norm(X) - self.norm(X - self.v)

    def project(self, S: np.ndarray) -> np.ndarray:
        """Move each base point ``v/2 + U s`` along v onto the bisector."""
        S = np.atleast_2d(S)
        Y = self.half + S @ self.U.T
        P = Y.shape[0]
        T = 1.0
        for _ in range(80):
            lo = self._margin_t(Y, np.full(P, -T))
            hi = self._margin_t(Y, np.full(P, T))
            if np.all(lo < 0) and np.all(hi > 0):
                break
            T *= 2.0
        # coarse scan for the first sign change, then Illinois steps
        K = 16
        ts = np.linspace(-T, T, K + 1)
        Xs = Y[:, None, :] + ts[None, :, None] * self.v
        G = self.norm(Xs) - self.norm(Xs - self.v)
        first = np.clip(np.argmax(G >= 0, axis=1), 1, K)
        rows = np.arange(P)
        a, b = ts[first - 1], ts[first]
        fa, fb = G[rows, first - 1], G[rows, first]
        side = np.zeros(P, dtype=int)
        ftol = 1e-16 * max(1.0, self.mu)
        wtol = 1e-15 * T
        for _ in range(100):
            done = (b - a <= wtol) | (np.minimum(np.abs(fa), np.abs(fb)) <= ftol)
            if np.all(done):
                break
            denom = fb - fa
            c = (a * fb - b * fa) / np.where(denom != 0, denom, 1.0)
            c = np.where((denom != 0) & (c > a) & (c < b), c, 0.5 * (a + b))
            fc = self._margin_t(Y, c)
            left = (fc < 0) & ~done
            right = (fc >= 0) & ~done
            # Illinois: halve the stale endpoint's value after repeats
            fb = np.where(left & (side == 1), 0.5 * fb, fb)
            fa = np.where(right & (side == -1), 0.5 * fa, fa)
            a = np.where(left, c, a)
            fa = np.where(left, fc, fa)
            b = np.where(right, c, b)
            fb = np.where(right, fc, fb)
            side = np.where(left, 1, np.where(right, -1, side))
        t = np.where(np.abs(fa) < np.abs(fb), a, b)
        return Y + t[:, None] * self.v

    # -- objective ----------------------------------------------------------------
    def competitor_values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.comps.shape[0] == 0:
            return np.full((X.shape[0], 0), -np.inf)
        nx = self.norm(X)
        return nx[:, None] - self.norm(X[:, None, :] - self.comps[None, :, :])

    def margin(self, X: np.ndarray) -> np.ndarray:
        vals = self.competitor_values(X)
        return vals.max(axis=1) if vals.shape[1] else np.full(vals.shape[0], -np.inf)

    def phi(self, X: np.ndarray) -> np.ndarray:
        # points farther than the covering radius bound cannot be witnesses
        return np.maximum(self.margin(X), self.norm(np.atleast_2d(X)) - self.mu)

    def phi_s(self, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = self.project(S)
        return self.phi(X), X

    # -- local refinement ---------------------------------------------------------
    def _directions(self) -> np.ndarray:
        d = self.U.shape[1]
        dirs = [np.eye(d)[i] * s for i in range(d) for s in (1, -1)]
        if d >= 2:
            for i, j in itertools.combinations(range(d), 2):
                for si, sj in itertools.product((1, -1), repeat=2):
                    e = np.zeros(d)
                    e[i], e[j] = si, sj
                    dirs.append(e / math.sqrt(2))
        return np.array(dirs)

    def pattern_search(self, s0: np.ndarray, f0: float, step: float, params: SearchParams):
        D = self._directions()
        s, f = s0.copy(), f0
        stop = params.step_tol * max(1.0, step)
        for _ in range(5000):
            if step < stop:
                break
            cand = s + step * D
            fc, _ = self.phi_s(cand)
            i = int(np.argmin(fc))
            if fc[i] < f:
                s, f = cand[i], float(fc[i])
            else:
                step *= params.shrink
        return s, f

    def polish(self, x0: np.ndarray, f0: float) -> tuple[np.ndarray, float]:
        """Epigraph SLSQP on the active competitors: min tau s.t. each margin <= tau."""
        vals = self.competitor_values(x0)[0]
        band = max(1e-3 * max(self.mu, 1e-12), 10 * abs(f0))
        active = self.comps[vals >= f0 - band] if vals.size else self.comps[:0]
        if active.shape[0] == 0:
            return x0, f0
        norm, v, n = self.norm, self.v, self.v.size

        def eq(z):
            return norm(z[:n]) - norm(z[:n] - v)

        def eq_jac(z):
            return np.append(norm.gradient(z[:n]) - norm.gradient(z[:n] - v), 0.0)

        def ineq(z):
            return z[n] - (norm(z[:n]) - norm(z[:n] - active))

        def ineq_jac(z):
            J = np.empty((active.shape[0], n + 1))
            J[:, :n] = norm.gradient(z[:n] - active) - norm.gradient(z[:n])
            J[:, n] = 1.0
            return J

        cons = [{"type": "eq", "fun": eq, "jac": eq_jac},
                {"type": "ineq", "fun": ineq, "jac": ineq_jac}]
        z0 = np.append(x0, f0)
        try:
            res = minimize(lambda z: z[n], z0, jac=lambda z: np.eye(n + 1)[n], method="SLSQP",
                           constraints=cons,
                           options={"maxiter": 200, "ftol": 1e-15})
        except (ValueError, np.linalg.LinAlgError):
            return x0, f0
        if not np.all(np.isfinite(res.x)):
            return x0, f0
        # snap back onto the bisector and re-evaluate against every competitor
        s = (res.x[:n] - self.half) @ self.U
        fx, X = self.phi_s(s[None, :])
        if fx[0] < f0:
            return X[0], float(fx[0])
        return x0, f0


def _certify(basis: Basis, norm: NormSpec, v: LatticeVector, x: np.ndarray, budget: int) -> float:
    """Margin at x against every lattice point that could possibly compete."""
    nx = norm(x)
    pts = enumerate_in_ball(basis, norm, x, nx + 1.0 * max(nx, 1e-9), budget)
    others = [w for w in pts if not w.is_zero() and w.coeffs != v.coeffs]
    if not others:
        return -math.inf
    W = np.array([w.coords for w in others])
    return float(np.max(nx - norm(x[None, :] - W)))


def _classify(v: LatticeVector, x: np.ndarray | None, margin: float, residual: float) -> Status:
    if x is None or math.isnan(margin):
        return Status.UNDECIDED
    on_bisector = residual <= TOL * max(1.0, float(np.max(np.abs(x))))
    if margin > TOL:
        return Status.NOT_RELEVANT
    if not on_bisector:
        return Status.UNDECIDED
    if margin < -TOL:
        return Status.RELEVANT
    return Status.WEAK_ONLY


def default_competitors(basis: Basis, norm: NormSpec, v: LatticeVector, mu_upper: float,
                        budget: int = DEFAULT_BUDGET) -> list[LatticeVector]:
    """Lattice vectors w != 0, v with ``||w - v/2|| <= ||v/2|| + 2 mu``."""
    half = 0.5 * v.x
    r = norm(half) + 2.0 * mu_upper
    return [w for w in enumerate_in_ball(basis, norm, half, r, budget)
            if not w.is_zero() and w.coeffs != v.coeffs]


def witness_search(basis: Basis, norm: NormSpec, v: LatticeVector,
                   competitors: list[LatticeVector] | None = None,
                   search: SearchParams | None = None, *, witness=None,
                   mu_upper: float | None = None, budget: int = DEFAULT_BUDGET) -> WitnessResult:
    """Decide (weak) relevance of v by minimising the competitor margin on its bisector.

    With ``witness`` given, only that point is checked; this works for every norm.
    """
    if v.is_zero():
        raise ValueError("v must be nonzero")
    search = search or SearchParams()
    vx = v.x
    if witness is not None:
        x = np.asarray(witness, dtype=float)
        residual = abs(norm(x) - norm(x - vx))
        margin = _certify(basis, norm, v, x, budget)
        if competitors:
            W = np.array([w.coords for w in competitors if w.coeffs != v.coeffs and not w.is_zero()])
            if W.size:
                margin = max(margin, float(np.max(norm(x) - norm(x[None, :] - W))))
        if margin == -math.inf:
            margin = -norm(x)  # nothing else within 2||x|| of x
        return WitnessResult(v, _classify(v, x, margin, residual), tuple(x.tolist()), margin, residual)

    if not norm.strictly_convex:
        raise NonConvexNormRouting(
            f"{norm.label()} is not strictly convex; supply a witness or use planar grid mode")

    mu = lattice_params(basis, norm, budget).mu_upper if mu_upper is None else mu_upper
    if competitors is None:
        competitors = default_competitors(basis, norm, v, mu, budget)
    W = np.array([w.coords for w in competitors if w.coeffs != v.coeffs and not w.is_zero()])
    W = W.reshape(-1, basis.dim)
    engine = _BisectorSearch(norm, vx, W, mu)

    n = basis.dim
    half_width = mu * norm.euclid_factor(n)
    d = n - 1
    if d == 0:
        S = np.zeros((1, 0))
        h = 0.0
    else:
        axis = np.linspace(-half_width, half_width, search.grid_points)
        h = axis[1] - axis[0] if axis.size > 1 else half_width
        S = np.array(list(itertools.product(axis, repeat=d)))
    F, X = engine.phi_s(S)

    best_x, best_f = X[int(np.argmin(F))], float(np.min(F))
    if d > 0:
        starts = [S[i] for i in np.argsort(F, kind="stable")[: search.rounds]]
        rng = np.random.default_rng([search.seed] + [_zigzag(c) for c in v.coeffs])
        starts += list(rng.uniform(-half_width, half_width, size=(search.random_starts, d)))
        for s0 in starts:
            f0, _ = engine.phi_s(s0[None, :])
            s1, f1 = engine.pattern_search(s0, float(f0[0]), h, search)
            if f1 < best_f:
                best_f = f1
                best_x = engine.project(s1[None, :])[0]
        if search.polish and best_f < 1e-3 * max(mu, 1e-12):
            best_x, best_f = engine.polish(best_x, best_f)

    residual = abs(norm(best_x) - norm(best_x - vx))
    margin = float(engine.margin(best_x[None, :])[0])
    if best_f <= TOL and margin <= TOL:
        cert = _certify(basis, norm, v, best_x, budget)
        margin = max(margin, cert) if W.size else cert
        if margin == -math.inf:
            margin = -norm(best_x)
    else:
        margin = best_f
    status = _classify(v, best_x, margin, residual)
    return WitnessResult(v, status, tuple(best_x.tolist()), float(margin), residual)


def _leading_positive(v: LatticeVector) -> bool:
    for c in v.coeffs:
        if c:
            return c > 0
    return False


def _mirror(r: WitnessResult) -> WitnessResult:
    # x witnesses v  <=>  x - v witnesses -v
    w = None if r.witness is None else tuple((np.array(r.witness) - r.vector.x).tolist())
    return WitnessResult(-r.vector, r.status, w, r.margin, r.bisector_residual)


def _search_job(args):
    basis, norm, v, comps, search, mu, budget = args
    if all(c % 2 == 0 for c in v.coeffs):
        return _even_result(norm, v, comps)
    return witness_search(basis, norm, v, comps, search, mu_upper=mu, budget=budget)


def _even_result(norm: NormSpec, v: LatticeVector, comps) -> WitnessResult:
    # v in 2Λ: for strictly convex norms ||x - v/2|| < ||x|| on the whole bisector,
    # so v/2 beats 0 everywhere.  Report the margin sampled at x = v/2.
    x = 0.5 * v.x
    W = np.array([w.coords for w in comps])
    margin = float(np.max(norm(x) - norm(x[None, :] - W)))
    return WitnessResult(v, Status.NOT_RELEVANT, None, margin, 0.0)


def enumerate_relevant(basis: Basis, norm: NormSpec, search: SearchParams | None = None, *,
                       threads: int = 1, budget: int = DEFAULT_BUDGET) -> RelevantReport:
    """Classify every nonzero lattice vector of norm at most twice the covering bound.

    Weak relevance forces ``||v|| <= 2 mu``, so nothing outside that ball can
    appear.  For norms that are not strictly convex every candidate is reported
    ``Undecided``; see :func:`lpvoronoi.planar.classify_planar` for 2D.
    """
    search = search or SearchParams()
    params = lattice_params(basis, norm, budget)
    radius = 2.0 * params.mu_upper
    cands = nonzero(enumerate_in_ball(basis, norm, None, radius, budget))
    reps = [v for v in cands if _leading_positive(v)]

    if not norm.strictly_convex:
        results = [WitnessResult(v, Status.UNDECIDED, None, math.nan) for v in cands]
        return RelevantReport(basis, norm, params, radius, tuple(results), mode="undecided")

    jobs = []
    for v in reps:
        comps = [w for w in cands if w.coeffs != v.coeffs]
        jobs.append((basis, norm, v, comps, search, params.mu_upper, budget))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            found = list(ex.map(_search_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        found = [_search_job(j) for j in jobs]
    results = found + [_mirror(r) for r in found]
    results.sort(key=lambda r: r.vector.coeffs)
    return RelevantReport(basis, norm, params, radius, tuple(results))


# -- Euclidean oracle and CVP ------------------------------------------------------

@dataclass(frozen=True)
class CosetOracleResult:
    relevant: frozenset[LatticeVector]
    tied_cosets: tuple[tuple[int, ...], ...] = field(default=())


def euclidean_relevant_oracle(basis: Basis, budget: int = DEFAULT_BUDGET) -> CosetOracleResult:
    """Voronoi's criterion: v is relevant iff ±v are the only shortest vectors of v + 2Λ."""
    n = basis.dim
    l2 = NormSpec(2)
    doubled = make_basis(2.0 * basis.matrix)
    relevant, tied = set(), []
    for c in itertools.product((0, 1), repeat=n):
        if not any(c):
            continue
        bc = basis.coords(c)
        pts = enumerate_in_ball(doubled, l2, -bc, float(np.linalg.norm(bc)), budget)
        coeffs = np.array([np.array(c) + 2 * np.array(p.coeffs) for p in pts])
        vecs = coeffs @ basis.matrix.T
        sq = np.sum(vecs * vecs, axis=1)
        best = sq.min()
        idx = np.flatnonzero(sq <= best * (1 + 1e-9) + 1e-12)
        if idx.size == 2:
            for i in idx:
                relevant.add(basis.vector(coeffs[i]))
        else:
            tied.append(tuple(c))
    return CosetOracleResult(frozenset(relevant), tuple(tied))


def cvp_bruteforce(basis: Basis, norm: NormSpec, target, budget: int = DEFAULT_BUDGET) -> LatticeVector:
    """Closest lattice vector; ties go to the lexicographically smallest coefficients."""
    t = np.asarray(target, dtype=float)
    mu = covering_radius_upper(basis, norm)
    pts = enumerate_in_ball(basis, norm, t, mu, budget)
    d = norm(t[None, :] - np.array([p.coords for p in pts]))
    best = d.min()
    ties = [p for p, di in zip(pts, d) if di <= best + 1e-12 * (1.0 + best)]
    return min(ties)


def cvp_walk_euclidean(basis: Basis, target, relevant, norm: NormSpec | None = None,
                       max_steps: int = 100000) -> LatticeVector:
    """Greedy descent with relevant vectors; stops once t - current lies in the Voronoi cell."""
    if norm is not None and not norm.is_euclidean:
        raise NotEuclidean(f"relevant-vector walk is Euclidean only, got {norm.label()}")
    t = np.asarray(target, dtype=float)
    rel = sorted(relevant)
    R = np.array([v.coords for v in rel])
    RC = np.array([v.coeffs for v in rel], dtype=np.int64)
    z = np.rint(np.linalg.solve(basis.matrix, t)).astype(np.int64)
    for _ in range(max_steps):
        r = t - basis.matrix @ z
        rr = r @ r
        gain = rr - np.sum((r[None, :] - R) ** 2, axis=1)
        i = int(np.argmax(gain))
        if gain[i] <= 1e-12 * (1.0 + rr):
            break
        z = z + RC[i]
    else:
        raise RuntimeError("relevant-vector walk did not terminate")
    return basis.vector(z)
