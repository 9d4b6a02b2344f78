"""Acceptance suite: one or more tests per numbered criterion.

Each test carries ``@pytest.mark.criterion(n)``; the terminal summary hook in
conftest prints one PASS/FAIL line per criterion.
"""

import math
import time
from fractions import Fraction
from functools import cache

import numpy as np
import pytest
from scipy.optimize import minimize

from lpvoronoi import (
    NormSpec,
    Status,
    check_4or6,
    classify_planar,
    cvp_bruteforce,
    cvp_walk_euclidean,
    distance_to_plane_l3,
    enumerate_relevant,
    euclidean_relevant_oracle,
    extract_facets,
    l1_counterexample_check,
    l1_family_weak_relevant,
    lattice_params,
    make_basis,
    trace_cell2d,
    verify_theorem_main,
)
from lpvoronoi.norms import R_Y

from .conftest import random_integer_bases

L1, L2 = NormSpec(1), NormSpec(2)
HEX = make_basis(np.array([[1, 0], [1, 3]]))
Z2 = make_basis(np.eye(2))
PLANAR = [Z2, HEX] + random_integer_bases(404, 10, dims=(2,))
PLANAR_IDS = ["Z2", "hex"] + [f"rand{i}" for i in range(10)]
ORACLE_BASES = random_integer_bases(505, 20)
P_VALUES = (1.5, 2.0, 3.0)


@cache
def theorem(m):
    t0 = time.perf_counter()
    rep = verify_theorem_main(m)
    return rep, time.perf_counter() - t0


@cache
def planar_run(i, p):
    basis, norm = PLANAR[i], NormSpec(p)
    t0 = time.perf_counter()
    rep = enumerate_relevant(basis, norm)
    cell = trace_cell2d(basis, norm, 720)
    count = check_4or6(basis, norm, 720, report=rep, cell=cell)
    return rep, cell, count, time.perf_counter() - t0


@cache
def oracle_run(i):
    basis = ORACLE_BASES[i]
    t0 = time.perf_counter()
    rep = enumerate_relevant(basis, L2)
    oracle = euclidean_relevant_oracle(basis)
    return rep, oracle, time.perf_counter() - t0


# -- 1 ----------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_c1_counts_and_certificates():
    total = 0.0
    for m, want in zip((4, 9, 16, 25), (1, 2, 3, 4)):
        rep, dt = theorem(m)
        total += dt
        assert rep.numeric == "binary64"
        assert rep.certified_k == tuple(range(2, 2 + want))
        assert all(r.holds for r in rep.records)
    assert total < 30.0


@pytest.mark.criterion(1)
@pytest.mark.parametrize("m", [4, 9, 16, 25])
def test_c1_relative_slack(m):
    # Fails at m = 25: the in-plane gap f(0,1) - f(0,0) is 4.6e-7 relative for k = 5.
    rep, _ = theorem(m)
    worst = rep.min_rel_slack
    assert rep.meets_slack_floor, f"min relative slack {worst:.3g} <= 1e-6"


# -- 2 ----------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_c2_strictly_increasing_counts():
    t0 = time.perf_counter()
    counts = [theorem(m)[0].count for m in (4, 9, 16, 25)]
    big = verify_theorem_main(36)
    counts.append(big.count)
    assert big.numeric == "extended"
    assert counts == [1, 2, 3, 4, 5]
    assert all(a < b for a, b in zip(counts, counts[1:]))
    assert time.perf_counter() - t0 < 120.0


# -- 3 ----------------------------------------------------------------------

def _l1f(a, b):
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@pytest.mark.criterion(3)
def test_c3_l1_family():
    t0 = time.perf_counter()
    for m, want in ((3, 6), (5, 10), (9, 18)):
        rep = l1_family_weak_relevant(m)
        assert rep.count >= want
        pts = [(z1, z1 + m * z2) for z1 in range(-3 * m, 3 * m + 1) for z2 in range(-3, 4)]
        for v, x in zip(rep.witnessed_weak, rep.witnesses):
            assert all(isinstance(t, Fraction) for t in x)
            vc = tuple(int(c) for c in v.coords)
            r = _l1f(x, (0, 0))
            assert r == Fraction(m, 2) and _l1f(x, vc) == r
            assert all(_l1f(x, w) >= r for w in pts)
    assert time.perf_counter() - t0 < 5.0


# -- 4 ----------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("p", P_VALUES)
@pytest.mark.parametrize("i", range(len(PLANAR)), ids=PLANAR_IDS)
def test_c4_planar_counts(i, p):
    rep, cell, count, _ = planar_run(i, p)
    assert count in (4, 6) and count % 2 == 0
    assert rep.counts[2] == 0
    assert count == len(rep.relevant) == len(extract_facets(cell))
    if p == 2.0 and i == 0:
        assert count == 4
    if p == 2.0 and i == 1:
        assert count == 6


@pytest.mark.criterion(4)
def test_c4_runtime():
    total = sum(planar_run(i, p)[3] for i in range(len(PLANAR)) for p in P_VALUES)
    assert total < 120.0


# -- 5 ----------------------------------------------------------------------

@pytest.mark.criterion(5)
@pytest.mark.parametrize("i", range(len(ORACLE_BASES)))
def test_c5_oracle_agreement(i):
    rep, oracle, _ = oracle_run(i)
    assert rep.counts[2] == 0
    assert {v.coeffs for v in rep.relevant} == {v.coeffs for v in oracle.relevant}


@pytest.mark.criterion(5)
def test_c5_runtime():
    assert sum(oracle_run(i)[2] for i in range(len(ORACLE_BASES))) < 180.0


# -- 6 ----------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("m", [3, 5, 9])
def test_c6_bound_l1_family(m):
    basis = make_basis(np.array([[1, 0], [1, m]]))
    results = classify_planar(trace_cell2d(basis, L1, 720))
    n_weak = sum(r.status in (Status.RELEVANT, Status.WEAK_ONLY) for r in results)
    bound = lattice_params(basis, L1).packing_bound(2)
    assert l1_family_weak_relevant(m).count <= bound
    assert n_weak <= bound


@pytest.mark.criterion(6)
@pytest.mark.parametrize("p", P_VALUES)
@pytest.mark.parametrize("i", range(len(PLANAR)), ids=PLANAR_IDS)
def test_c6_bound_planar(i, p):
    rep = planar_run(i, p)[0]
    rel, weak, _ = rep.counts
    assert rel + weak <= rep.packing_bound


@pytest.mark.criterion(6)
@pytest.mark.parametrize("i", range(len(ORACLE_BASES)))
def test_c6_bound_oracle(i):
    rep = oracle_run(i)[0]
    rel, weak, _ = rep.counts
    assert rel + weak <= rep.packing_bound


# -- 7 ----------------------------------------------------------------------

def _numeric_cubed_distance(C, v):
    # minimize ||v - R_y (s1, s2, C)||_3^3 over the plane coordinates
    P = R_Y[:, :2]
    q = np.asarray(v, float) - C * R_Y[:, 2]
    obj = lambda s: float(np.sum(np.abs(q - P @ s) ** 3))
    s0 = np.linalg.lstsq(P, q, rcond=None)[0]
    res = minimize(obj, s0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return res.fun


@pytest.mark.criterion(7)
def test_c7_plane_distance_oracle():
    rng = np.random.default_rng(37)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        C = rng.uniform(-5, 5)
        v = rng.uniform(-5, 5, size=3)
        closed = distance_to_plane_l3(C, v).cubed_distance
        num = _numeric_cubed_distance(C, v)
        worst = max(worst, abs(closed - num) / max(abs(num), 1e-300))
    assert worst < 1e-6
    assert time.perf_counter() - t0 < 10.0


# -- 8 ----------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_c8_l1_counterexample():
    rep = l1_counterexample_check()
    x = (Fraction(7, 8), Fraction(-7, 8))
    assert rep.point == x and rep.norm == Fraction(7, 4)
    # both strict halfspaces hold
    for v in ((1, 1), (-1, -1)):
        assert _l1f(x, v) > _l1f(x, (0, 0))
    assert rep.satisfies_relevant_constraints
    # but some lattice point is strictly closer
    assert rep.outside_cell
    w = rep.closer_point
    assert (w[1] - w[0]) % 3 == 0 and _l1f(x, w) < _l1f(x, (0, 0))


# -- 9 ----------------------------------------------------------------------

CVP_LATTICES = [Z2, HEX, make_basis(np.eye(3)),
                make_basis(np.array([[2, 1, 0], [0, 3, 1], [1, 0, 2]])),
                make_basis(np.array([[1, 0.5], [0, math.sqrt(3) / 2]]))]


@pytest.mark.criterion(9)
def test_c9_cvp_walk_matches_bruteforce():
    rng = np.random.default_rng(909)
    t0 = time.perf_counter()
    for basis in CVP_LATTICES:
        rel = euclidean_relevant_oracle(basis).relevant
        scale = float(np.abs(basis.matrix).sum())
        for _ in range(100):
            t = rng.uniform(-scale, scale, size=basis.dim)
            a = cvp_bruteforce(basis, L2, t)
            b = cvp_walk_euclidean(basis, t, rel, L2)
            assert L2(t - b.x) == pytest.approx(L2(t - a.x), rel=1e-12, abs=1e-12)
    assert time.perf_counter() - t0 < 30.0
