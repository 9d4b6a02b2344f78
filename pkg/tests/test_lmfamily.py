import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpvoronoi import (
    KOutOfRange,
    NormSpec,
    Status,
    build_lm,
    distance_to_plane_l3,
    f_value,
    verify_claim_offplane,
    verify_claims_inplane,
    verify_theorem_main,
    witness_search,
    witness_xmk,
)
from lpvoronoi.lmfamily import window_box

L3 = NormSpec(3)


# -- independent oracle: rotations applied to the standard basis -------------------

def rotations(m, ctx=np):
    s = ctx.sqrt(m * m + 1)
    r2 = ctx.sqrt(2)
    Rz = [[m / s, -1 / s, 0], [1 / s, m / s, 0], [0, 0, 1]]
    Ry = [[1 / r2, 0, 1 / r2], [0, 1, 0], [-1 / r2, 0, 1 / r2]]
    return Ry, Rz


def oracle_basis(m):
    Ry, Rz = (np.array(a, dtype=float) for a in rotations(m))
    M = 5 * math.sqrt(2) * m**5
    R = Ry @ Rz
    return R[:, 0], R[:, 1], M * R[:, 2]


def oracle_witness_mp(m, k):
    with mpmath.workdps(60):
        Ry, Rz = (mpmath.matrix(a) for a in rotations(mpmath.mpf(m), mpmath))
        R = Ry * Rz
        b1, b2 = R[:, 0], R[:, 1]
        alpha = (mpmath.mpf(k) ** 2 / 4 + mpmath.mpf(1) / 3) * m
        x = (b1 + k * b2) / 2 + mpmath.matrix([alpha, 0, alpha])
        return b1, b2, x


def oracle_f_mp(m, k, r1, r2):
    b1, b2, x = oracle_witness_mp(m, k)
    with mpmath.workdps(60):
        c = r1 * b1 + r2 * b2 - x
        return mpmath.fsum(abs(t) ** 3 for t in c)


# -- construction ---------------------------------------------------------------------

def test_build_m3_values():
    inst = build_lm(3)
    np.testing.assert_allclose(inst.b1, [0.670820, 0.316228, -0.670820], atol=1e-6)
    assert inst.M == pytest.approx(1718.2695, abs=1e-4)


def test_build_m2_b2():
    np.testing.assert_allclose(build_lm(2).b2, [-0.316228, 0.894427, 0.316228], atol=1e-6)


@pytest.mark.parametrize("m", [2, 3, 4, 9, 16, 25, 36])
def test_build_matches_rotations(m):
    inst = build_lm(m)
    b1, b2, b3 = oracle_basis(m)
    np.testing.assert_allclose(inst.b1, b1, atol=1e-14)
    np.testing.assert_allclose(inst.b2, b2, atol=1e-14)
    np.testing.assert_allclose(inst.b3, b3, rtol=1e-14)
    assert np.linalg.norm(inst.b1) == pytest.approx(1, rel=1e-12)
    assert np.linalg.norm(inst.b2) == pytest.approx(1, rel=1e-12)
    assert np.linalg.norm(inst.b3) == pytest.approx(inst.M, rel=1e-12)
    assert abs(inst.b1 @ inst.b2) <= 1e-12
    assert inst.b3[0] == inst.b3[2] and inst.b3[1] == 0


def test_numeric_mode_switch():
    assert build_lm(25).numeric == "binary64"
    assert build_lm(26).numeric == "extended"
    assert build_lm(4, numeric="extended").extended


@pytest.mark.parametrize("m", [1, 0, 2.5])
def test_bad_m(m):
    with pytest.raises(KOutOfRange):
        build_lm(m)


# -- witness and f -------------------------------------------------------------------

@pytest.mark.parametrize("m,k", [(4, 2), (9, 2), (9, 3), (16, 4), (25, 5)])
def test_witness_matches_oracle_and_bisector(m, k):
    inst = build_lm(m)
    w = witness_xmk(inst, k)
    _, _, xo = oracle_witness_mp(m, k)
    np.testing.assert_allclose(w.x, [float(t) for t in xo], rtol=1e-13)
    v = inst.b1 + k * inst.b2
    assert abs(L3(w.x) - L3(w.x - v)) / L3(w.x) <= 1e-9


@pytest.mark.parametrize("k", [1, 0, 5])
def test_k_out_of_range(k):
    with pytest.raises(KOutOfRange):
        witness_xmk(build_lm(4), k)


@pytest.mark.parametrize("m,k", [(4, 2), (9, 3), (36, 6)])
@pytest.mark.parametrize("r", [(0, 0), (1, 2), (-3, 7), (0.25, -1.5)])
def test_f_matches_oracle(m, k, r):
    got = f_value(build_lm(m), k, *r)
    want = oracle_f_mp(m, k, mpmath.mpf(r[0]), mpmath.mpf(r[1]))
    assert float(abs(got - want) / want) <= 1e-13


def test_f_examples():
    inst = build_lm(9)
    f00 = f_value(inst, 2, 0, 0)
    assert f00 == pytest.approx(L3(witness_xmk(inst, 2).x) ** 3, rel=1e-13)
    assert f_value(inst, 2, 1, 2) == pytest.approx(f00, rel=1e-13)
    assert f_value(inst, 2, 0, 1) > f00
    assert f_value(inst, 2, 0, -1) > f00


@pytest.mark.parametrize("m,k", [(4, 2), (9, 3), (25, 5)])
@given(r1=st.floats(-20, 20), r2=st.floats(-60, 60))
def test_symmetry(m, k, r1, r2):
    inst = build_lm(m)
    a, b = f_value(inst, k, r1, r2), f_value(inst, k, 1 - r1, k - r2)
    assert a == pytest.approx(b, rel=1e-9)


def _newton_min(m, k, start, iters=200):
    b1, b2, x = oracle_witness_mp(m, k)
    with mpmath.workdps(60):
        B = [mpmath.matrix([b1[i], b2[i]]) for i in range(3)]
        r = mpmath.matrix(start)

        def f(r):
            return mpmath.fsum(abs(r[0] * b1[i] + r[1] * b2[i] - x[i]) ** 3 for i in range(3))

        for _ in range(iters):
            c = [r[0] * b1[i] + r[1] * b2[i] - x[i] for i in range(3)]
            g = sum((3 * c[i] * abs(c[i]) * B[i] for i in range(3)), mpmath.matrix(2, 1))
            H = sum((6 * abs(c[i]) * B[i] * B[i].T for i in range(3)), mpmath.matrix(2, 2))
            try:
                step = mpmath.lu_solve(H, g)
            except ZeroDivisionError:
                break
            t, f0 = mpmath.mpf(1), f(r)
            while f(r - t * step) > f0 and t > mpmath.mpf(10) ** -30:
                t /= 2
            r = r - t * step
        return float(r[0]), float(r[1])


@pytest.mark.parametrize("m,k", [(4, 2), (9, 2), (9, 3)])
def test_global_minimum_location(m, k):
    rng = np.random.default_rng(m * 10 + k)
    for s in rng.uniform(-5, 5, size=(20, 2)):
        r1, r2 = _newton_min(m, k, [s[0], k / 2 + s[1]])
        assert r1 == pytest.approx(0.5, abs=1e-6)
        assert r2 == pytest.approx(k / 2, abs=1e-6)


# -- claims --------------------------------------------------------------------------

@pytest.mark.parametrize("m,k", [(4, 2), (9, 3), (25, 5), (36, 6)])
def test_offplane(m, k):
    inst = build_lm(m)
    rec = verify_claim_offplane(inst, k)
    assert rec.holds
    x3 = f_value(inst, k, 0, 0)
    layer = distance_to_plane_l3(inst.M, witness_xmk(inst, k).x).cubed_distance
    assert 4 * m**15 / float(x3) > 10
    assert layer / float(x3) > 10
    assert layer >= 200 * m**15


def test_offplane_needs_k_up_to_sqrt_m():
    with pytest.raises(KOutOfRange):
        verify_claim_offplane(build_lm(9), 4)


@pytest.mark.parametrize("m,k", [(4, 2), (9, 2), (9, 3)])
def test_inplane(m, k):
    rec = verify_claims_inplane(build_lm(m), k, 6)
    assert rec.holds
    assert rec.notes["symmetry_residual"] <= 1e-12


def test_inplane_minimum_exactly_at_two_points():
    inst = build_lm(4)
    Z1, Z2 = window_box(2, 6)
    vals = {(a, b): f_value(inst, 2, a, b) for a in Z1 for b in Z2}
    low = min(vals.values())
    assert {z for z, v in vals.items() if v <= low * (1 + 1e-12)} == {(0, 0), (1, 2)}


def test_inplane_window_validation():
    with pytest.raises(ValueError):
        verify_claims_inplane(build_lm(4), 2, 1)


def test_extended_agrees_with_binary64():
    a = verify_claims_inplane(build_lm(16), 4)
    b = verify_claims_inplane(build_lm(16, numeric="extended"), 4)
    assert a.min_rel_slack == pytest.approx(b.min_rel_slack, rel=1e-6)
    assert b.numeric == "extended"


@pytest.mark.parametrize("m,count", [(4, 1), (9, 2), (16, 3), (25, 4)])
def test_theorem_counts(m, count):
    rep = verify_theorem_main(m)
    assert rep.certified_k == tuple(range(2, count + 2))
    assert rep.count >= math.isqrt(m) - 1


def test_theorem_report_json():
    j = verify_theorem_main(9).to_json()
    assert j["m"] == 9 and j["certified_k"] == [2, 3]
    assert j["M"] == pytest.approx(5 * math.sqrt(2) * 9**5)
    assert len(j["records"]) == 4


@pytest.mark.parametrize("m", [4, 9])
def test_generic_classifier_agrees(m):
    inst = build_lm(m)
    for k in verify_theorem_main(m).certified_k:
        w = witness_xmk(inst, k)
        r = witness_search(inst.basis, L3, inst.basis.vector(w.v), witness=w.x)
        assert r.status == Status.RELEVANT
