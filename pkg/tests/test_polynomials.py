import warnings

import numpy as np
import pytest

from whitneyext.covering import WhitneyParams, build_families
from whitneyext.domains import make_domain
from whitneyext.fields import ConstField, PolyField, SinProdField
from whitneyext.geometry import DyadicCube
from whitneyext.polynomials import (
    multi_indices,
    poly_as_field,
    poly_eval,
    poly_eval_batch,
    project,
    ring_diff,
    verify_poly_lemma,
)
from whitneyext.quadrature import cube_nodes, monomial_moment

UNIT2 = DyadicCube(0, (0, 0))


def test_constant_projection():
    p = project(UNIT2, ConstField(3.5), k=2)
    assert p.coeffs[(0, 0)] == pytest.approx(3.5, abs=1e-13)
    assert all(abs(v) < 1e-12 for g, v in p.coeffs.items() if sum(g) > 0)


def test_polynomial_reproduced_exactly():
    f = PolyField({(0, 0): 1.0, (1, 0): -2.0, (1, 1): 0.5, (0, 2): 3.0})
    p = project(UNIT2, f, k=2)
    pts = np.random.default_rng(0).random((40, 2))
    assert np.allclose(poly_eval_batch(p, pts), f.eval(pts, (0, 0)), atol=1e-12)


def test_worked_example_1d():
    # Q = [0,1], k = 1, f(x) = x^2: P(y) = 1/3 + (y - 1/2)
    q = DyadicCube(0, (0,))
    f = PolyField({(2,): 1.0})
    p = project(q, f, k=1)
    assert p.coeffs[(0,)] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert p.coeffs[(1,)] == pytest.approx(1.0, abs=1e-12)
    assert poly_eval(p, [1.0]) == pytest.approx(5.0 / 6.0, abs=1e-12)


def test_poly_eval_center_and_overdifferentiation():
    f = SinProdField()
    p = project(UNIT2, f, k=2)
    assert poly_eval(p, UNIT2.center) == pytest.approx(p.coeffs[(0, 0)])
    assert poly_eval(p, [0.3, 0.3], deriv=(3, 0)) == 0.0


def test_moment_matching_residuals():
    f = SinProdField()
    for cube in [UNIT2, DyadicCube(2, (1, 3)), DyadicCube(3, (-2, 5))]:
        for k in range(4):
            p = project(cube, f, k)
            pts, wts = cube_nodes(cube, 8)
            for beta in multi_indices(2, k):
                lhs = np.dot(wts, poly_eval_batch(p, pts, beta))
                rhs = np.dot(wts, f.eval(pts, beta))
                assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(rhs))


def test_projection_linearity():
    f = SinProdField()
    g = PolyField({(1, 1): 2.0, (0, 1): -1.0})
    a, b = 1.7, -0.6
    combo = a * f + b * g
    p_combo = project(UNIT2, combo, k=2)
    pf = project(UNIT2, f, k=2)
    pg = project(UNIT2, g, k=2)
    for mono in p_combo.coeffs:
        want = a * pf.coeffs[mono] + b * pg.coeffs[mono]
        assert p_combo.coeffs[mono] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_projection_commutes_with_derivatives():
    # D^beta P^k_Q f = P^{k-|beta|}_Q D^beta f
    f = SinProdField()
    k = 3
    p = project(UNIT2, f, k)
    for beta in [(1, 0), (0, 1), (1, 1), (2, 0)]:
        class DerivSlice(SinProdField):
            def eval(_self, pts, gamma):
                g = tuple(a + b for a, b in zip(gamma, beta))
                return f.eval(pts, g)

        pd = project(UNIT2, DerivSlice(), k - sum(beta))
        pts = np.random.default_rng(1).random((25, 2))
        got = poly_eval_batch(p, pts, beta)
        want = poly_eval_batch(pd, pts)
        assert np.allclose(got, want, atol=1e-11)


def test_idempotence():
    f = SinProdField()
    p = project(UNIT2, f, k=3)
    again = project(UNIT2, poly_as_field(p), k=3)
    for mono, v in p.coeffs.items():
        assert again.coeffs[mono] == pytest.approx(v, rel=1e-12, abs=1e-12)


def test_ring_diff():
    f0 = PolyField({(0, 0): 4.0})
    assert all(abs(v) < 1e-12 for v in ring_diff(UNIT2, f0, 2).coeffs.values())
    f1 = PolyField({(1, 0): 1.0, (0, 1): -2.0})
    assert all(abs(v) < 1e-12 for v in ring_diff(UNIT2, f1, 2).coeffs.values())
    # x^2 on [0,1]: top ring coefficient 1, lower orders fix the moments
    q = DyadicCube(0, (0,))
    r = ring_diff(q, PolyField({(2,): 1.0}), 2)
    # P^2 f = (y-1/2)^2 + (y-1/2) + 1/4 exactly, P^1 f = 1/3 + (y-1/2)
    assert r.coeffs[(2,)] == pytest.approx(1.0, abs=1e-12)
    assert r.coeffs[(1,)] == pytest.approx(0.0, abs=1e-12)
    assert r.coeffs[(0,)] == pytest.approx(0.25 - 1.0 / 3.0, abs=1e-12)


def test_monomial_moments_closed_form():
    q = DyadicCube(1, (0, 0))  # side 1/2
    # int (y-c)^2 over the cube = l^{d} * l^2/12
    want = (0.5**2 / 12.0) * 0.5**2
    assert monomial_moment(q, (2, 0)) == pytest.approx(want, abs=1e-15)
    assert monomial_moment(q, (1, 0)) == 0.0


def test_eqp2_zero_for_linear():
    f = PolyField({(1, 0): 2.0, (0, 1): 1.0})
    rep = verify_poly_lemma([UNIT2, DyadicCube(2, (1, 1))], f, k=1)
    assert rep["approx_bound"] == pytest.approx(0.0, abs=1e-8)


@pytest.mark.slow
def test_lemma_constants_depth_stable():
    f = SinProdField()
    consts = {}
    for depth in (5, 6):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fam = build_families(
                make_domain({"kind": "square"}), WhitneyParams(c_w=2.0, max_generation=depth)
            )
        rep = verify_poly_lemma(fam.w1[::3], f, k=1)
        consts[depth] = rep
    for key in ("coeff_bound", "lp_bound", "approx_bound"):
        a, b = consts[5][key], consts[6][key]
        assert np.isfinite(a) and np.isfinite(b)
        assert abs(a - b) <= 0.25 * max(a, 1e-12)
