import math
import warnings

import numpy as np
import pytest

from whitneyext.covering import WhitneyParams, build_families
from whitneyext.domains import make_domain
from whitneyext.extension import extend
from whitneyext.fields import ConstField, CuspField, PolyField, SinProdField
from whitneyext.geometry import DyadicCube
from whitneyext.norms import (
    NormParams,
    QuadratureSpec,
    Region,
    SeminormEstimator,
    inequality_diagnostics,
    norm_A_spq,
    norm_extension_global,
    norm_Wkp,
    seminorm_A,
)

INF = math.inf
SEG = [DyadicCube(0, (0,))]  # the interval (0,1) as a single cube


def family(kind, depth, c_w=2.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_families(make_domain({"kind": kind}), WhitneyParams(c_w=c_w, max_generation=depth))


@pytest.fixture(scope="module")
def square5():
    return family("square", 5)


def test_params_validation():
    with pytest.raises(ValueError):
        NormParams(sigma=1.2)
    with pytest.raises(ValueError):
        NormParams(q=0.0)
    with pytest.raises(ValueError):
        Region("ball", 1.5)
    with pytest.raises(ValueError):
        Region("wedge")
    assert NormParams(sigma=0.5, p=2, q=2).validity(2)
    assert not NormParams(sigma=0.5, p=2, q=INF).validity(2)


def test_constant_field_zero_seminorm(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    for region in (Region(), Region("ball", 0.5), Region("cube_shadow", 3.0)):
        v = seminorm_A(ConstField(2.0), square5.w1, params, region,
                       QuadratureSpec(2, 2), oracle=square5.oracle)
        assert v == pytest.approx(0.0, abs=1e-12)


def test_closed_form_1d():
    # f(x) = x on (0,1), sigma = 1/2, p = q = 2: the integrand is exactly 1
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    f = PolyField({(1,): 1.0})
    v = seminorm_A(f, SEG, params, Region(), QuadratureSpec(3, 4))
    assert abs(v - 1.0) <= 1e-3


def test_wkp_examples():
    f = PolyField({(1,): 1.0})
    v = norm_Wkp(f, SEG, k=1, p=2.0, quad=QuadratureSpec(4, 0))
    assert v == pytest.approx(math.sqrt(4.0 / 3.0), abs=1e-12)
    c = ConstField(3.0)
    v0 = norm_Wkp(c, [DyadicCube(0, (0, 0))], k=0, p=2.0)
    assert v0 == pytest.approx(3.0, abs=1e-12)


def test_wkp_additive_under_split():
    f = SinProdField(freqs=(1.1,), phases=(0.3,))
    v1 = norm_Wkp(f, SEG, k=1, p=2.0, quad=QuadratureSpec(8, 0))
    halves = [DyadicCube(1, (0,)), DyadicCube(1, (1,))]
    v2 = norm_Wkp(f, halves, k=1, p=2.0, quad=QuadratureSpec(8, 0))
    assert v1 == pytest.approx(v2, rel=1e-10)


def test_homogeneity(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    quad = QuadratureSpec(2, 2)
    f = SinProdField()
    est = SeminormEstimator(square5.w1, quad, oracle=square5.oracle)
    v1, _ = est.seminorm(f, (0, 0), params)
    v3, _ = est.seminorm(3.0 * f, (0, 0), params)
    assert v3 == pytest.approx(3.0 * v1, rel=1e-12)


def test_triangle_inequality(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    quad = QuadratureSpec(2, 2)
    f = SinProdField()
    g = PolyField({(1, 0): 0.8, (0, 2): -0.4})
    est = SeminormEstimator(square5.w1, quad, oracle=square5.oracle)
    vf, _ = est.seminorm(f, (0, 0), params)
    vg, _ = est.seminorm(g, (0, 0), params)
    vfg, _ = est.seminorm(f + g, (0, 0), params)
    assert vfg <= vf + vg + 1e-10


def test_region_monotonicity(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    quad = QuadratureSpec(2, 2)
    f = SinProdField()
    est = SeminormEstimator(square5.w1, quad, oracle=square5.oracle)
    vals = {}
    for name, region in [
        ("ball.3", Region("ball", 0.3)),
        ("ball.6", Region("ball", 0.6)),
        ("shadow2", Region("shadow", 2.0)),
        ("cube5q", Region("cube_5q")),
        ("cshadow", Region("cube_shadow", 3.0)),
        ("full", Region()),
    ]:
        vals[name], _ = est.seminorm(f, (0, 0), params, region)
    assert vals["ball.3"] <= vals["ball.6"] <= vals["full"] + 1e-12
    assert vals["shadow2"] <= vals["full"] + 1e-12
    assert vals["cube5q"] <= vals["full"] + 1e-12
    assert vals["cshadow"] <= vals["full"] + 1e-12
    assert vals["ball.6"] <= vals["shadow2"] + 1e-12


def test_qinf_consistency_with_large_q(square5):
    quad = QuadratureSpec(2, 2)
    f = SinProdField()
    est = SeminormEstimator(square5.w1, quad, oracle=square5.oracle)
    v64, _ = est.seminorm(f, (0, 0), NormParams(k=0, sigma=0.5, p=2, q=64))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vinf, _ = est.seminorm(f, (0, 0), NormParams(k=0, sigma=0.5, p=2, q=INF))
    assert abs(v64 - vinf) <= 0.15 * vinf


def test_validity_flag_warns(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=INF)
    with pytest.warns(UserWarning, match="violate"):
        norm_A_spq(SinProdField(), square5, params, quad=QuadratureSpec(2, 1),
                   with_error_estimate=False)


def test_norm_reduces_to_lp_plus_seminorm(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    quad = QuadratureSpec(2, 2)
    f = SinProdField()
    rep = norm_A_spq(f, square5, params, quad=quad, with_error_estimate=False)
    assert rep.wkp_norm == pytest.approx(rep.lp_norm, rel=1e-12)
    assert rep.composite == pytest.approx(rep.wkp_norm + rep.seminorm_total, rel=1e-12)


def test_polynomial_degree_k_composite(square5):
    # degree-1 polynomial at k = 1: constant top derivatives, zero seminorm
    f = PolyField({(1, 0): 2.0, (0, 1): -1.0})
    params = NormParams(k=1, sigma=0.5, p=2, q=2)
    rep = norm_A_spq(f, square5, params, quad=QuadratureSpec(2, 2), with_error_estimate=False)
    assert rep.seminorm_total == pytest.approx(0.0, abs=1e-10)
    assert rep.composite == pytest.approx(rep.wkp_norm, rel=1e-12)


def test_jump_field_refinement_dichotomy():
    # the angle around the slit jumps by 2*pi across it; its seminorm is
    # finite for sigma*p < 1 and divergent for sigma*p > 1, and covering
    # refinement (outer nodes approaching the jump) separates the regimes
    from whitneyext.fields import SlitAngleField

    f = SlitAngleField()
    vals = {}
    for sig in (0.3, 0.7):
        row = []
        for depth in (4, 5, 6):
            fam = family("slit", depth)
            est = SeminormEstimator(fam.w1, QuadratureSpec(2, 2), oracle=fam.oracle)
            v, _ = est.seminorm(f, (0, 0), NormParams(k=0, sigma=sig, p=2, q=2))
            row.append(v)
        vals[sig] = row
    v = vals[0.3]  # convergent: increments decay geometrically
    assert (v[2] - v[1]) <= 0.9 * (v[1] - v[0])
    w = vals[0.7]  # divergent: squared-mass increments keep growing
    assert w[2] > w[1] > w[0]
    assert (w[2] ** 2 - w[1] ** 2) >= 1.2 * (w[1] ** 2 - w[0] ** 2)


def test_cusp_finite_in_2d_both_sigmas():
    # in two dimensions the same cusp lies in the sigma-smoothness class for
    # every sigma < 1: estimates settle under refinement at 0.5 and 0.7
    fam = family("square", 4)
    f = CuspField(center=(0.31, 0.43), tau=0.6)
    for sig in (0.5, 0.7):
        params = NormParams(k=0, sigma=sig, p=2, q=2)
        row = []
        for r in (2, 3, 4):
            est = SeminormEstimator(fam.w1, QuadratureSpec(2, r), oracle=fam.oracle)
            v, _ = est.seminorm(f, (0, 0), params)
            row.append(v)
        assert abs(row[2] - row[1]) <= 0.05 * row[2]


def test_extension_global_zero_and_const(square5):
    quad = QuadratureSpec(2, 2)
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    ef0 = extend(ConstField(0.0), square5, k=0)
    rep0 = norm_extension_global(ef0, square5, params, quad)
    assert rep0.composite == pytest.approx(0.0, abs=1e-12)
    ef1 = extend(ConstField(1.0), square5, k=0)
    rep1 = norm_extension_global(ef1, square5, params, quad)
    assert np.isfinite(rep1.composite)
    assert rep1.seminorm_total > 0  # decay collar where the bump sum falls off
    assert np.isfinite(rep1.tail_bound)


def test_extension_ratio_stable_in_refinement(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    f = SinProdField()
    ef = extend(f, square5, k=0)
    ratios = []
    for r in (2, 3):
        quad = QuadratureSpec(2, r)
        est_in = SeminormEstimator(square5.w1, quad, oracle=square5.oracle)
        rep_in = norm_A_spq(f, square5, params, quad=quad, estimator=est_in,
                            with_error_estimate=False)
        rep_gl = norm_extension_global(ef, square5, params, quad)
        ratios.append(rep_gl.composite / rep_in.composite)
    assert abs(ratios[1] - ratios[0]) <= 0.25 * ratios[0]


def test_inequality_diagnostics_constant_zero(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    rep = inequality_diagnostics(square5, ConstField(1.0), params, QuadratureSpec(2, 1))
    assert rep["seminorm_full"] == pytest.approx(0.0, abs=1e-12)


def test_inequality_diagnostics_stability():
    f = SinProdField()
    params = NormParams(k=0, sigma=0.5, p=3, q=2)  # q < p so both sums run
    out = {}
    for depth in (4, 5):
        fam = family("square", depth)
        out[depth] = inequality_diagnostics(fam, f, params, QuadratureSpec(2, 2))
    for key in ("cube_mean_kernel_sum", "weighted_l1_kernel_sum"):
        a, b = out[4][key], out[5][key]
        assert np.isfinite(a) and np.isfinite(b)
        assert abs(a - b) <= 0.25 * max(a, b)
    r = out[5]["shadow_over_full"]
    assert 0 < r <= 1.0 + 1e-12


def test_error_estimate_reported(square5):
    params = NormParams(k=0, sigma=0.5, p=2, q=2)
    rep = norm_A_spq(SinProdField(), square5, params, quad=QuadratureSpec(2, 2),
                     with_error_estimate=True)
    assert rep.seminorm_errors
    for err in rep.seminorm_errors.values():
        assert err >= 0.0
