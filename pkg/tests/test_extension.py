import warnings

import numpy as np
import pytest

from whitneyext.covering import WhitneyParams, build_families
from whitneyext.domains import make_domain
from whitneyext.extension import (
    SUPPORT_DILATION,
    BoundaryEvalError,
    build_pou,
    extend,
)
from whitneyext.fields import ConstField, PolyField, SinProdField
from whitneyext.geometry import CubeArray


@pytest.fixture(scope="module")
def square_fam():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_families(
            make_domain({"kind": "square"}), WhitneyParams(c_w=2.0, max_generation=5)
        )


@pytest.fixture(scope="module")
def pou(square_fam):
    return build_pou(square_fam, smooth_order=3)


@pytest.fixture(scope="module")
def ext_smooth(square_fam, pou):
    return extend(SinProdField(), square_fam, pou, k=1)


def exterior_sample(fam, n, seed=0, margin=0.0):
    """Deterministic points inside exterior cover cubes, off cube collars."""
    rng = np.random.default_rng(seed)
    pts = []
    cubes = fam.w2
    for t in range(n):
        c = cubes[(t * 7919) % len(cubes)]
        lo, hi = c.box()
        span = hi - lo
        pts.append(lo + span * (0.2 + 0.6 * rng.random(2)))
    return np.array(pts)


def test_psi_is_one_away_from_collars(square_fam, pou):
    # center of a cube whose neighbors' dilated supports stay clear
    for cube in square_fam.w2[::41]:
        x = cube.center[None, :]
        der = pou.psi_derivs(x, (0, 0))
        others = [v[(0, 0)][0] for q, v in der.items() if q != cube]
        if cube in der and all(o == 0 for o in others):
            assert der[cube][(0, 0)][0] == pytest.approx(1.0, abs=1e-12)


def test_partition_sums_to_one(square_fam, pou):
    pts = exterior_sample(square_fam, 60)
    der = pou.psi_derivs(pts, (0, 0))
    total = sum(v[(0, 0)] for v in der.values())
    assert np.allclose(total, 1.0, atol=1e-12)


def test_partition_derivative_sums_to_zero(square_fam, pou):
    pts = exterior_sample(square_fam, 60, seed=3)
    for alpha in ((1, 0), (0, 1)):
        der = pou.psi_derivs(pts, alpha)
        total = sum(v[alpha] for v in der.values())
        assert np.allclose(total, 0.0, atol=1e-10)


def test_bump_support_and_range(square_fam, pou):
    pts = exterior_sample(square_fam, 80, seed=5)
    der = pou.psi_derivs(pts, (0, 0))
    arr = CubeArray(list(der.keys()))
    lo, hi = arr.boxes(SUPPORT_DILATION)
    for i, (q, v) in enumerate(der.items()):
        vals = v[(0, 0)]
        assert np.all(vals >= -1e-15) and np.all(vals <= 1.0 + 1e-12)
        outside = np.any((pts < lo[i]) | (pts > hi[i]), axis=1)
        assert np.all(vals[outside] == 0.0)


def test_bump_derivative_bounds_scale(square_fam, pou):
    # ||grad^j psi_Q|| <= C_j / l(Q)^j with a uniform realized constant
    pts = exterior_sample(square_fam, 200, seed=7)
    for alpha in ((1, 0), (0, 1)):
        der = pou.psi_derivs(pts, alpha)
        consts = [np.max(np.abs(v[alpha])) * q.side for q, v in der.items()]
        assert max(consts) < 50.0


def test_restriction_is_exact(square_fam, ext_smooth):
    f = ext_smooth.f
    rng = np.random.default_rng(11)
    pts = 0.05 + 0.9 * rng.random((200, 2))
    for gamma in ((0, 0), (1, 0), (0, 1)):
        got = ext_smooth.eval(pts, gamma)
        want = f.eval(pts, gamma)
        assert np.array_equal(got, want)


def test_constant_extension_on_w4(square_fam, pou):
    ef = extend(ConstField(1.0), square_fam, pou, k=0)
    w4 = sorted(square_fam.w4, key=lambda c: c.key())
    pts = np.array([c.center for c in w4[::5]])
    assert np.allclose(ef.eval(pts, (0, 0)), 1.0, atol=1e-12)


def test_polynomial_reproduction_on_w4(square_fam, pou):
    f = PolyField({(0, 0): 0.3, (1, 0): -1.2, (0, 1): 0.7})
    ef = extend(f, square_fam, pou, k=1)
    w4 = sorted(square_fam.w4, key=lambda c: c.key())
    pts = np.array([c.center for c in w4[::5]])
    for alpha in ((0, 0), (1, 0), (0, 1)):
        got = ef.eval(pts, alpha)
        want = f.eval(pts, alpha)
        assert np.allclose(got, want, atol=1e-10)


def test_grad_of_constant_vanishes_on_w4(square_fam, pou):
    ef = extend(ConstField(1.0), square_fam, pou, k=1)
    w4 = sorted(square_fam.w4, key=lambda c: c.key())
    pts = np.array([c.center for c in w4[::7]])
    assert np.allclose(ef.eval(pts, (1, 0)), 0.0, atol=1e-10)


def test_far_exterior_is_zero(square_fam, ext_smooth):
    pts = np.array([[3.5, 3.5], [-2.5, 0.5], [0.5, -2.9]])
    assert np.all(ext_smooth.eval(pts, (0, 0)) == 0.0)


def test_support_within_w3_collars(square_fam, ext_smooth):
    # nonzero values only inside the dilated supports of the small cubes
    pts = exterior_sample(square_fam, 300, seed=13)
    vals = ext_smooth.eval(pts, (0, 0))
    w3 = CubeArray(sorted(square_fam.w3, key=lambda c: c.key()))
    lo, hi = w3.boxes(SUPPORT_DILATION)
    inside_any = np.zeros(len(pts), dtype=bool)
    for i in range(w3.n):
        inside_any |= np.all((pts >= lo[i]) & (pts <= hi[i]), axis=1)
    assert np.all(vals[~inside_any] == 0.0)


def test_boundary_evaluation_rejected(ext_smooth):
    with pytest.raises(BoundaryEvalError):
        ext_smooth.eval(np.array([[0.5, 1.0]]), (0, 0))


def test_finite_difference_cross_check(square_fam, ext_smooth):
    # D^alpha at 50 exterior points vs central differences of the value
    rng = np.random.default_rng(17)
    w3 = sorted(square_fam.w3, key=lambda c: c.key())
    pts = []
    for t in range(50):
        c = w3[(t * 31) % len(w3)]
        lo, hi = c.box()
        pts.append(lo + (hi - lo) * (0.3 + 0.4 * rng.random(2)))
    pts = np.array(pts)
    for alpha, ax in (((1, 0), 0), ((0, 1), 1)):
        got = ext_smooth.eval(pts, alpha)
        h = 1e-6
        shift = np.zeros(2)
        shift[ax] = h
        fd = (ext_smooth.eval(pts + shift, (0, 0)) - ext_smooth.eval(pts - shift, (0, 0))) / (2 * h)
        denom = np.maximum(np.abs(got), 1e-3)
        assert np.max(np.abs(fd - got) / denom) <= 1e-4
