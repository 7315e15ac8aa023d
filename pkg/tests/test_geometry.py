import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whitneyext.geometry import (
    CubeArray,
    DyadicCube,
    box_gap,
    cube_box,
    long_distance,
    neighbors,
)

UNIT = DyadicCube(0, (0, 0))


def test_cube_box_identity():
    lo, hi = cube_box(DyadicCube(0, (0, 0)), 1.0)
    assert np.array_equal(lo, [0.0, 0.0])
    assert np.array_equal(hi, [1.0, 1.0])


def test_cube_box_corner_arithmetic():
    lo, hi = cube_box(DyadicCube(1, (1, 1)), 1.0)
    assert np.array_equal(lo, [0.5, 0.5])
    assert np.array_equal(hi, [1.0, 1.0])


def test_cube_box_5q_dilation():
    lo, hi = cube_box(DyadicCube(0, (0, 0)), 5.0)
    assert np.array_equal(lo, [-2.0, -2.0])
    assert np.array_equal(hi, [3.0, 3.0])


def test_dilation_preserves_center():
    q = DyadicCube(3, (5, -2))
    lo, hi = q.box(2.5)
    assert np.allclose((lo + hi) / 2, q.center)
    assert np.allclose(hi - lo, 2.5 * q.side)


def test_long_distance_coincident():
    assert long_distance(UNIT, UNIT) == 2.0


def test_long_distance_touching():
    s = DyadicCube(0, (1, 0))
    assert long_distance(UNIT, s) == 2.0


def test_long_distance_with_gap():
    # unit cubes with box gap 3 along one axis
    s = DyadicCube(0, (4, 0))
    assert long_distance(UNIT, s) == 5.0


def test_neighbors_shared_edge():
    assert neighbors(UNIT, DyadicCube(0, (1, 0)))


def test_neighbors_separated():
    assert not neighbors(UNIT, DyadicCube(0, (2, 2)))


def test_neighbors_shared_corner():
    assert neighbors(UNIT, DyadicCube(0, (1, 1)))


def test_neighbors_across_generations():
    small = DyadicCube(2, (4, 1))  # [1, 1.25] x [0.25, 0.5]
    assert neighbors(UNIT, small)
    assert not neighbors(UNIT, DyadicCube(2, (5, 1)))


cube_strategy = st.builds(
    DyadicCube,
    st.integers(min_value=-3, max_value=8),
    st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
)


@settings(max_examples=200, deadline=None)
@given(cube_strategy, cube_strategy, cube_strategy)
def test_long_distance_quasi_triangle(q, p, s):
    assert long_distance(q, s) <= long_distance(q, p) + long_distance(p, s) + 1e-12


@settings(max_examples=200, deadline=None)
@given(cube_strategy, cube_strategy)
def test_long_distance_lower_bounds(q, s):
    d = long_distance(q, s)
    assert d >= box_gap(q, s)
    assert d >= max(q.side, s.side)
    assert d == long_distance(s, q)


@settings(max_examples=100, deadline=None)
@given(cube_strategy)
def test_serialization_round_trip_bit_exact(q):
    q2 = DyadicCube.from_json(json.loads(json.dumps(q.to_json())))
    assert q2 == q
    assert np.array_equal(q2.lo, q.lo)
    assert np.array_equal(q2.hi, q.hi)


def test_parent_child_round_trip():
    q = DyadicCube(4, (-7, 3))
    assert all(c.parent() == q for c in q.children())
    assert q.parent().j == 3


def test_cube_array_matches_scalar_ops():
    cubes = [UNIT, DyadicCube(1, (2, 1)), DyadicCube(2, (-3, 5)), DyadicCube(0, (4, 0))]
    arr = CubeArray(cubes)
    dmat = arr.long_distance_matrix(arr)
    tmat = arr.touch_matrix(arr)
    for i, a in enumerate(cubes):
        for k, b in enumerate(cubes):
            assert dmat[i, k] == pytest.approx(long_distance(a, b), abs=1e-14)
            assert tmat[i, k] == neighbors(a, b)


def test_contains_boxes_against_manual():
    arr = CubeArray([UNIT])
    inner = CubeArray([DyadicCube(2, (1, 1)), DyadicCube(0, (3, 0))])
    mask = arr.contains_boxes(5.0, inner.lo, inner.hi)
    assert mask[0, 0]  # [0.25,0.5]^2 inside [-2,3]^2
    assert not mask[0, 1]  # [3,4]x[0,1] pokes past the 5Q face at x = 3
