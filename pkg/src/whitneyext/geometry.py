"""Dyadic cube arithmetic and the long distance between cubes.

Cubes are stored as (generation, integer index) so that corners, adjacency
and containment decisions are binary-exact; floats enter only through the
side length 2**-j, which float64 represents exactly for |j| < 1022.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Axis-aligned dyadic cube: side 2**-j, lower corner idx * 2**-j."""

    j: int
    idx: tuple[int, ...]

    @property
    def d(self) -> int:
        return len(self.idx)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.j)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.idx, dtype=float) * self.side

    @property
    def hi(self) -> np.ndarray:
        return (np.asarray(self.idx, dtype=float) + 1.0) * self.side

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.idx, dtype=float) + 0.5) * self.side

    def box(self, lam: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Box of the dilated cube lam*Q (same center, side lam*2**-j).

        Exact when lam is a dyadic rational.
        """
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        s = self.side
        base = np.asarray(self.idx, dtype=float)
        half_excess = (lam - 1.0) * 0.5
        return (base - half_excess) * s, (base + 1.0 + half_excess) * s

    def corners(self) -> np.ndarray:
        lo, hi = self.box()
        pts = itertools.product(*((lo[i], hi[i]) for i in range(self.d)))
        return np.array(list(pts))

    def parent(self) -> "DyadicCube":
        # arithmetic right shift floors, also for negative indices
        return DyadicCube(self.j - 1, tuple(i >> 1 for i in self.idx))

    def children(self) -> list["DyadicCube"]:
        return [
            DyadicCube(self.j + 1, tuple(2 * i + o for i, o in zip(self.idx, off)))
            for off in itertools.product((0, 1), repeat=self.d)
        ]

    def contains_point(self, x) -> bool:
        lo, hi = self.box()
        x = np.asarray(x, dtype=float)
        return bool(np.all(lo <= x) and np.all(x <= hi))

    def key(self) -> tuple:
        return (self.j,) + self.idx

    def to_json(self) -> dict:
        return {"j": self.j, "idx": list(self.idx)}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicCube":
        return cls(int(obj["j"]), tuple(int(i) for i in obj["idx"]))


def cube_box(q: DyadicCube, lam: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    return q.box(lam)


def cube_containing(x, j: int, d: int | None = None) -> DyadicCube:
    """Dyadic cube of generation j whose half-open box contains x."""
    x = np.asarray(x, dtype=float)
    idx = tuple(int(i) for i in np.floor(x * 2.0 ** j))
    return DyadicCube(j, idx)


def _scaled_interval(q: DyadicCube, axis: int, gen: int) -> tuple[int, int]:
    # closed interval of q along `axis` in units of 2**-gen (gen >= q.j)
    shift = gen - q.j
    lo = q.idx[axis] << shift
    return lo, lo + (1 << shift)


def neighbors(q: DyadicCube, s: DyadicCube) -> bool:
    """Closed boxes intersect (corner contact counts). Integer-exact."""
    gen = max(q.j, s.j)
    for axis in range(q.d):
        alo, ahi = _scaled_interval(q, axis, gen)
        blo, bhi = _scaled_interval(s, axis, gen)
        if ahi < blo or bhi < alo:
            return False
    return True


def box_gap(q: DyadicCube, s: DyadicCube) -> float:
    """Euclidean set distance between the closed boxes of q and s."""
    gap2 = 0.0
    for axis in range(q.d):
        lo1, hi1 = q.idx[axis] * q.side, (q.idx[axis] + 1) * q.side
        lo2, hi2 = s.idx[axis] * s.side, (s.idx[axis] + 1) * s.side
        g = max(0.0, lo1 - hi2, lo2 - hi1)
        gap2 += g * g
    return float(np.sqrt(gap2))


def long_distance(q: DyadicCube, s: DyadicCube) -> float:
    """D(Q,S) = l(Q) + dist(Q,S) + l(S), dist the Euclidean box distance."""
    return q.side + box_gap(q, s) + s.side


def long_distance_centers(q: DyadicCube, s: DyadicCube) -> float:
    """Alternative convention D'(Q,S) = |x_Q - x_S|, used for sensitivity runs."""
    return float(np.linalg.norm(q.center - s.center))


class CubeArray:
    """Array view of a cube list for vectorised geometry queries."""

    def __init__(self, cubes: list[DyadicCube]):
        self.cubes = list(cubes)
        self.n = len(self.cubes)
        d = self.cubes[0].d if self.cubes else 0
        self.d = d
        if self.n:
            self.side = np.array([c.side for c in self.cubes])
            idx = np.array([c.idx for c in self.cubes], dtype=float)
            self.lo = idx * self.side[:, None]
            self.hi = (idx + 1.0) * self.side[:, None]
        else:
            self.side = np.zeros(0)
            self.lo = np.zeros((0, d))
            self.hi = np.zeros((0, d))
        self.center = (self.lo + self.hi) / 2.0

    def boxes(self, lam: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        if lam == 1.0:
            return self.lo, self.hi
        half_excess = (lam - 1.0) * 0.5 * self.side[:, None]
        return self.lo - half_excess, self.hi + half_excess

    def gap_matrix(self, other: "CubeArray") -> np.ndarray:
        """Pairwise Euclidean box distances, shape (self.n, other.n)."""
        g2 = np.zeros((self.n, other.n))
        for ax in range(self.d):
            lo1 = self.lo[:, ax][:, None]
            hi1 = self.hi[:, ax][:, None]
            lo2 = other.lo[:, ax][None, :]
            hi2 = other.hi[:, ax][None, :]
            g = np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))
            g2 += g * g
        return np.sqrt(g2)

    def long_distance_matrix(self, other: "CubeArray") -> np.ndarray:
        return self.gap_matrix(other) + self.side[:, None] + other.side[None, :]

    def touch_matrix(self, other: "CubeArray") -> np.ndarray:
        """Closed-box intersection mask, shape (self.n, other.n)."""
        ok = np.ones((self.n, other.n), dtype=bool)
        for ax in range(self.d):
            lo1 = self.lo[:, ax][:, None]
            hi1 = self.hi[:, ax][:, None]
            lo2 = other.lo[:, ax][None, :]
            hi2 = other.hi[:, ax][None, :]
            ok &= (lo1 <= hi2) & (lo2 <= hi1)
        return ok

    def contains_boxes(self, lam: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Mask (self.n, m): box k of (lo, hi) is contained in lam*cube_i."""
        dlo, dhi = self.boxes(lam)
        ok = np.ones((self.n, lo.shape[0]), dtype=bool)
        for ax in range(self.d):
            ok &= (dlo[:, ax][:, None] <= lo[None, :, ax]) & (
                hi[None, :, ax] <= dhi[:, ax][:, None]
            )
        return ok

    def point_box_distance(self, pts: np.ndarray) -> np.ndarray:
        """Distances from points (m,d) to each cube box, shape (m, self.n)."""
        g2 = np.zeros((pts.shape[0], self.n))
        for ax in range(self.d):
            x = pts[:, ax][:, None]
            g = np.maximum(0.0, np.maximum(self.lo[:, ax][None, :] - x, x - self.hi[:, ax][None, :]))
            g2 += g * g
        return np.sqrt(g2)
