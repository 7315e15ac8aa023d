"""Tensor Gauss-Legendre rules on cubes, with dyadic subdivision."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .geometry import DyadicCube


@lru_cache(maxsize=32)
def _gauss_1d(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


@lru_cache(maxsize=64)
def _tensor_ref(m: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on the reference cube [-1, 1]^d."""
    x, w = _gauss_1d(m)
    pts = np.array(list(product(x, repeat=d)))
    wts = np.prod(np.array(list(product(w, repeat=d))), axis=1)
    return pts, wts


def box_nodes(lo, hi, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss nodes and weights on the box [lo, hi]."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = len(lo)
    ref, wref = _tensor_ref(m, d)
    half = (hi - lo) / 2.0
    pts = (lo + hi) / 2.0 + ref * half
    wts = wref * np.prod(half)
    return pts, wts


def cube_nodes(q: DyadicCube, m: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = q.box()
    return box_nodes(lo, hi, m)


def subdivided_box_nodes(lo, hi, m: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes of the rule applied on each cell of a 2^depth dyadic split."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = len(lo)
    n = 1 << depth
    step = (hi - lo) / n
    pts_all, wts_all = [], []
    for cell in product(range(n), repeat=d):
        clo = lo + step * np.array(cell)
        p, w = box_nodes(clo, clo + step, m)
        pts_all.append(p)
        wts_all.append(w)
    return np.concatenate(pts_all), np.concatenate(wts_all)


def cube_nodes_refined(q: DyadicCube, m: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = q.box()
    return subdivided_box_nodes(lo, hi, m, depth)


def monomial_moment(q: DyadicCube, gamma: tuple[int, ...]) -> float:
    """Exact integral over Q of (y - x_Q)^gamma."""
    out = 1.0
    h = q.side / 2.0
    for g in gamma:
        if g % 2 == 1:
            return 0.0
        out *= 2.0 * h ** (g + 1) / (g + 1)
    return out


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-order pairwise (tree) reduction, independent of chunking."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        return 0.0
    work = vals.copy()
    while work.size > 1:
        half = work.size // 2
        head = work[: 2 * half].reshape(half, 2).sum(axis=1)
        work = np.concatenate([head, work[2 * half :]])
    return float(work[0])
