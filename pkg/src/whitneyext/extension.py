"""Partition of unity on the exterior cover and the polynomial extension.

The extension of f evaluates to f on the domain and, outside, to the bump
sum over the small exterior cubes of the moment projections taken on their
symmetrized interior partners.  All bump derivatives are exact polynomial
formulas, so arbitrary-order derivatives of the extension come from the
Leibniz rule plus a reciprocal-derivative recursion for the normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .covering import CoveringFamily
from .fields import FieldFunction
from .geometry import CubeArray, DyadicCube
from .polynomials import (
    MultiIndex,
    PolyCoeffs,
    mi_binom,
    mi_leq,
    mi_sub,
    multi_indices,
    poly_eval_batch,
    project,
)

SUPPORT_DILATION = 1.1  # bump support is (11/10)Q

BOUNDARY_EPS = 1e-12


class BoundaryEvalError(ValueError):
    """Raised for evaluation points lying on the boundary (measure zero)."""


@lru_cache(maxsize=16)
def _smoothstep_polys(order: int) -> tuple[np.polynomial.Polynomial, ...]:
    """S and its derivatives: S(0)=0, S(1)=1, C^order flat at both ends."""
    n = order
    from math import comb

    coeffs = np.zeros(2 * n + 2)
    for k in range(n + 1):
        coeffs[n + 1 + k] = comb(n + k, k) * comb(2 * n + 1, n - k) * (-1) ** k
    base = np.polynomial.Polynomial(coeffs)
    polys = [base]
    for _ in range(order + 2):
        polys.append(polys[-1].deriv())
    return tuple(polys)


def _axis_bump_derivs(t: np.ndarray, center: float, inner: float, outer: float, order: int, n_der: int):
    """Values and derivatives of the 1-d plateau bump at points t.

    1 for |t-center| <= inner, 0 for |t-center| >= outer, smoothstep ramp
    between; returns an array (n_der+1, len(t)).
    """
    polys = _smoothstep_polys(order)
    u = t - center
    a = np.abs(u)
    width = outer - inner
    s = (a - inner) / width
    out = np.zeros((n_der + 1, len(t)))
    plateau = a <= inner
    ramp = (a > inner) & (a < outer)
    out[0][plateau] = 1.0
    sr = s[ramp]
    out[0][ramp] = 1.0 - polys[0](sr)
    sign = np.sign(u[ramp])
    for n in range(1, n_der + 1):
        out[n][ramp] = -polys[n](sr) * (sign / width) ** n
    return out


class PartitionOfUnity:
    """Normalized bumps over the exterior cover.

    psi_Q = phi_Q / sum_P phi_P with phi_Q a tensor plateau bump supported
    on (11/10)Q; the normalizer is at least 1 on the union of closed cubes.
    """

    def __init__(self, fam: CoveringFamily, smooth_order: int = 3):
        if smooth_order < 1:
            raise ValueError("smooth_order must be >= 1")
        self.fam = fam
        self.smooth_order = smooth_order
        self.arr = fam.w2_arr
        self.d = fam.oracle.d
        self.support_lo, self.support_hi = self.arr.boxes(SUPPORT_DILATION)

    def active_cubes(self, pts: np.ndarray) -> list[np.ndarray]:
        """For each exterior cover cube, indices of pts inside its support."""
        out = []
        for i in range(self.arr.n):
            mask = np.ones(pts.shape[0], dtype=bool)
            for ax in range(self.d):
                mask &= (pts[:, ax] >= self.support_lo[i, ax]) & (
                    pts[:, ax] <= self.support_hi[i, ax]
                )
            out.append(np.flatnonzero(mask))
        return out

    def bump_derivs(self, i: int, pts: np.ndarray, mis: list[MultiIndex]) -> dict[MultiIndex, np.ndarray]:
        """D^gamma phi_i at pts for each requested multiindex."""
        cube = self.fam.w2[i]
        c = cube.center
        inner = cube.side / 2.0
        outer = SUPPORT_DILATION * cube.side / 2.0
        max_order = max((max(g) for g in mis), default=0)
        per_axis = [
            _axis_bump_derivs(pts[:, ax], c[ax], inner, outer, self.smooth_order, max_order)
            for ax in range(self.d)
        ]
        out = {}
        for g in mis:
            vals = np.ones(pts.shape[0])
            for ax, gi in enumerate(g):
                vals = vals * per_axis[ax][gi]
            out[g] = vals
        return out

    def normalizer_derivs(self, pts: np.ndarray, mis: list[MultiIndex]) -> dict[MultiIndex, np.ndarray]:
        """Derivatives of g = sum_P phi_P at pts."""
        acc = {g: np.zeros(pts.shape[0]) for g in mis}
        actives = self.active_cubes(pts)
        for i, rows in enumerate(actives):
            if rows.size == 0:
                continue
            sub = self.bump_derivs(i, pts[rows], mis)
            for g in mis:
                acc[g][rows] += sub[g]
        return acc

    def psi_derivs(self, pts: np.ndarray, alpha: MultiIndex) -> dict[DyadicCube, dict[MultiIndex, np.ndarray]]:
        """D^gamma psi_Q for all gamma <= alpha, per exterior cube, at pts.

        Dense per-cube output; meant for modest point batches in tests.
        """
        mis = [g for g in multi_indices(self.d, sum(alpha)) if mi_leq(g, alpha)]
        g_der = self.normalizer_derivs(pts, mis)
        h_der = _reciprocal_derivs(g_der, mis)
        out: dict[DyadicCube, dict[MultiIndex, np.ndarray]] = {}
        actives = self.active_cubes(pts)
        for i, rows in enumerate(actives):
            if rows.size == 0:
                continue
            phi = self.bump_derivs(i, pts[rows], mis)
            entry = {}
            for g in mis:
                acc = np.zeros(rows.size)
                for b in mis:
                    if mi_leq(b, g):
                        acc += mi_binom(g, b) * phi[b] * h_der[mi_sub(g, b)][rows]
                full = np.zeros(pts.shape[0])
                full[rows] = acc
                entry[g] = full
            out[self.fam.w2[i]] = entry
        return out


def _reciprocal_derivs(g_der: dict[MultiIndex, np.ndarray], mis: list[MultiIndex]) -> dict[MultiIndex, np.ndarray]:
    """Derivatives of 1/g from those of g, by the Leibniz recursion on g*h=1."""
    some = next(iter(g_der.values()))
    g0 = g_der[(0,) * len(mis[0])]
    safe = np.where(g0 > 0, g0, 1.0)
    h: dict[MultiIndex, np.ndarray] = {}
    for g in sorted(mis, key=lambda t: (sum(t), t)):
        if sum(g) == 0:
            h[g] = np.where(g0 > 0, 1.0 / safe, 0.0)
            continue
        acc = np.zeros(len(some))
        for b in mis:
            if b != (0,) * len(g) and mi_leq(b, g):
                acc += mi_binom(g, b) * g_der[b] * h[mi_sub(g, b)]
        h[g] = np.where(g0 > 0, -acc / safe, 0.0)
    return h


def build_pou(fam: CoveringFamily, smooth_order: int = 3) -> PartitionOfUnity:
    return PartitionOfUnity(fam, smooth_order)


@dataclass
class ExtensionField:
    """The extended function; conforms to the field eval protocol."""

    f: FieldFunction
    fam: CoveringFamily
    pou: PartitionOfUnity
    k: int
    projections: dict[DyadicCube, PolyCoeffs]

    @property
    def d(self) -> int:
        return self.f.d

    @property
    def k_max(self) -> int:
        return self.k

    @property
    def label(self) -> str:
        return f"extend_{self.k}({self.f.label})"

    def eval(self, pts: np.ndarray, gamma: MultiIndex) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if sum(gamma) > self.k:
            raise ValueError(f"extension built at degree {self.k}; got D^{gamma}")
        oracle = self.fam.oracle
        inside = oracle.contains(pts)
        bdist = oracle.boundary_distance(pts)
        on_boundary = bdist <= BOUNDARY_EPS
        if np.any(on_boundary):
            raise BoundaryEvalError(
                f"{int(on_boundary.sum())} evaluation points lie on the boundary "
                "(the extension is defined almost everywhere)"
            )
        out = np.zeros(pts.shape[0])
        if np.any(inside):
            out[inside] = self.f.eval(pts[inside], gamma)
        ext_rows = np.flatnonzero(~inside)
        if ext_rows.size:
            out[ext_rows] = self._eval_exterior(pts[ext_rows], gamma)
        return out

    def _eval_exterior(self, pts: np.ndarray, alpha: MultiIndex) -> np.ndarray:
        pou = self.pou
        mis = [g for g in multi_indices(self.d, sum(alpha)) if mi_leq(g, alpha)]
        g_der = pou.normalizer_derivs(pts, mis)
        h_der = _reciprocal_derivs(g_der, mis)
        # A[(phi_gamma, beta)](x) = sum_Q D^gamma phi_Q(x) * D^beta P_Q(x)
        # over the small exterior cubes carrying polynomials
        acc: dict[tuple[MultiIndex, MultiIndex], np.ndarray] = {}
        w3_sorted = sorted(self.fam.w3, key=lambda c: c.key())
        w2_index = self.fam._w2_index
        actives = pou.active_cubes(pts)
        need_pairs = []
        for beta in mis:  # beta <= alpha: index of the polynomial derivative
            for g in mis:
                if mi_leq(g, mi_sub(alpha, beta)):
                    need_pairs.append((g, beta))
        for q in w3_sorted:
            rows = actives[w2_index[q]]
            if rows.size == 0:
                continue
            sub_pts = pts[rows]
            phi = pou.bump_derivs(w2_index[q], sub_pts, mis)
            poly = self.projections[q]
            pvals = {beta: poly_eval_batch(poly, sub_pts, beta) for beta in mis}
            for g, beta in need_pairs:
                arr = acc.setdefault((g, beta), np.zeros(pts.shape[0]))
                arr[rows] += phi[g] * pvals[beta]
        out = np.zeros(pts.shape[0])
        # D^alpha sum_Q psi_Q P_Q = sum_{beta<=alpha} C(alpha,beta)
        #   * sum_{g<=alpha-beta} C(alpha-beta,g) D^g phi_Q D^{alpha-beta-g}(1/G) D^beta P_Q
        for beta in mis:
            rem = mi_sub(alpha, beta)
            cb = mi_binom(alpha, beta)
            for g in mis:
                if not mi_leq(g, rem):
                    continue
                key = (g, beta)
                if key not in acc:
                    continue
                out += cb * mi_binom(rem, g) * acc[key] * h_der[mi_sub(rem, g)]
        return out


def extend(
    f: FieldFunction,
    fam: CoveringFamily,
    pou: PartitionOfUnity | None = None,
    k: int = 1,
    quad_nodes: int = 8,
    smooth_order: int | None = None,
) -> ExtensionField:
    """Build the degree-k extension with cached projections.

    Projections are taken on the symmetrized partner of every small
    exterior cube, including the neighbor-assigned partners used by the
    diagnostics.
    """
    if f.k_max < k:
        raise ValueError(f"field provides derivatives to order {f.k_max} < k={k}")
    if pou is None:
        pou = build_pou(fam, smooth_order or max(3, k + 1))
    projections = {}
    for q in sorted(fam.w3p, key=lambda c: c.key()):
        projections[q] = project(fam.sym[q], f, k, quad_nodes)
    return ExtensionField(f=f, fam=fam, pou=pou, k=k, projections=projections)
