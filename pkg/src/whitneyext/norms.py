"""Quadrature estimators for the difference seminorms and composite norms.

The double-integral seminorm with kernel |f(x)-f(y)|^q / |x-y|^{sigma*q+d}
is estimated cube-pair-wise over a covering: outer Gauss nodes per cube,
inner Gauss nodes per cube, with same-cube and neighbor blocks refined by
recursive dyadic subdivision (the integrand is integrable there for
Lipschitz inputs).  Exterior truncation tails are reported analytically,
never silently added.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covering import CoveringFamily
from .fields import FieldFunction
from .geometry import CubeArray, DyadicCube
from .polynomials import multi_indices
from .quadrature import box_nodes, pairwise_sum, subdivided_box_nodes

INF = math.inf


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WHITNEYEXT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class NormParams:
    k: int = 0
    sigma: float = 0.5
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ValueError(f"NormParams.sigma must lie in (0,1), got {self.sigma}")
        if not (1.0 <= self.p < INF):
            raise ValueError(f"NormParams.p must lie in [1,inf), got {self.p}")
        if not (1.0 <= self.q):
            raise ValueError(f"NormParams.q must lie in [1,inf], got {self.q}")
        if self.k < 0:
            raise ValueError(f"NormParams.k must be >= 0, got {self.k}")

    @property
    def s(self) -> float:
        return self.k + self.sigma

    def validity(self, d: int) -> bool:
        dq = 0.0 if self.q == INF else d / self.q
        return self.sigma > d / self.p - dq

    def echo(self) -> dict:
        return {"k": self.k, "sigma": self.sigma, "p": self.p, "q": "inf" if self.q == INF else self.q}


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_axis: int = 3
    diag_refine_depth: int = 3
    computation_box_factor: float = 3.0

    def __post_init__(self):
        if self.nodes_per_axis < 2:
            raise ValueError("nodes_per_axis must be >= 2")
        if self.diag_refine_depth < 0:
            raise ValueError("diag_refine_depth must be >= 0")


@dataclass(frozen=True)
class Region:
    """Inner-integration region relative to the outer point x.

    full: all of the cover.  ball: B(x, rho*delta(x)) with 0 < rho < 1.
    shadow: B(x, rho*delta(x)) with rho >= 1 (point Carleson box).
    cube_shadow: the realized cube shadow of the cover cube containing x.
    cube_5q: the 5-dilate of the cover cube containing x.
    A cube enters the inner sum when its box meets the region.
    """

    mode: str = "full"
    rho: float | None = None

    def __post_init__(self):
        if self.mode not in ("full", "ball", "shadow", "cube_shadow", "cube_5q"):
            raise ValueError(f"unknown region mode {self.mode!r}")
        if self.mode == "ball" and not (self.rho and 0.0 < self.rho < 1.0):
            raise ValueError("Region.rho must lie in (0,1) for ball mode")
        if self.mode in ("shadow", "cube_shadow") and not (self.rho and self.rho >= 1.0):
            raise ValueError("Region.rho must be >= 1 for shadow modes")

    def echo(self) -> str:
        return self.mode if self.rho is None else f"{self.mode}({self.rho})"


class SeminormEstimator:
    """Precomputed node geometry over a fixed cover, reused across fields."""

    def __init__(
        self,
        cover: list[DyadicCube],
        quad: QuadratureSpec,
        oracle=None,
    ):
        if not cover:
            raise ValueError("empty cover")
        self.cover = list(cover)
        self.quad = quad
        self.oracle = oracle
        self.arr = CubeArray(self.cover)
        self.d = self.arr.d
        m = quad.nodes_per_axis
        coarse = [box_nodes(*c.box(), m) for c in self.cover]
        self.pts_c = np.stack([p for p, _ in coarse])      # (n, mc, d)
        self.wts_c = np.stack([w for _, w in coarse])      # (n, mc)
        self.n = self.arr.n
        self.mc = self.pts_c.shape[1]
        self.flat_pts = self.pts_c.reshape(-1, self.d)
        self.flat_wts = self.wts_c.reshape(-1)
        touch = []
        for i in range(self.n):
            row = CubeArray([self.cover[i]]).touch_matrix(self.arr)[0]
            touch.append(np.flatnonzero(row))
        self.near = touch                                   # includes i itself
        self._fine_nodes: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._fine_vals: dict[tuple, np.ndarray] = {}
        self._coarse_vals: dict[tuple, np.ndarray] = {}
        if oracle is not None:
            self.delta_c = oracle.boundary_distance(self.flat_pts).reshape(self.n, self.mc)
        else:
            self.delta_c = None

    def _fine(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        if depth not in self._fine_nodes:
            m = self.quad.nodes_per_axis
            nodes = [subdivided_box_nodes(*c.box(), m, depth) for c in self.cover]
            self._fine_nodes[depth] = (
                np.stack([p for p, _ in nodes]),
                np.stack([w for _, w in nodes]),
            )
        return self._fine_nodes[depth]

    def coarse_values(self, fieldfn: FieldFunction, gamma: tuple) -> np.ndarray:
        key = (id(fieldfn), gamma)
        if key not in self._coarse_vals:
            self._coarse_vals[key] = fieldfn.eval(self.flat_pts, gamma).reshape(self.n, self.mc)
        return self._coarse_vals[key]

    def fine_values(self, fieldfn: FieldFunction, gamma: tuple, depth: int) -> np.ndarray:
        key = (id(fieldfn), gamma, depth)
        if key not in self._fine_vals:
            pts, _ = self._fine(depth)
            flat = pts.reshape(-1, self.d)
            self._fine_vals[key] = fieldfn.eval(flat, gamma).reshape(self.n, -1)
        return self._fine_vals[key]

    def _region_cube_mask(self, i: int, X: np.ndarray, region: Region) -> np.ndarray:
        """Mask (mc, n) or (n,) of inner cubes admitted for outer cube i."""
        if region.mode == "full":
            return np.ones(self.n, dtype=bool)
        if region.mode == "cube_5q":
            lo5, hi5 = self.cover[i].box(5.0)
            ok = np.ones(self.n, dtype=bool)
            for ax in range(self.d):
                ok &= (self.arr.lo[:, ax] <= hi5[ax]) & (lo5[ax] <= self.arr.hi[:, ax])
            return ok
        if region.mode == "cube_shadow":
            from .chains import shadow_members

            ok = np.zeros(self.n, dtype=bool)
            ok[shadow_members(self.arr, self.cover[i], region.rho)] = True
            return ok
        # ball / point shadow: cubes meeting B(x, rho*delta(x)), per x
        if self.oracle is None:
            raise ValueError("ball/shadow regions need a domain oracle")
        delta = self.delta_c[i]
        dist_to_boxes = self.arr.point_box_distance(X)      # (mc, n)
        return dist_to_boxes <= (region.rho * delta)[:, None]

    def seminorm(
        self,
        fieldfn: FieldFunction,
        gamma: tuple,
        params: NormParams,
        region: Region = Region(),
        with_error_estimate: bool = False,
    ) -> tuple[float, float | None]:
        """Estimate of the difference seminorm of D^gamma fieldfn.

        Returns (value, error_estimate); the estimate is the difference
        against one refinement level less on the near-diagonal blocks.
        """
        sigma, p, q = params.sigma, params.p, params.q
        d = self.d
        kernel_pow = sigma * q + d if q != INF else None
        r = self.quad.diag_refine_depth
        vals_c = self.coarse_values(fieldfn, gamma)
        fine_pts, fine_wts = self._fine(r)
        vals_f = self.fine_values(fieldfn, gamma, r)
        if with_error_estimate and r > 0:
            fine_pts_lo, fine_wts_lo = self._fine(r - 1)
            vals_f_lo = self.fine_values(fieldfn, gamma, r - 1)
        else:
            fine_pts_lo = fine_wts_lo = vals_f_lo = None

        def one_cube(i: int) -> tuple[float, float]:
            X = self.pts_c[i]                                # (mc, d)
            fx = vals_c[i]                                   # (mc,)
            mask = self._region_cube_mask(i, X, region)
            near = self.near[i]
            near_set = set(near.tolist())
            if mask.ndim == 1:
                far_cubes = np.flatnonzero(mask)
            else:
                far_cubes = np.flatnonzero(mask.any(axis=0))
            far_cubes = np.array([c for c in far_cubes if c not in near_set], dtype=int)

            inner = np.zeros(self.mc)
            if far_cubes.size:
                Y = self.pts_c[far_cubes].reshape(-1, d)
                WY = self.wts_c[far_cubes].reshape(-1)
                VY = vals_c[far_cubes].reshape(-1)
                diff = X[:, None, :] - Y[None, :, :]
                dist = np.sqrt((diff**2).sum(axis=2))
                if mask.ndim == 2:
                    node_ok = np.repeat(mask[:, far_cubes], self.mc, axis=1)
                else:
                    node_ok = None
                dv = np.abs(fx[:, None] - VY[None, :])
                if q != INF:
                    ker = dv**q / dist**kernel_pow * WY[None, :]
                    if node_ok is not None:
                        ker = np.where(node_ok, ker, 0.0)
                    inner += ker.sum(axis=1)
                else:
                    ratio = dv / dist**sigma
                    if node_ok is not None:
                        ratio = np.where(node_ok, ratio, 0.0)
                    inner = np.maximum(inner, ratio.max(axis=1))

            def near_part(fpts, fwts, fvals):
                total = np.zeros(self.mc)
                for s in near:
                    if mask.ndim == 1:
                        if not mask[s]:
                            continue
                        sel = None
                    else:
                        sel = mask[:, s]
                        if not sel.any():
                            continue
                    Y = fpts[s]
                    diff = X[:, None, :] - Y[None, :, :]
                    dist = np.sqrt((diff**2).sum(axis=2))
                    ok = dist > 1e-14
                    dv = np.abs(fx[:, None] - fvals[s][None, :])
                    if q != INF:
                        with np.errstate(divide="ignore", invalid="ignore"):
                            ker = np.where(ok, dv**q / dist**kernel_pow, 0.0) * fwts[s][None, :]
                        contrib = ker.sum(axis=1)
                        if sel is not None:
                            contrib = np.where(sel, contrib, 0.0)
                        total += contrib
                    else:
                        with np.errstate(divide="ignore", invalid="ignore"):
                            ratio = np.where(ok, dv / dist**sigma, 0.0)
                        contrib = ratio.max(axis=1)
                        if sel is not None:
                            contrib = np.where(sel, contrib, 0.0)
                        total = np.maximum(total, contrib)
                return total

            near_hi = near_part(fine_pts, fine_wts, vals_f)
            if q != INF:
                I_hi = inner + near_hi
                acc_hi = float(np.dot(self.wts_c[i], I_hi ** (p / q)))
            else:
                I_hi = np.maximum(inner, near_hi)
                acc_hi = float(np.dot(self.wts_c[i], I_hi**p))

            acc_lo = acc_hi
            if fine_pts_lo is not None:
                near_lo = near_part(fine_pts_lo, fine_wts_lo, vals_f_lo)
                if q != INF:
                    I_lo = inner + near_lo
                    acc_lo = float(np.dot(self.wts_c[i], I_lo ** (p / q)))
                else:
                    I_lo = np.maximum(inner, near_lo)
                    acc_lo = float(np.dot(self.wts_c[i], I_lo**p))
            return acc_hi, acc_lo

        n_threads = _threads()
        results: list[tuple[float, float]] = [None] * self.n  # type: ignore
        if n_threads == 1:
            for i in range(self.n):
                results[i] = one_cube(i)
        else:
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                for i, res in enumerate(pool.map(one_cube, range(self.n), chunksize=16)):
                    results[i] = res
        acc_hi = pairwise_sum(np.array([r_[0] for r_ in results]))
        acc_lo = pairwise_sum(np.array([r_[1] for r_ in results]))
        value = acc_hi ** (1.0 / p)
        err = abs(value - acc_lo ** (1.0 / p)) if fine_pts_lo is not None else None
        return value, err

    def lp_norm(self, fieldfn: FieldFunction, gamma: tuple, p: float) -> float:
        vals = self.coarse_values(fieldfn, gamma)
        acc = pairwise_sum((self.wts_c * np.abs(vals) ** p).reshape(self.n, -1).sum(axis=1))
        return acc ** (1.0 / p)

    def wkp_norm(self, fieldfn: FieldFunction, k: int, p: float) -> float:
        acc = 0.0
        for g in multi_indices(self.d, k):
            acc += self.lp_norm(fieldfn, g, p) ** p
        return acc ** (1.0 / p)


def seminorm_A(
    fieldfn: FieldFunction,
    cover: list[DyadicCube],
    params: NormParams,
    region: Region = Region(),
    quad: QuadratureSpec = QuadratureSpec(),
    oracle=None,
    gamma: tuple | None = None,
) -> float:
    """One-shot seminorm over a cover (builds a throwaway estimator)."""
    est = SeminormEstimator(cover, quad, oracle=oracle)
    d = est.d
    value, _ = est.seminorm(fieldfn, gamma or (0,) * d, params, region)
    return value


def norm_Wkp(
    fieldfn: FieldFunction,
    cover: list[DyadicCube],
    k: int,
    p: float,
    quad: QuadratureSpec = QuadratureSpec(),
) -> float:
    est = SeminormEstimator(cover, quad)
    return est.wkp_norm(fieldfn, k, p)


@dataclass
class NormReport:
    domain: str
    function: str
    params: NormParams
    region: Region
    depth: int
    quad: QuadratureSpec
    lp_norm: float = np.nan
    wkp_norm: float = np.nan
    seminorms: dict = field(default_factory=dict)     # alpha -> value
    seminorm_total: float = np.nan
    composite: float = np.nan
    seminorm_errors: dict = field(default_factory=dict)
    tail_bound: float = 0.0
    extension_global: float | None = None
    extension_ratio: float | None = None
    validity: bool = True

    def to_json(self) -> dict:
        return {
            "domain": self.domain,
            "function": self.function,
            **self.params.echo(),
            "region": self.region.echo(),
            "depth": self.depth,
            "r": self.quad.diag_refine_depth,
            "lp_norm": self.lp_norm,
            "wkp_norm": self.wkp_norm,
            "seminorm_total": self.seminorm_total,
            "composite": self.composite,
            "seminorm_error": max(self.seminorm_errors.values(), default=0.0),
            "tail_bound": self.tail_bound,
            "extension_global": self.extension_global,
            "extension_ratio": self.extension_ratio,
            "validity": self.validity,
        }


def _warn_validity(params: NormParams, d: int) -> bool:
    ok = params.validity(d)
    if not ok:
        warnings.warn(
            f"parameters sigma={params.sigma}, p={params.p}, q={params.q} violate "
            f"sigma > d/p - d/q in dimension {d}; estimator runs, theorems do not apply"
        )
    return ok


def norm_A_spq(
    fieldfn: FieldFunction,
    fam: CoveringFamily,
    params: NormParams,
    region: Region = Region(),
    quad: QuadratureSpec = QuadratureSpec(),
    estimator: SeminormEstimator | None = None,
    with_error_estimate: bool = True,
) -> NormReport:
    """Composite norm: W^{k,p} plus the order-k derivative seminorms."""
    if region.mode == "ball" and params.q > params.p:
        warnings.warn("ball region is backed by theory only for q <= p")
    est = estimator or SeminormEstimator(fam.w1, quad, oracle=fam.oracle)
    d = est.d
    ok = _warn_validity(params, d)
    rep = NormReport(
        domain=fam.oracle.label,
        function=getattr(fieldfn, "label", "field"),
        params=params,
        region=region,
        depth=fam.params.max_generation,
        quad=quad,
        validity=ok,
    )
    rep.lp_norm = est.lp_norm(fieldfn, (0,) * d, params.p)
    rep.wkp_norm = est.wkp_norm(fieldfn, params.k, params.p)
    total = 0.0
    for alpha in multi_indices(d, params.k):
        if sum(alpha) != params.k:
            continue
        val, err = est.seminorm(fieldfn, alpha, params, region, with_error_estimate)
        rep.seminorms[alpha] = val
        if err is not None:
            rep.seminorm_errors[alpha] = err
        total += val
    rep.seminorm_total = total
    rep.composite = rep.wkp_norm + total
    return rep


def norm_extension_global(
    ef,
    fam: CoveringFamily,
    params: NormParams,
    quad: QuadratureSpec = QuadratureSpec(),
    estimator: SeminormEstimator | None = None,
    with_error_estimate: bool = False,
) -> NormReport:
    """Whole-space composite norm of an extension over the truncated cover.

    The far-field tail outside the computation box is bounded analytically
    and reported in tail_bound, never added to the estimate.
    """
    cover = fam.w1 + fam.w2
    est = estimator or SeminormEstimator(cover, quad, oracle=None)
    d = est.d
    ok = _warn_validity(params, d)
    rep = NormReport(
        domain=fam.oracle.label + "+exterior",
        function=getattr(ef, "label", "extension"),
        params=params,
        region=Region(),
        depth=fam.params.max_generation,
        quad=quad,
        validity=ok,
    )
    rep.lp_norm = est.lp_norm(ef, (0,) * d, params.p)
    rep.wkp_norm = est.wkp_norm(ef, params.k, params.p)
    total = 0.0
    for alpha in multi_indices(d, params.k):
        if sum(alpha) != params.k:
            continue
        val, err = est.seminorm(ef, alpha, params, Region(), with_error_estimate)
        rep.seminorms[alpha] = val
        if err is not None:
            rep.seminorm_errors[alpha] = err
        total += val
    rep.seminorm_total = total
    rep.composite = rep.wkp_norm + total
    rep.tail_bound = _truncation_tail(ef, fam, params, est)
    return rep


def _truncation_tail(ef, fam: CoveringFamily, params: NormParams, est: SeminormEstimator) -> float:
    """Upper bound for the double-integral mass lost to the far field."""
    from .covering import computation_box
    from .extension import SUPPORT_DILATION

    sigma, p, q = params.sigma, params.p, params.q
    d = est.d
    box_lo, box_hi, _ = computation_box(fam.oracle, fam.box_factor)
    w3 = sorted(fam.w3, key=lambda c: c.key())
    if not w3:
        return 0.0
    sup_arr = CubeArray(w3)
    slo, shi = sup_arr.boxes(SUPPORT_DILATION)
    hull_lo, hull_hi = slo.min(axis=0), shi.max(axis=0)
    # distance from the support hull to the computation box boundary
    margin = float(min((hull_lo - box_lo).min(), (box_hi - hull_hi).min()))
    if margin <= 0:
        return INF
    vol_support = float(np.prod(hull_hi - hull_lo))
    surf = 2.0 * np.pi if d == 2 else 2.0 * d  # sphere surface constant
    top = np.zeros(0)
    for alpha in multi_indices(d, params.k):
        if sum(alpha) == params.k:
            vals = est.coarse_values(ef, alpha)
            top = np.concatenate([top, np.abs(vals).ravel()])
    sup_val = float(top.max()) if top.size else 0.0

    # x beyond the box, y in the support collar
    if q != INF:
        expo = (sigma * q + d) * p / q - d
        if expo <= 0:
            return INF
        tail_x = sup_val**p * vol_support ** (p / q) * surf / expo * margin ** (-expo)
        # x in the cover, y beyond the box
        inner_const = (surf / (sigma * q)) ** (p / q) * margin ** (-sigma * p)
        lp_top = 0.0
        for alpha in multi_indices(d, params.k):
            if sum(alpha) == params.k:
                lp_top += est.lp_norm(ef, alpha, params.p) ** p
        tail_y = inner_const * lp_top
    else:
        expo = sigma * p - d
        if expo <= 0:
            return INF
        tail_x = sup_val**p * surf / expo * margin ** (-expo)
        lp_top = 0.0
        for alpha in multi_indices(d, params.k):
            if sum(alpha) == params.k:
                lp_top += est.lp_norm(ef, alpha, params.p) ** p
        tail_y = margin ** (-sigma * p) * lp_top
    return (tail_x + tail_y) ** (1.0 / p)


def inequality_diagnostics(
    fam: CoveringFamily,
    fieldfn: FieldFunction,
    params: NormParams,
    quad: QuadratureSpec = QuadratureSpec(),
    rho: float = 3.0,
) -> dict:
    """Realized constants for the cube-sum inequalities and the
    shadow-restricted seminorm equivalence."""
    sigma, p, q = params.sigma, params.p, params.q
    if q == INF:
        raise ValueError("inequality diagnostics implemented for finite q")
    d = fam.oracle.d
    est = SeminormEstimator(fam.w1, quad, oracle=fam.oracle)
    gamma0 = (0,) * d

    vals = est.coarse_values(fieldfn, gamma0)             # (n, mc)
    vols = fam.w1_arr.side**d
    means = (est.wts_c * vals).sum(axis=1) / vols
    osc_q = (est.wts_c * np.abs(vals - means[:, None]) ** q).sum(axis=1)
    l1 = (est.wts_c * np.abs(vals)).sum(axis=1)

    both = CubeArray(fam.w1 + fam.w2)
    dmat = both.long_distance_matrix(fam.w1_arr)          # (n1+n2, n1)

    # sum over cubes of ( sum_L int_L |f - f_L|^q / D^{sq+d} )^{p/q} l(Q)^d
    inner = (osc_q[None, :] / dmat ** (sigma * q + d)).sum(axis=1)
    lhs_control = pairwise_sum(inner ** (p / q) * both.side**d)
    sem_full, _ = est.seminorm(fieldfn, gamma0, params, Region())
    out = {
        "cube_mean_kernel_sum": lhs_control / max(sem_full**p, 1e-300),
        "seminorm_full": sem_full,
    }

    # weighted l1 cube sums against the plain L^p norm (needs q < p)
    if q < p:
        w = (fam.w1_arr.side ** (sigma + d / q - d) / dmat ** (sigma + d / q)) ** q
        inner2 = (l1[None, :] ** q * w).sum(axis=1)
        lhs_norm = pairwise_sum(inner2 ** (p / q) * both.side**d) ** (1.0 / p)
        lp = est.lp_norm(fieldfn, gamma0, p)
        out["weighted_l1_kernel_sum"] = lhs_norm / max(lp, 1e-300)

    # shadow-restricted seminorm vs the full one, both directions
    sem_shadow, _ = est.seminorm(fieldfn, gamma0, params, Region("cube_shadow", rho))
    out["shadow_over_full"] = sem_shadow / max(sem_full, 1e-300)
    out["full_over_shadow"] = sem_full / max(sem_shadow, 1e-300)
    return out
