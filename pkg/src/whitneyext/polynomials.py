"""Moment-matched polynomial projections on cubes.

The degree-k projection of f on a cube Q is the unique polynomial whose
derivative averages over Q match those of f for every multiindex of order
at most k.  The moment system is block-triangular in decreasing order, so
it is solved exactly top-down, with closed-form monomial moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .fields import FieldFunction, PolyField
from .geometry import DyadicCube
from .quadrature import cube_nodes, monomial_moment

MultiIndex = tuple[int, ...]


def multi_indices(d: int, max_order: int) -> list[MultiIndex]:
    """All multiindices of order <= max_order, graded lexicographic."""
    out = [g for g in product(range(max_order + 1), repeat=d) if sum(g) <= max_order]
    out.sort(key=lambda g: (sum(g), g))
    return out


def mi_factorial(g: MultiIndex) -> int:
    out = 1
    for gi in g:
        out *= math.factorial(gi)
    return out


def mi_binom(a: MultiIndex, b: MultiIndex) -> int:
    out = 1
    for ai, bi in zip(a, b):
        out *= math.comb(ai, bi)
    return out


def mi_leq(b: MultiIndex, a: MultiIndex) -> bool:
    return all(bi <= ai for bi, ai in zip(b, a))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(ai - bi for ai, bi in zip(a, b))


def falling(g: MultiIndex, b: MultiIndex) -> int:
    """Product of falling factorials g_i * (g_i-1) * ... used by D^b x^g."""
    out = 1
    for gi, bi in zip(g, b):
        out *= math.perm(gi, bi)
    return out


@dataclass
class PolyCoeffs:
    """Taylor coefficients m_gamma at the cube center: sum m_g (y-x_Q)^g."""

    cube: DyadicCube
    degree: int
    coeffs: dict[MultiIndex, float]

    def to_json(self) -> dict:
        items = sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        return {
            "cube": self.cube.to_json(),
            "k": self.degree,
            "m": [[list(g), v] for g, v in items],
        }


def project(q: DyadicCube, f: FieldFunction, k: int, quad_nodes: int = 8) -> PolyCoeffs:
    """Moment-matched projection of f on Q at degree k.

    Solves order |beta| = k down to 0: at the top the derivative is the
    constant beta! * m_beta, and each lower order is forced by the already
    fixed higher coefficients through exact monomial moments.
    """
    if k > f.k_max:
        raise ValueError(f"projection degree {k} exceeds field k_max={f.k_max}")
    d = q.d
    pts, wts = cube_nodes(q, quad_nodes)
    vol = q.side**d
    integrals = {}
    for beta in multi_indices(d, k):
        integrals[beta] = float(np.dot(wts, f.eval(pts, beta)))

    coeffs: dict[MultiIndex, float] = {}
    for order in range(k, -1, -1):
        for beta in multi_indices(d, k):
            if sum(beta) != order:
                continue
            # int_Q D^beta P = sum_{g >= beta} m_g * perm(g,beta) * M_{g-beta}
            acc = integrals[beta]
            for g, m in coeffs.items():
                if mi_leq(beta, g) and sum(g) > order:
                    acc -= m * falling(g, beta) * monomial_moment(q, mi_sub(g, beta))
            coeffs[beta] = acc / (mi_factorial(beta) * vol)
    return PolyCoeffs(cube=q, degree=k, coeffs=coeffs)


def poly_eval(p: PolyCoeffs, x, deriv: MultiIndex | None = None) -> float:
    x = np.asarray(x, dtype=float)
    vals = poly_eval_batch(p, x.reshape(1, -1), deriv)
    return float(vals[0])


def poly_eval_batch(p: PolyCoeffs, pts: np.ndarray, deriv: MultiIndex | None = None) -> np.ndarray:
    d = p.cube.d
    deriv = deriv or (0,) * d
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    rel = pts - p.cube.center
    out = np.zeros(pts.shape[0])
    for g, m in p.coeffs.items():
        if not mi_leq(deriv, g):
            continue
        term = np.full(pts.shape[0], m * falling(g, deriv))
        for ax in range(d):
            e = g[ax] - deriv[ax]
            if e:
                term *= rel[:, ax] ** e
        out += term
    return out


def ring_diff(q: DyadicCube, f: FieldFunction, k: int, quad_nodes: int = 8) -> PolyCoeffs:
    """Difference of the degree-k and degree-(k-1) projections on Q."""
    if k < 1:
        raise ValueError("ring difference needs k >= 1")
    hi = project(q, f, k, quad_nodes)
    lo = project(q, f, k - 1, quad_nodes)
    coeffs = dict(hi.coeffs)
    for g, m in lo.coeffs.items():
        coeffs[g] = coeffs.get(g, 0.0) - m
    return PolyCoeffs(cube=q, degree=k, coeffs=coeffs)


def poly_as_field(p: PolyCoeffs, label: str = "projected") -> PolyField:
    return PolyField(dict(p.coeffs), center=p.cube.center, label=label)


def _grad_norms(f: FieldFunction, pts, wts, orders: list[int], d: int, p_exp: float):
    """L^p norms of |grad^j f| on a node set, for each j in orders."""
    out = {}
    for j in orders:
        sq = np.zeros(pts.shape[0])
        for g in multi_indices(d, j):
            if sum(g) == j:
                sq += f.eval(pts, g) ** 2
        vals = np.sqrt(sq)
        out[j] = float(np.dot(wts, vals**p_exp) ** (1.0 / p_exp))
    return out


def verify_poly_lemma(
    cubes: list[DyadicCube],
    f: FieldFunction,
    k: int,
    p_exp: float = 2.0,
    chains: dict | None = None,
    quad_nodes: int = 8,
) -> dict:
    """Realized constants for the coefficient / approximation bounds.

    chains, when given, maps cube pairs (S, Q) to cube sequences and enables
    the pairwise projection-difference bound.
    """
    from .geometry import long_distance

    d = cubes[0].d
    c1 = c1bis = c2 = 0.0
    for q in cubes:
        proj = project(q, f, k, quad_nodes)
        pts, wts = cube_nodes(q, quad_nodes)
        ell = q.side
        l1 = _grad_norms(f, pts, wts, list(range(k + 1)), d, 1.0)
        lp = _grad_norms(f, pts, wts, list(range(k + 1)), d, p_exp)
        for g, m in proj.coeffs.items():
            rhs = sum(l1[j] * ell ** (j - sum(g) - d) for j in range(sum(g), k + 1))
            if rhs > 0:
                c1 = max(c1, abs(m) / rhs)
        pnorm = float(np.dot(wts, np.abs(poly_eval_batch(proj, pts)) ** p_exp) ** (1 / p_exp))
        rhs = sum(ell**j * lp[j] for j in range(k + 1))
        if rhs > 0:
            c1bis = max(c1bis, pnorm / rhs)
        resid = f.eval(pts, (0,) * d) - poly_eval_batch(proj, pts)
        lhs = float(np.dot(wts, np.abs(resid) ** p_exp) ** (1 / p_exp))
        osc, base = _osc_norm(f, q, k, p_exp, quad_nodes)
        # skip cubes where the oscillation is pure rounding noise
        if osc > 1e-12 * base:
            c2 = max(c2, lhs / (ell**k * osc))

    out = {"coeff_bound": c1, "lp_bound": c1bis, "approx_bound": c2}

    if chains:
        c3 = 0.0
        skipped = 0
        for (s, q), path in chains.items():
            if s == q:
                skipped += 1
                continue
            ps = project(s, f, k, quad_nodes)
            pq = project(q, f, k, quad_nodes)
            diff = PolyCoeffs(s, k, {g: ps.coeffs.get(g, 0) - pq.coeffs.get(g, 0) for g in ps.coeffs})
            pts, wts = cube_nodes(s, quad_nodes)
            for beta in multi_indices(d, k):
                lhs = float(
                    np.dot(wts, np.abs(poly_eval_batch(diff, pts, beta)) ** p_exp)
                    ** (1 / p_exp)
                )
                rhs = base_sum = 0.0
                for pc in path:
                    osc, base = _osc_norm(f, pc, k, p_exp, quad_nodes)
                    w = (
                        s.side ** (d / p_exp)
                        * long_distance(pc, s) ** (k - sum(beta))
                        / pc.side ** (d / p_exp)
                    )
                    rhs += w * osc
                    base_sum += w * base
                if rhs > 1e-12 * base_sum:
                    c3 = max(c3, lhs / rhs)
        out["pair_bound"] = c3
        out["pairs_skipped"] = skipped
    return out


def _osc_norm(
    f: FieldFunction, q: DyadicCube, k: int, p_exp: float, quad_nodes: int
) -> tuple[float, float]:
    """(oscillation, plain) L^p norms of grad^k f on Q with Gauss cube means.

    The plain norm gives a scale for deciding when the oscillation is only
    rounding noise (constant top derivatives).
    """
    d = q.d
    pts, wts = cube_nodes(q, quad_nodes)
    vol = q.side**d
    sq = np.zeros(pts.shape[0])
    sq_plain = np.zeros(pts.shape[0])
    for g in multi_indices(d, k):
        if sum(g) == k:
            vals = f.eval(pts, g)
            mean = float(np.dot(wts, vals)) / vol
            sq += (vals - mean) ** 2
            sq_plain += vals**2
    osc = float(np.dot(wts, np.sqrt(sq) ** p_exp) ** (1 / p_exp))
    plain = float(np.dot(wts, np.sqrt(sq_plain) ** p_exp) ** (1 / p_exp))
    return osc, plain
