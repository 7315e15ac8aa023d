"""Domain oracles: membership and boundary distance for the gallery domains.

Every oracle answers three vectorised queries: strict membership of points,
distance from points to the boundary, and Euclidean set distance from
axis-aligned boxes to the boundary.  Polygonal boundaries use exact
point-segment and segment-box formulas; the disk uses closed forms.
"""

from __future__ import annotations

import numpy as np


class DomainOracle:
    label: str = "domain"
    d: int = 2

    # bounding box of the domain, pair of (d,) arrays
    bbox: tuple[np.ndarray, np.ndarray]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def box_boundary_distance(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError


def _point_segment_distance(pts, a, b):
    """pts (n,2), a/b (m,2): distances (n,m)."""
    ab = b - a                                    # (m,2)
    den = np.maximum(np.einsum("md,md->m", ab, ab), 1e-300)
    ap = pts[:, None, :] - a[None, :, :]          # (n,m,2)
    t = np.clip(np.einsum("nmd,md->nm", ap, ab) / den[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.linalg.norm(pts[:, None, :] - proj, axis=2)


def _orient(p, q, r):
    # sign of the cross product (q-p) x (r-p); broadcasting-friendly
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (
        q[..., 1] - p[..., 1]
    ) * (r[..., 0] - p[..., 0])


def _segments_intersect(p1, p2, q1, q2):
    """Proper-or-touching intersection of segment batches, shape-broadcast."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) & (d1 != 0) & (d2 != 0) & (d3 != 0) & (d4 != 0)

    def on_seg(a, b, c, dv):
        near = dv == 0
        within = (
            (np.minimum(a[..., 0], b[..., 0]) <= c[..., 0])
            & (c[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
            & (np.minimum(a[..., 1], b[..., 1]) <= c[..., 1])
            & (c[..., 1] <= np.maximum(a[..., 1], b[..., 1]))
        )
        return near & within

    touch = (
        on_seg(q1, q2, p1, d1)
        | on_seg(q1, q2, p2, d2)
        | on_seg(p1, p2, q1, d3)
        | on_seg(p1, p2, q2, d4)
    )
    return proper | touch


def _segment_box_distance(lo, hi, a, b):
    """Set distance from boxes (n,2)x(n,2) to segments (m,2)x(m,2) -> (n,m)."""
    n, m = lo.shape[0], a.shape[0]
    # endpoint inside box -> 0
    inside_a = np.all((a[None, :, :] >= lo[:, None, :]) & (a[None, :, :] <= hi[:, None, :]), axis=2)
    inside_b = np.all((b[None, :, :] >= lo[:, None, :]) & (b[None, :, :] <= hi[:, None, :]), axis=2)
    zero = inside_a | inside_b

    corners = [
        np.stack([lo[:, 0], lo[:, 1]], axis=1),
        np.stack([hi[:, 0], lo[:, 1]], axis=1),
        np.stack([hi[:, 0], hi[:, 1]], axis=1),
        np.stack([lo[:, 0], hi[:, 1]], axis=1),
    ]
    # segment crosses a box edge -> 0
    for i in range(4):
        c1 = corners[i][:, None, :]
        c2 = corners[(i + 1) % 4][:, None, :]
        zero |= _segments_intersect(c1, c2, a[None, :, :], b[None, :, :])

    dist = np.full((n, m), np.inf)
    # box corner to segment
    for c in corners:
        dist = np.minimum(dist, _point_segment_distance(c, a, b))
    # segment endpoint to box
    for p in (a, b):
        g2 = np.zeros((n, m))
        for ax in range(2):
            g = np.maximum(
                0.0,
                np.maximum(lo[:, ax][:, None] - p[:, ax][None, :], p[:, ax][None, :] - hi[:, ax][:, None]),
            )
            g2 += g * g
        dist = np.minimum(dist, np.sqrt(g2))
    dist[zero] = 0.0
    return dist


class PolygonDomain(DomainOracle):
    """Simple polygon, optionally with extra boundary segments (slits)."""

    def __init__(self, vertices, label="polygon", extra_segments=(), area=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.label = label
        va = self.vertices
        vb = np.roll(va, -1, axis=0)
        segs_a = [va]
        segs_b = [vb]
        for s in extra_segments:
            segs_a.append(np.asarray([s[0]], dtype=float))
            segs_b.append(np.asarray([s[1]], dtype=float))
        self.seg_a = np.concatenate(segs_a, axis=0)
        self.seg_b = np.concatenate(segs_b, axis=0)
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        self.bbox = (lo, hi)
        self._area = area

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        va, vb = self.vertices, np.roll(self.vertices, -1, axis=0)
        inside = np.zeros(len(pts), dtype=bool)
        for (x1, y1), (x2, y2) in zip(va, vb):
            straddle = (y1 <= y) != (y2 <= y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xs = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= straddle & (x < np.where(straddle, xs, np.inf))
        return inside

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _point_segment_distance(pts, self.seg_a, self.seg_b).min(axis=1)

    def box_boundary_distance(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return _segment_box_distance(lo, hi, self.seg_a, self.seg_b).min(axis=1)

    def area(self) -> float:
        if self._area is not None:
            return self._area
        va, vb = self.vertices, np.roll(self.vertices, -1, axis=0)
        return float(abs(np.sum(va[:, 0] * vb[:, 1] - vb[:, 0] * va[:, 1])) / 2.0)


class DiskDomain(DomainOracle):
    def __init__(self, center=(0.0, 0.0), radius=1.0, label="disk"):
        self.c = np.asarray(center, dtype=float)
        self.r = float(radius)
        self.label = label
        self.bbox = (self.c - self.r, self.c + self.r)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.linalg.norm(pts - self.c, axis=1) < self.r

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.abs(np.linalg.norm(pts - self.c, axis=1) - self.r)

    def box_boundary_distance(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        q = np.clip(self.c[None, :], lo, hi)
        dmin = np.linalg.norm(q - self.c[None, :], axis=1)
        far = np.maximum(np.abs(lo - self.c[None, :]), np.abs(hi - self.c[None, :]))
        dmax = np.linalg.norm(far, axis=1)
        out = np.zeros(lo.shape[0])
        outside = dmin >= self.r
        inside = dmax <= self.r
        out[outside] = dmin[outside] - self.r
        out[inside] = self.r - dmax[inside]
        return out

    def area(self) -> float:
        return float(np.pi * self.r**2)


class BoxDomain(DomainOracle):
    """Open axis box in any dimension (d = 1 and d = 3 spot checks)."""

    def __init__(self, lo, hi, label="box"):
        self.lo_ = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi_ = np.atleast_1d(np.asarray(hi, dtype=float))
        self.d = len(self.lo_)
        self.label = label
        self.bbox = (self.lo_, self.hi_)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts > self.lo_) & (pts < self.hi_), axis=1)

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        q = np.clip(pts, self.lo_, self.hi_)
        outside = np.linalg.norm(pts - q, axis=1)
        inner = np.minimum(pts - self.lo_, self.hi_ - pts).min(axis=1)
        return np.where(outside > 0, outside, np.abs(inner))

    def box_boundary_distance(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        strictly_inside = np.all((lo > self.lo_) & (hi < self.hi_), axis=1)
        g2 = np.zeros(lo.shape[0])
        for ax in range(self.d):
            g = np.maximum(0.0, np.maximum(self.lo_[ax] - hi[:, ax], lo[:, ax] - self.hi_[ax]))
            g2 += g * g
        disjoint_gap = np.sqrt(g2)
        inner = np.minimum(lo - self.lo_, self.hi_ - hi).min(axis=1)
        out = np.where(strictly_inside, inner, disjoint_gap)
        return out

    def area(self) -> float:
        return float(np.prod(self.hi_ - self.lo_))


class ExteriorOracle(DomainOracle):
    """The open exterior of the closure of a domain; same boundary metric."""

    def __init__(self, inner: DomainOracle):
        self.inner = inner
        self.d = inner.d
        self.label = inner.label + "-exterior"
        self.bbox = inner.bbox

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (~self.inner.contains(pts)) & (self.inner.boundary_distance(pts) > 0)

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        return self.inner.boundary_distance(pts)

    def box_boundary_distance(self, lo, hi) -> np.ndarray:
        return self.inner.box_boundary_distance(lo, hi)


def _koch_iterate(vertices: np.ndarray) -> np.ndarray:
    out = []
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        v = b - a
        p1 = a + v / 3.0
        p2 = a + 2.0 * v / 3.0
        outward = np.array([v[1], -v[0]]) * (np.sqrt(3.0) / 6.0)
        apex = (a + b) / 2.0 + outward
        out.extend([a, p1, apex, p2])
    return np.asarray(out)


def koch_snowflake(iterations: int = 3, center=(0.0, 0.0), circumradius=1.0) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    angles = np.deg2rad([90.0, 210.0, 330.0])
    verts = c + circumradius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    verts = verts[::-1]  # clockwise so the Koch bumps point outward
    for _ in range(iterations):
        verts = _koch_iterate(verts)
    return verts


def _cusp_polygon(gamma: float, halfwidth: float, samples: int) -> np.ndarray:
    # wedge removed from the unit square, pinching at the tip (0.5, 0.5)
    u = (np.arange(samples + 1) / samples) ** 2.0  # cluster near the tip
    ys = 0.5 - 0.5 * u
    xs_left = 0.5 - halfwidth * u**gamma
    xs_right = 0.5 + halfwidth * u**gamma
    left = np.stack([xs_left[::-1], ys[::-1]], axis=1)   # bottom -> tip
    right = np.stack([xs_right, ys], axis=1)             # tip -> bottom
    pts = [(0.0, 0.0)]
    pts += [tuple(p) for p in left[:-1]]
    pts += [tuple(p) for p in right[1:]]
    pts += [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    # drop the duplicated tip neighbourhood points if any collapse
    out = [pts[0]]
    for p in pts[1:]:
        if abs(p[0] - out[-1][0]) + abs(p[1] - out[-1][1]) > 1e-12:
            out.append(p)
    return np.asarray(out)


def make_domain(spec: dict) -> DomainOracle:
    """Build a gallery oracle from a descriptor {"kind": ..., params...}."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "square":
        lo = spec.pop("lo", 0.0)
        hi = spec.pop("hi", 1.0)
        _reject_extras(kind, spec)
        verts = [(lo, lo), (hi, lo), (hi, hi), (lo, hi)]
        return PolygonDomain(verts, label="square")
    if kind == "disk":
        center = spec.pop("center", (0.0, 0.0))
        radius = spec.pop("radius", 1.0)
        _reject_extras(kind, spec)
        return DiskDomain(center, radius)
    if kind == "lshape":
        _reject_extras(kind, spec)
        verts = [(0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1)]
        return PolygonDomain(verts, label="lshape")
    if kind == "snowflake":
        iters = int(spec.pop("iterations", 3))
        _reject_extras(kind, spec)
        return PolygonDomain(koch_snowflake(iters), label=f"snowflake{iters}")
    if kind == "slit":
        _reject_extras(kind, spec)
        verts = [(0, 0), (1, 0), (1, 1), (0, 1)]
        slit = ((0.5, 0.0), (0.5, 0.5))
        return PolygonDomain(verts, label="slit", extra_segments=[slit], area=1.0)
    if kind == "cusp":
        gamma = float(spec.pop("gamma", 2.0))
        halfwidth = float(spec.pop("halfwidth", 0.3))
        samples = int(spec.pop("samples", 48))
        _reject_extras(kind, spec)
        return PolygonDomain(_cusp_polygon(gamma, halfwidth, samples), label="cusp")
    if kind == "box":
        lo = spec.pop("lo")
        hi = spec.pop("hi")
        _reject_extras(kind, spec)
        return BoxDomain(lo, hi)
    raise ValueError(f"unknown domain kind: {kind!r}")


def _reject_extras(kind, spec):
    if spec:
        raise ValueError(f"unknown parameters for domain {kind!r}: {sorted(spec)}")
