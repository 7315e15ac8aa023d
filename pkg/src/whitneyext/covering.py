"""Whitney coverings and the interior/exterior cube families.

The construction refines dyadic cubes top-down: a cube is kept when its
closed box stays strictly off the boundary, its center lies in the open
set, and the two-sided size condition

    c_w * l(Q) <= l(Q) + dist(Q, boundary) <= 4 * c_w * l(Q)

holds; otherwise the cube is split, down to the generation cap.  Cubes that
never satisfy the rule at the cap are reported as uncovered volume.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .domains import DomainOracle, ExteriorOracle
from .geometry import CubeArray, DyadicCube


@dataclass
class WhitneyParams:
    c_w: float = 2.0
    max_generation: int = 6
    ell0: float = 1.0

    def __post_init__(self):
        if self.c_w < 1.0:
            raise ValueError("c_w must be >= 1")
        if self.ell0 <= 0:
            raise ValueError("ell0 must be positive")


def computation_box(oracle: DomainOracle, factor: float = 3.0) -> tuple[np.ndarray, np.ndarray, int]:
    """Dyadic-aligned box of roughly `factor` times the bounding box.

    Returns (lo, hi, root_generation); the box tiles exactly with 2**d root
    cubes of generation root_generation.
    """
    lo, hi = oracle.bbox
    extent = float(np.max(hi - lo))
    center = np.rint((np.asarray(lo) + np.asarray(hi)) / 2.0)
    half = 2.0 ** math.ceil(math.log2(max(factor * extent / 2.0, 1.0)))
    root_gen = -int(math.log2(half))
    return center - half, center + half, root_gen


def _root_cubes(lo: np.ndarray, root_gen: int, d: int) -> list[DyadicCube]:
    side = 2.0 ** (-root_gen)
    base = np.rint(lo / side).astype(int)
    cubes = []
    from itertools import product

    for off in product(range(2), repeat=d):
        cubes.append(DyadicCube(root_gen, tuple(int(b + o) for b, o in zip(base, off))))
    return cubes


def keep_rule(oracle: DomainOracle, cubes: list[DyadicCube], c_w: float):
    """Vectorised keep/discard/subdivide classification.

    Returns (keep, discard) boolean arrays; the rest subdivide.
    """
    arr = CubeArray(cubes)
    dist = oracle.box_boundary_distance(arr.lo, arr.hi)
    center_in = oracle.contains(arr.center)
    ell = arr.side
    dlong = ell + dist
    keep = center_in & (dist > 0) & (c_w * ell <= dlong) & (dlong <= 4 * c_w * ell)
    discard = (~center_in) & (dist > 0)
    return keep, discard


def whitney_cover(
    oracle: DomainOracle,
    side: str,
    params: WhitneyParams,
    box_factor: float = 3.0,
) -> list[DyadicCube]:
    """Whitney cubes of the interior of `oracle` or of its open exterior.

    The exterior cover lives inside the dyadic computation box; the
    discarded far field is handled analytically by the norm estimators.
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    box_lo, box_hi, root_gen = computation_box(oracle, box_factor)
    open_oracle = oracle if side == "interior" else ExteriorOracle(oracle)
    frontier = _root_cubes(box_lo, root_gen, oracle.d)
    kept: list[DyadicCube] = []
    for gen in range(root_gen, params.max_generation + 1):
        if not frontier:
            break
        keep, discard = keep_rule(open_oracle, frontier, params.c_w)
        nxt = []
        for cube, k, dc in zip(frontier, keep, discard):
            if k:
                kept.append(cube)
            elif not dc and gen < params.max_generation:
                nxt.extend(cube.children())
        frontier = nxt
    kept.sort(key=lambda c: c.key())
    return kept


def _adjacency(arr: CubeArray, chunk: int = 1024) -> list[np.ndarray]:
    """Neighbor index lists under closed-box contact (self excluded)."""
    out = []
    for start in range(0, arr.n, chunk):
        sub = CubeArray(arr.cubes[start : start + chunk])
        touch = sub.touch_matrix(arr)
        for i in range(sub.n):
            row = np.flatnonzero(touch[i])
            out.append(row[row != start + i])
    return out


@dataclass
class CoveringFamily:
    """Interior and exterior Whitney families with the symmetrization map."""

    oracle: DomainOracle
    params: WhitneyParams
    w1: list[DyadicCube]
    w2: list[DyadicCube]
    w3: set[DyadicCube] = field(default_factory=set)
    w3p: set[DyadicCube] = field(default_factory=set)
    w4: set[DyadicCube] = field(default_factory=set)
    sym: dict[DyadicCube, DyadicCube] = field(default_factory=dict)
    box_factor: float = 3.0
    uncovered_interior: float = 0.0
    uncovered_exterior: float = 0.0

    def __post_init__(self):
        self.w1_arr = CubeArray(self.w1)
        self.w2_arr = CubeArray(self.w2)
        self.adjacency_w1 = _adjacency(self.w1_arr)
        self.adjacency_w2 = _adjacency(self.w2_arr)
        self._w1_index = {c: i for i, c in enumerate(self.w1)}
        self._w2_index = {c: i for i, c in enumerate(self.w2)}

    def index_w1(self, cube: DyadicCube) -> int:
        return self._w1_index[cube]

    def whitney_margins(self, side: str = "interior") -> tuple[float, float]:
        """Realized (min, max) of D(Q, boundary) / (c_w * l(Q)) over a family."""
        arr = self.w1_arr if side == "interior" else self.w2_arr
        dist = self.oracle.box_boundary_distance(arr.lo, arr.hi)
        ratio = (arr.side + dist) / (self.params.c_w * arr.side)
        return float(ratio.min()), float(ratio.max())

    def superposition_count(self, lam: float = 50.0, side: str = "interior") -> int:
        """Max multiplicity of the dilated family {lam*Q} over cube centers/corners."""
        arr = self.w1_arr if side == "interior" else self.w2_arr
        pts = [arr.center]
        pts.append(arr.lo)
        pts.append(arr.hi)
        pts.append(np.stack([arr.lo[:, 0], arr.hi[:, 1]], axis=1) if arr.d == 2 else arr.lo)
        sample = np.concatenate(pts, axis=0)
        dlo, dhi = arr.boxes(lam)
        best = 0
        for start in range(0, sample.shape[0], 2048):
            block = sample[start : start + 2048]
            mask = np.ones((block.shape[0], arr.n), dtype=bool)
            for ax in range(arr.d):
                x = block[:, ax][:, None]
                mask &= (dlo[:, ax][None, :] <= x) & (x <= dhi[:, ax][None, :])
            best = max(best, int(mask.sum(axis=1).max()))
        return best

    def eqwhitney5_min_ratio(self, side: str = "interior") -> float:
        """min l(S)/l(Q) over same-family pairs with S contained in 5Q."""
        arr = self.w1_arr if side == "interior" else self.w2_arr
        best = np.inf
        for start in range(0, arr.n, 512):
            sub = CubeArray(arr.cubes[start : start + 512])
            inside = sub.contains_boxes(5.0, arr.lo, arr.hi)
            ratio = arr.side[None, :] / sub.side[:, None]
            ratio = np.where(inside, ratio, np.inf)
            best = min(best, float(ratio.min()))
        return best

    def sym_overlap_max(self) -> int:
        counts: dict[DyadicCube, int] = {}
        for q in self.w3:
            s = self.sym[q]
            counts[s] = counts.get(s, 0) + 1
        return max(counts.values()) if counts else 0

    def sym_distance_max(self) -> float:
        best = 0.0
        from .geometry import long_distance

        for q in self.w3:
            best = max(best, long_distance(q, self.sym[q]) / q.side)
        return best

    def to_json(self) -> dict:
        return {
            "domain": self.oracle.label,
            "params": {
                "c_w": self.params.c_w,
                "max_generation": self.params.max_generation,
                "ell0": self.params.ell0,
            },
            "w1": [c.to_json() for c in self.w1],
            "w2": [c.to_json() for c in self.w2],
            "w3": sorted((c.to_json() for c in self.w3), key=str),
            "w3p": sorted((c.to_json() for c in self.w3p), key=str),
            "w4": sorted((c.to_json() for c in self.w4), key=str),
            "sym": [
                {"cube": q.to_json(), "sym": s.to_json()}
                for q, s in sorted(self.sym.items(), key=lambda kv: kv[0].key())
            ],
            "uncovered_interior": self.uncovered_interior,
            "uncovered_exterior": self.uncovered_exterior,
        }


def _match_symmetrized(fam: CoveringFamily) -> None:
    """Assign Q* for small exterior cubes, then extend through neighbors."""
    from .geometry import long_distance

    params = fam.params
    w1_by_gen: dict[int, list[int]] = {}
    for i, c in enumerate(fam.w1):
        w1_by_gen.setdefault(c.j, []).append(i)

    unmatched = 0
    for q in fam.w2:
        if q.side > params.ell0:
            continue
        pool = w1_by_gen.get(q.j, [])
        if not pool:
            unmatched += 1
            continue
        cand = CubeArray([fam.w1[i] for i in pool])
        dvals = cand.long_distance_matrix(CubeArray([q]))[:, 0]
        found = None
        radius = 16.0 * q.side
        for _ in range(3):
            ok = np.flatnonzero(dvals <= radius)
            if ok.size:
                dmin = dvals[ok].min()
                ties = ok[dvals[ok] == dmin]
                # pool is sorted lexicographically because w1 is sorted
                found = fam.w1[pool[int(ties[0])]]
                break
            radius *= 2.0
        if found is None:
            unmatched += 1
            continue
        fam.w3.add(q)
        fam.sym[q] = found
    if unmatched:
        warnings.warn(
            f"{unmatched} small exterior cubes have no size-matched interior "
            "cube within the search radius; excluded from the symmetrized family"
        )

    w3_idx = [fam._w2_index[q] for q in sorted(fam.w3, key=lambda c: c.key())]
    w3_mask = np.zeros(len(fam.w2), dtype=bool)
    w3_mask[w3_idx] = True

    # W3': exterior cubes touching W3 (every W3 cube touches itself)
    for i, q in enumerate(fam.w2):
        if w3_mask[i]:
            fam.w3p.add(q)
            continue
        nbrs = fam.adjacency_w2[i]
        if np.any(w3_mask[nbrs]):
            fam.w3p.add(q)

    # convenient neighbor: minimise D(S, sym(P)) over W3 neighbors P
    for q in sorted(fam.w3p - fam.w3, key=lambda c: c.key()):
        i = fam._w2_index[q]
        cands = []
        for nb in fam.adjacency_w2[i]:
            if w3_mask[nb]:
                target = fam.sym[fam.w2[nb]]
                cands.append((long_distance(q, target), target.key(), target))
        cands.sort(key=lambda t: (t[0], t[1]))
        fam.sym[q] = cands[0][2]

    # W4: W3 cubes all of whose exterior neighbors are in W3
    for q in fam.w3:
        i = fam._w2_index[q]
        if all(w3_mask[nb] for nb in fam.adjacency_w2[i]):
            fam.w4.add(q)


def build_families(
    oracle: DomainOracle,
    params: WhitneyParams,
    box_factor: float = 3.0,
) -> CoveringFamily:
    w1 = whitney_cover(oracle, "interior", params, box_factor)
    w2 = whitney_cover(oracle, "exterior", params, box_factor)
    if not w1:
        raise ValueError(f"empty interior cover for domain {oracle.label!r}")
    fam = CoveringFamily(oracle=oracle, params=params, w1=w1, w2=w2, box_factor=box_factor)

    d = oracle.d
    covered1 = float(sum(c.side**d for c in w1))
    fam.uncovered_interior = max(0.0, oracle.area() - covered1)
    box_lo, box_hi, _ = computation_box(oracle, box_factor)
    ext_area = float(np.prod(box_hi - box_lo)) - oracle.area()
    covered2 = float(sum(c.side**d for c in w2))
    fam.uncovered_exterior = max(0.0, ext_area - covered2)

    _match_symmetrized(fam)
    return fam


def check_symmetrization(fam: CoveringFamily, max_pairs: int = 200_000, seed: int = 0) -> dict:
    """Invariance of the long distance under Q -> Q*, measured over pairs."""
    w3_sorted = sorted(fam.w3, key=lambda c: c.key())
    if not w3_sorted:
        return {"n_w3": 0}
    arr3 = CubeArray(w3_sorted)
    sym3 = CubeArray([fam.sym[q] for q in w3_sorted])
    n = arr3.n

    pairs_total = n * n
    if pairs_total > max_pairs:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=max_pairs)
        jj = rng.integers(0, n, size=max_pairs)
    else:
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()

    d_orig = arr3.long_distance_matrix(arr3)[ii, jj]
    d_sym = sym3.long_distance_matrix(sym3)[ii, jj]
    ratios = d_sym / d_orig

    touch = arr3.touch_matrix(arr3)[ii, jj]
    nbr_ratio = d_sym[touch] / np.maximum(arr3.side[ii[touch]], 1e-300)

    # mixed pairs against interior cubes
    m = min(fam.w1_arr.n, 512)
    mixed = sym3.long_distance_matrix(CubeArray(fam.w1[:m]))
    base = arr3.long_distance_matrix(CubeArray(fam.w1[:m]))
    mixed_ratio = mixed / base

    return {
        "n_w3": n,
        "pair_ratio_min": float(ratios.min()),
        "pair_ratio_max": float(ratios.max()),
        "mixed_ratio_min": float(mixed_ratio.min()),
        "mixed_ratio_max": float(mixed_ratio.max()),
        "neighbor_ratio_max": float(nbr_ratio.max()) if nbr_ratio.size else 0.0,
        "overlap_max": fam.sym_overlap_max(),
        "sym_distance_max": fam.sym_distance_max(),
    }
