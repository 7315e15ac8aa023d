"""Chains between Whitney cubes, shadows, and the uniformity diagnostics.

A chain between two interior cubes is built by greedy ascent toward larger
cubes from both endpoints, bridged by a shortest path (total side length,
deterministic tie-breaks) in the cube adjacency graph.  Admissibility of a
chain is the two-sided size condition together with the length bound; the
uniformity estimate is the largest margin that every sampled pair admits.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .covering import CoveringFamily
from .geometry import CubeArray, DyadicCube, long_distance


class ChainError(RuntimeError):
    pass


@dataclass
class Chain:
    cubes: tuple[DyadicCube, ...]
    central_index: int  # 0-based position of the largest cube

    def __len__(self):
        return len(self.cubes)

    @property
    def central(self) -> DyadicCube:
        return self.cubes[self.central_index]

    def length(self) -> float:
        return float(sum(c.side for c in self.cubes))


class ChainBuilder:
    """Chain construction over the interior family with per-source caches."""

    def __init__(self, fam: CoveringFamily, ascent_factor: float = 0.25, distance=long_distance):
        self.fam = fam
        self.cubes = fam.w1
        self.adj = fam.adjacency_w1
        self.index = {c: i for i, c in enumerate(self.cubes)}
        self.ascent_factor = ascent_factor
        self.distance = distance
        self._dijkstra_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _ascend(self, start: int, target_side: float) -> list[int]:
        path = [start]
        cur = start
        while self.cubes[cur].side < target_side:
            best = None
            for nb in self.adj[cur]:
                c = self.cubes[nb]
                if c.side > self.cubes[cur].side and (
                    best is None
                    or c.side > self.cubes[best].side
                    or (c.side == self.cubes[best].side and c.key() < self.cubes[best].key())
                ):
                    best = nb
            if best is None:
                break
            path.append(best)
            cur = best
        return path

    def _dijkstra(self, src: int) -> tuple[np.ndarray, np.ndarray]:
        if src in self._dijkstra_cache:
            return self._dijkstra_cache[src]
        n = len(self.cubes)
        dist = np.full(n, np.inf)
        prev = np.full(n, -1, dtype=int)
        dist[src] = self.cubes[src].side
        heap = [(dist[src], self.cubes[src].key(), src)]
        done = np.zeros(n, dtype=bool)
        while heap:
            d, _, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v in self.adj[u]:
                nd = d + self.cubes[v].side
                if nd < dist[v] or (nd == dist[v] and prev[v] >= 0 and self.cubes[u].key() < self.cubes[prev[v]].key()):
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, self.cubes[v].key(), v))
        self._dijkstra_cache[src] = (dist, prev)
        return dist, prev

    def _bridge(self, a: int, b: int) -> list[int]:
        dist, prev = self._dijkstra(a)
        if not np.isfinite(dist[b]):
            raise ChainError(
                f"no path between cubes {self.cubes[a].key()} and {self.cubes[b].key()}: "
                "adjacency graph is disconnected (partial cover)"
            )
        path = [b]
        while path[-1] != a:
            path.append(int(prev[path[-1]]))
        path.reverse()
        return path

    def build(self, q: DyadicCube, s: DyadicCube) -> Chain:
        qi, si = self.index[q], self.index[s]
        if qi == si:
            return Chain(cubes=(q,), central_index=0)
        target = self.distance(q, s) * self.ascent_factor
        up_q = self._ascend(qi, target)
        up_s = self._ascend(si, target)
        bridge = self._bridge(up_q[-1], up_s[-1])
        seq = up_q[:-1] + bridge + up_s[-2::-1]
        seq = _splice_simple(seq)
        cubes = tuple(self.cubes[i] for i in seq)
        sides = [c.side for c in cubes]
        central = int(np.argmax(sides))
        return Chain(cubes=cubes, central_index=central)


def _splice_simple(seq: list[int]) -> list[int]:
    """Remove loops: when a cube reappears, cut the detour between visits."""
    out: list[int] = []
    pos: dict[int, int] = {}
    for node in seq:
        if node in pos:
            del_from = pos[node]
            for dropped in out[del_from + 1 :]:
                del pos[dropped]
            out = out[: del_from + 1]
        else:
            pos[node] = len(out)
            out.append(node)
    return out


def build_chain(fam: CoveringFamily, q: DyadicCube, s: DyadicCube, **kw) -> Chain:
    return ChainBuilder(fam, **kw).build(q, s)


def chain_is_connected(chain: Chain) -> bool:
    from .geometry import neighbors

    return all(neighbors(a, b) for a, b in zip(chain.cubes, chain.cubes[1:]))


def admissibility(chain: Chain, eps: float, distance=long_distance) -> dict:
    """Check the length and two-sided ascent conditions at margin eps.

    All inequalities are closed; the best center index is searched
    exhaustively.  Margins are realized/required ratios (>= 1 passes).
    """
    cubes = chain.cubes
    M = len(cubes)
    D = distance(cubes[0], cubes[-1])
    total = chain.length()
    length_margin = (D / total) / eps if total > 0 else np.inf

    a = np.array([cubes[j].side / distance(cubes[0], cubes[j]) for j in range(M)])
    b = np.array([cubes[j].side / distance(cubes[j], cubes[-1]) for j in range(M)])
    pre = np.minimum.accumulate(a)
    suf = np.minimum.accumulate(b[::-1])[::-1]
    per_j0 = np.minimum(pre, suf)
    j0 = int(np.argmax(per_j0))
    ascent_margins = np.minimum(a, b) / eps
    admissible = (length_margin >= 1.0) and (per_j0[j0] >= eps)
    return {
        "admissible": bool(admissible),
        "length_margin": float(length_margin),
        "best_j0": j0,
        "ascent_margin": float(per_j0[j0] / eps),
        "ascent_margins": ascent_margins,
    }


def best_epsilon(chain: Chain, distance=long_distance) -> float:
    """Largest eps at which the chain is admissible (closed inequalities)."""
    cubes = chain.cubes
    M = len(cubes)
    D = distance(cubes[0], cubes[-1])
    eps_len = D / chain.length()
    a = np.array([cubes[j].side / distance(cubes[0], cubes[j]) for j in range(M)])
    b = np.array([cubes[j].side / distance(cubes[j], cubes[-1]) for j in range(M)])
    pre = np.minimum.accumulate(a)
    suf = np.minimum.accumulate(b[::-1])[::-1]
    eps_ascent = float(np.max(np.minimum(pre, suf)))
    return float(min(eps_len, eps_ascent))


@dataclass
class UniformityReport:
    epsilon_hat: float
    worst_pair: tuple[DyadicCube, DyadicCube]
    pairs: list[tuple[int, int]]
    per_pair_eps: np.ndarray
    per_pair_length_ratio: np.ndarray
    exhaustive: bool

    def to_json(self) -> dict:
        return {
            "epsilon_hat": self.epsilon_hat,
            "worst_pair": [self.worst_pair[0].to_json(), self.worst_pair[1].to_json()],
            "n_pairs": len(self.pairs),
            "exhaustive": self.exhaustive,
        }


def _sample_pairs(fam: CoveringFamily, budget: int, seed: int) -> tuple[list[tuple[int, int]], bool]:
    n = len(fam.w1)
    if n * n <= budget:
        return [(i, k) for i in range(n) for k in range(i, n)], True
    # stratified by dyadic bands of the long distance
    dmat = fam.w1_arr.long_distance_matrix(fam.w1_arr)
    ii, kk = np.triu_indices(n)
    dvals = dmat[ii, kk]
    bands = np.floor(np.log2(dvals)).astype(int)
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, int]] = []
    uniq = np.unique(bands)
    quota = max(1, budget // max(1, len(uniq)))
    for band in uniq:
        idx = np.flatnonzero(bands == band)
        take = idx if idx.size <= quota else rng.choice(idx, size=quota, replace=False)
        pairs.extend((int(ii[t]), int(kk[t])) for t in np.sort(take))
    return pairs, False


def estimate_uniformity(
    fam: CoveringFamily,
    pair_budget: int = 200_000,
    seed: int = 0,
    ascent_factor: float = 0.25,
    distance=long_distance,
) -> UniformityReport:
    """Lower bound on the uniformity margin realized by constructed chains.

    The bound certifies the discretization relative to the greedy chain
    construction; it is not a continuum uniformity proof.
    """
    builder = ChainBuilder(fam, ascent_factor=ascent_factor, distance=distance)
    pairs, exhaustive = _sample_pairs(fam, pair_budget, seed)
    eps = np.empty(len(pairs))
    lratio = np.empty(len(pairs))
    for t, (i, k) in enumerate(pairs):
        chain = builder.build(fam.w1[i], fam.w1[k])
        eps[t] = best_epsilon(chain, distance=distance)
        lratio[t] = chain.length() / distance(fam.w1[i], fam.w1[k])
    worst = int(np.argmin(eps))
    i, k = pairs[worst]
    return UniformityReport(
        epsilon_hat=float(eps[worst]),
        worst_pair=(fam.w1[i], fam.w1[k]),
        pairs=pairs,
        per_pair_eps=eps,
        per_pair_length_ratio=lratio,
        exhaustive=exhaustive,
    )


def shadow(fam: CoveringFamily, p: DyadicCube, rho: float) -> tuple[list[DyadicCube], list]:
    """Cubes of the interior family contained in the closed ball around p.

    Containment is exact corner arithmetic: a box lies in the ball iff its
    farthest corner does.
    """
    members = shadow_members(fam.w1_arr, p, rho)
    cubes = [fam.w1[i] for i in members]
    return cubes, [c.box() for c in cubes]


def shadow_members(arr: CubeArray, p: DyadicCube, rho: float) -> np.ndarray:
    center = p.center
    far = np.maximum(np.abs(arr.lo - center), np.abs(arr.hi - center))
    dist_far = np.sqrt((far**2).sum(axis=1))
    return np.flatnonzero(dist_far <= rho * p.side)


def _max_corner_dist(cube: DyadicCube, center: np.ndarray) -> float:
    lo, hi = cube.box()
    far = np.maximum(np.abs(lo - center), np.abs(hi - center))
    return float(np.sqrt((far**2).sum()))


def rho_epsilon(
    fam: CoveringFamily,
    chains: list[Chain],
    grid: float = 2.0**-6,
) -> float:
    """Smallest dyadic rho certifying both shadow properties on the sample.

    For every sampled chain, the start cube must lie in the rho-shadow of
    each cube up to the central one, and every chain cube must lie in the
    rho-shadow of the central cube.
    """
    need = np.sqrt(fam.w1[0].d)  # self-membership floor
    for chain in chains:
        q = chain.cubes[0]
        qs = chain.central
        for t, p in enumerate(chain.cubes):
            if t <= chain.central_index:
                need = max(need, _max_corner_dist(q, p.center) / p.side)
            need = max(need, _max_corner_dist(p, qs.center) / qs.side)
        # mirror: the end cube ascends to the central cube as well
        s = chain.cubes[-1]
        for t in range(chain.central_index, len(chain.cubes)):
            p = chain.cubes[t]
            need = max(need, _max_corner_dist(s, p.center) / p.side)
    return float(np.ceil(need / grid) * grid)


def shadow_sum_diagnostics(
    fam: CoveringFamily,
    s_exponents: list[float],
    rho: float,
    chains: list[Chain] | None = None,
) -> dict:
    """Realized constants for the shadow and chain scale sums.

    For each exponent s: the ascending sum sup_Q l(Q)^s * sum over L with
    Q in SH(L) of l(L)^-s, and along sampled chains [Q,P] with Q in SH(P),
    sup of sum l(L)^s / l(P)^s and of l(Q)^s * sum l(L)^-s.
    """
    arr = fam.w1_arr
    n = arr.n
    member = np.zeros((n, n), dtype=bool)  # member[i, k]: cube i in SH_rho(cube k)
    for k in range(n):
        member[shadow_members(arr, fam.w1[k], rho), k] = True

    out: dict = {}
    for s in s_exponents:
        weights = arr.side ** (-s)
        glory = (member * weights[None, :]).sum(axis=1) * arr.side**s
        rec = {"ascending_sum_max": float(glory.max())}
        if chains:
            up = dn = 0.0
            for chain in chains:
                q, p = chain.cubes[0], chain.central
                if not member[fam.index_w1(q), fam.index_w1(p)]:
                    continue
                sides = np.array([c.side for c in chain.cubes[: chain.central_index + 1]])
                up = max(up, float((sides**s).sum() / p.side**s))
                dn = max(dn, float((sides ** (-s)).sum() * q.side**s))
            rec["path_up_max"] = up
            rec["path_down_max"] = dn
        out[s] = rec
    return out


def maximal_sum_diagnostics(
    fam: CoveringFamily,
    etas: list[float],
    rho: float,
) -> dict:
    """Realized constants for the cube-sum bounds behind the maximal lemma."""
    w1 = fam.w1_arr
    both = CubeArray(fam.w1 + fam.w2)
    d = w1.d
    out: dict = {}
    dmat_w1 = w1.long_distance_matrix(w1)
    dmat_mixed = both.long_distance_matrix(w1)
    shadow_mass = np.zeros(w1.n)
    for k in range(w1.n):
        members = shadow_members(w1, fam.w1[k], rho)
        shadow_mass[k] = (w1.side[members] ** d).sum() / fam.w1[k].side ** d
    out["shadow_mass_max"] = float(shadow_mass.max())
    for eta in etas:
        sums = (w1.side[None, :] ** d / dmat_w1 ** (d + eta)).sum(axis=1)
        out[f"allover_w1_eta{eta}"] = float((sums * w1.side**eta).max())
        sums_m = (both.side[:, None] ** d / dmat_mixed ** (d + eta)).sum(axis=0)
        out[f"allover_mixed_eta{eta}"] = float((sums_m * w1.side**eta).max())
    return out


def _brute_maximal(g_mass, pts: np.ndarray, sizes: np.ndarray, offsets: int = 5) -> np.ndarray:
    """Sup of box means over a grid of axis cubes containing each point.

    g_mass(lo, hi) returns the exact integral of g over boxes.
    """
    best = np.zeros(pts.shape[0])
    shifts = np.linspace(0.0, 1.0, offsets)
    d = pts.shape[1]
    from itertools import product as iproduct

    for t in sizes:
        for off in iproduct(shifts, repeat=d):
            lo = pts - np.asarray(off) * t
            hi = lo + t
            best = np.maximum(best, g_mass(lo, hi) / t**d)
    return best


def maximal_function_check(
    fam: CoveringFamily,
    sub_box: tuple = ((0.25, 0.25), (0.75, 0.75)),
    etas: tuple = (0.5,),
    radii: tuple = (0.25, 0.5, 1.0),
    n_cubes: int = 40,
) -> dict:
    """Far and close kernel sums against a brute-force maximal function.

    Test masses: g = 1 and g = indicator of a sub-box; integrals over cubes
    are exact box-overlap volumes.
    """
    blo = np.asarray(sub_box[0], dtype=float)
    bhi = np.asarray(sub_box[1], dtype=float)

    def mass_one(lo, hi):
        return np.prod(hi - lo, axis=1)

    def mass_box(lo, hi):
        ov = np.maximum(0.0, np.minimum(hi, bhi) - np.maximum(lo, blo))
        return np.prod(ov, axis=1)

    arr = fam.w1_arr
    d = arr.d
    sizes = np.geomspace(2.0**-5, 2.0, 12)
    step = max(1, arr.n // n_cubes)
    picks = list(range(0, arr.n, step))
    out = {}
    for name, mass in (("one", mass_one), ("box", mass_box)):
        cube_ints = mass(arr.lo, arr.hi)
        far_c = close_c = 0.0
        for i in picks:
            q = fam.w1[i]
            pts, _ = _probe_points(q)
            inf_m = float(_brute_maximal(mass, pts, sizes).min())
            dvals = arr.long_distance_matrix(CubeArray([q]))[:, 0]
            for eta in etas:
                for r in radii:
                    far_mask = dvals > r
                    far = (cube_ints[far_mask] / dvals[far_mask] ** (d + eta)).sum()
                    if inf_m > 0:
                        far_c = max(far_c, far * r**eta / inf_m)
                    close_mask = dvals < r
                    close = (cube_ints[close_mask] / dvals[close_mask] ** (d - eta)).sum()
                    if inf_m > 0:
                        close_c = max(close_c, close / (inf_m * r**eta))
        out[name] = {"far_constant": far_c, "close_constant": close_c}
    return out


def _probe_points(q: DyadicCube) -> tuple[np.ndarray, None]:
    lo, hi = q.box()
    grid = np.linspace(0.2, 0.8, 3)
    from itertools import product as iproduct

    pts = np.array([lo + (hi - lo) * np.asarray(t) for t in iproduct(grid, repeat=q.d)])
    return pts, None
