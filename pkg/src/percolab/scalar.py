"""Scalar passage times, optimal paths, geodesics, balls and Hausdorff distances."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptySet, PreconditionFailed, Unreachable
from .lattice import Box, Configuration, Edge, Path, as_point, path_passage_value
from .numeric import TOL_CMP, all_exact, close, is_exact, lcm_of_denominators, leq

# Boxes above this many vertices go through the compiled sparse-graph Dijkstra.
LARGE_BOX = 20_000


def _require_scalar(cfg: Configuration):
    if cfg.is_vector:
        raise TypeError("scalar operation called on a vector configuration")


def _edge(u, v) -> Edge:
    return Edge(u, v) if u < v else Edge(v, u)


def greedy_path(x, y) -> Path:
    """Staircase path fixing coordinates in order."""
    cur = list(x)
    verts = [tuple(cur)]
    for i in range(len(x)):
        step = 1 if y[i] > cur[i] else -1
        while cur[i] != y[i]:
            cur[i] += step
            verts.append(tuple(cur))
    return Path(tuple(verts))


def min_value(cfg: Configuration):
    _require_scalar(cfg)
    if cfg.value_set is not None and not cfg.value_set.is_finite:
        return cfg.value_set.inf
    return min(cfg.distinct_values())


def auto_box(cfg: Configuration, points: Sequence, budget=None) -> Box:
    """Box provably containing every path of cost at most ``budget`` from the points.

    ``budget`` defaults to the cost of the greedy path joining the first and
    last point.
    """
    pts = [tuple(p) for p in points]
    inf_a = min_value(cfg)
    if inf_a <= 0:
        raise PreconditionFailed("automatic box sizing needs a positive minimum edge value; pass a box")
    if budget is None:
        budget = path_passage_value(cfg, greedy_path(pts[0], pts[-1]))
    radius = math.ceil(budget / inf_a)
    box = Box.around(pts, radius)
    if cfg.bounding_box is not None:
        bb = cfg.bounding_box
        box = Box(tuple(max(a, b) for a, b in zip(box.lo, bb.lo)), tuple(min(a, b) for a, b in zip(box.hi, bb.hi)))
    return box


def dijkstra(cfg: Configuration, source, box: Box, stop_at=None):
    """Single-source Dijkstra inside ``box``; returns (dist, pred) dictionaries."""
    dist = {source: 0}
    pred = {source: None}
    done = set()
    heap = [(0, source)]
    cache = {}
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == stop_at:
            break
        for v in box.neighbors(u):
            if v in done:
                continue
            e = _edge(u, v)
            w = cache.get(e)
            if w is None:
                w = cache[e] = cfg.value(e)
            nd = d + w
            old = dist.get(v)
            if old is None or nd < old:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return {u: dist[u] for u in done}, pred


def _trace(pred, target) -> Path:
    verts = [target]
    while pred[verts[-1]] is not None:
        verts.append(pred[verts[-1]])
    return Path(tuple(reversed(verts)))


def _check(cfg, *pts):
    for p in pts:
        if len(p) != cfg.dim:
            raise DimensionMismatch(f"point {p} vs configuration dimension {cfg.dim}")


def passage_time(cfg: Configuration, x, y, box: Optional[Box] = None):
    """Minimal passage time between ``x`` and ``y`` inside ``box`` with one optimal witness."""
    _require_scalar(cfg)
    x, y = as_point(x), as_point(y)
    _check(cfg, x, y)
    if box is None:
        box = auto_box(cfg, [x, y])
    if x not in box or y not in box:
        raise Unreachable("endpoints outside the search box")
    dist, pred = dijkstra(cfg, x, box, stop_at=y)
    if y not in dist:
        raise Unreachable(f"{y} cannot be reached from {x} inside the box")
    return dist[y], _trace(pred, y)


def optimal_paths(cfg: Configuration, x, y, box: Optional[Box] = None, max_count: int = 1000) -> list:
    """All (up to ``max_count``) optimal simple paths, lexicographic by vertex sequence."""
    _require_scalar(cfg)
    x, y = as_point(x), as_point(y)
    _check(cfg, x, y)
    if box is None:
        box = auto_box(cfg, [x, y])
    if x not in box or y not in box:
        raise Unreachable("endpoints outside the search box")
    dx, _ = dijkstra(cfg, x, box)
    if y not in dx:
        raise Unreachable(f"{y} cannot be reached from {x} inside the box")
    dy, _ = dijkstra(cfg, y, box)
    total = dx[y]
    out: list = []
    stack = [x]
    on_path = {x}

    def walk(u):
        if len(out) >= max_count:
            return
        if u == y:
            out.append(Path(tuple(stack)))
            return
        for v in sorted(box.neighbors(u)):
            if v in on_path or v not in dx or v not in dy:
                continue
            if close(dx[u] + cfg.value(_edge(u, v)) + dy[v], total):
                stack.append(v)
                on_path.add(v)
                walk(v)
                on_path.discard(v)
                stack.pop()

    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * box.size + 100))
    try:
        walk(x)
    finally:
        sys.setrecursionlimit(limit)
    return out


def is_geodesic(cfg: Configuration, p: Path, box: Optional[Box] = None) -> bool:
    """True iff every contiguous subpath is optimal between its endpoints."""
    _require_scalar(cfg)
    if p.dim != cfg.dim:
        raise DimensionMismatch("path and configuration dimensions differ")
    verts = p.vertices
    weights = [cfg.value(e) for e in p.edges]
    if box is None:
        box = auto_box(cfg, verts, budget=sum(weights, 0))
    for i in range(len(verts) - 1):
        dist, _ = dijkstra(cfg, verts[i], box)
        acc = 0
        for j in range(i + 1, len(verts)):
            acc += weights[j - 1]
            best = dist.get(verts[j])
            if best is None or (acc > best and not close(acc, best)):
                return False
    return True


# --- balls ------------------------------------------------------------------


@dataclass(frozen=True)
class BallSnapshot:
    t: object
    points: np.ndarray  # (n, d) integer array, lexicographically sorted
    box: Box

    def __len__(self):
        return len(self.points)

    def point_set(self) -> set:
        return {tuple(int(c) for c in row) for row in self.points}


@dataclass(frozen=True)
class RescaledBall:
    scale: object
    points: np.ndarray

    @classmethod
    def of(cls, snap: BallSnapshot, scale=None) -> "RescaledBall":
        s = snap.t if scale is None else scale
        if s <= 0:
            raise ValueError("scale must be positive")
        return cls(s, snap.points.astype(float) / float(s))


def integer_scale(values: Iterable) -> Optional[int]:
    """Common denominator turning all values into integers, or None for floats."""
    vals = list(values)
    if not all_exact(vals):
        return None
    return lcm_of_denominators(Fraction(v) for v in vals)


def box_graph(cfg: Configuration, box: Box, scale: Optional[int] = None) -> csr_matrix:
    """Symmetric sparse adjacency of the box with (optionally integer-scaled) weights."""
    if scale is None:
        arrays = cfg.weight_arrays(box)
    else:
        arrays = cfg.weight_arrays(box, dtype=lambda v: float(v * scale))
    n = box.size
    idx = np.arange(n, dtype=np.int64).reshape(box.shape)
    rows, cols, data = [], [], []
    for axis, w in enumerate(arrays):
        lo = [slice(None)] * box.dim
        hi = [slice(None)] * box.dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        a = idx[tuple(lo)].ravel()
        b = idx[tuple(hi)].ravel()
        ww = np.asarray(w, dtype=np.float64).ravel()
        rows += [a, b]
        cols += [b, a]
        data += [ww, ww]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    # csgraph drops explicit zeros; a tiny positive stand-in keeps zero-cost edges.
    zero = data == 0
    if zero.any():
        data = data.copy()
        data[zero] = np.finfo(float).tiny
    g = csr_matrix((data, (rows, cols)), shape=(n, n))
    return g


def box_distances(cfg: Configuration, source, box: Box, limit=None):
    """Distances from ``source`` to every box vertex via the compiled Dijkstra.

    Returns ``(dist, scale)``; ``dist`` is measured in units of ``1/scale``
    (``scale`` is 1 for floating data), which keeps rational data exact.
    """
    scale = integer_scale(cfg.distinct_values())
    g = box_graph(cfg, box, scale)
    lim = np.inf if limit is None else float(limit * (scale or 1)) + 0.5
    dist = _csgraph_dijkstra(g, directed=False, indices=box.index(tuple(source)), limit=lim)
    return dist, (scale or 1)


def grow_ball(cfg: Configuration, t, box: Box, method: str = "auto") -> BallSnapshot:
    """Lattice points of ``box`` reachable from the origin within time ``t``."""
    _require_scalar(cfg)
    if t < 0:
        raise ValueError("t must be nonnegative")
    origin = (0,) * cfg.dim
    if origin not in box:
        raise ValueError("box must contain the origin")
    if method == "auto":
        method = "sparse" if box.size > LARGE_BOX else "heap"
    if method == "heap":
        dist, _ = dijkstra(cfg, origin, box)
        pts = sorted(p for p, d in dist.items() if leq(d, t))
        arr = np.array(pts, dtype=np.int64).reshape(-1, cfg.dim)
        return BallSnapshot(t, arr, box)
    dist, scale = box_distances(cfg, origin, box, limit=t)
    if is_exact(t) and all_exact(cfg.distinct_values()):
        bound = math.floor(Fraction(t) * scale)
        inside = dist <= bound
    else:
        inside = dist <= float(t) * scale + TOL_CMP * scale
    flat = np.flatnonzero(inside)
    coords = np.stack(np.unravel_index(flat, box.shape), axis=1) + np.array(box.lo)
    order = np.lexsort(coords.T[::-1])
    return BallSnapshot(t, coords[order].astype(np.int64), box)


def _as_array(S) -> np.ndarray:
    if isinstance(S, RescaledBall):
        arr = S.points
    elif isinstance(S, BallSnapshot):
        arr = S.points
    else:
        arr = np.asarray([[float(c) for c in p] for p in S] if not isinstance(S, np.ndarray) else S, dtype=float)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 1)
    return arr


def directed_hausdorff_l1(S1, S2) -> float:
    a, b = _as_array(S1), _as_array(S2)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("Hausdorff distance of an empty set")
    d, _ = cKDTree(b).query(a, k=1, p=1)
    return float(np.max(d))


def hausdorff_l1(S1, S2) -> float:
    """Symmetric Hausdorff distance in the l1 metric between finite point sets."""
    return max(directed_hausdorff_l1(S1, S2), directed_hausdorff_l1(S2, S1))


def sample_l1_ball(d: int, radius, step) -> np.ndarray:
    """Grid points of spacing ``step`` inside the closed l1 ball of ``radius``."""
    n = int(math.floor(float(radius) / float(step) + 1e-12))
    axes = np.arange(-n, n + 1) * float(step)
    grids = np.meshgrid(*([axes] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts[np.abs(pts).sum(axis=1) <= float(radius) + 1e-12]


def ball_convergence_trace(
    cfg: Configuration,
    scales: Sequence,
    K,
    box: Union[Box, Callable, None] = None,
) -> list:
    """``(t, d_H(B(t)/t, K))`` for each scale; ``box`` may be a callable of ``t``."""
    scales = list(scales)
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must increase")
    out = []
    for t in scales:
        if box is None:
            bx = Box.cube(cfg.dim, math.ceil(t / min_value(cfg)))
        elif callable(box):
            bx = box(t)
        else:
            bx = box
        snap = grow_ball(cfg, t, bx)
        out.append((t, hausdorff_l1(RescaledBall.of(snap), K)))
    return out
