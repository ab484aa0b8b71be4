"""Vector-valued percolation: passage vectors, norm-of-sum times and passage sets.

The search runs over states ``(vertex, counts)`` where ``counts[i]`` is the
number of edges of value ``A[i]`` used so far.  Two paths with the same state
have the same passage vector, so deduplicating states is lossless.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .errors import CapTooSmall, DimensionMismatch, Unreachable
from .lattice import Box, Configuration, Edge, Path, as_point, path_passage_value
from .numeric import TOL_CMP, all_exact, close, l1, norm, sqnorm, vsub
from .scalar import greedy_path


def _edge(u, v) -> Edge:
    return Edge(u, v) if u < v else Edge(v, u)


def _require_vector(cfg: Configuration):
    if not cfg.is_vector:
        raise TypeError("vector operation called on a scalar configuration")


def alphabet(cfg: Configuration, box: Optional[Box] = None) -> tuple:
    """The finite value set A: declared, or else every value the configuration can produce."""
    if cfg.value_set is not None:
        return cfg.value_set.elements
    return tuple(cfg.distinct_values())


def default_cap(cfg: Configuration, x, y) -> int:
    """``|x-y| + 2*ceil(|greedy sum| / min nonzero |a|) + 4``."""
    g = greedy_path(x, y)
    total = norm(path_passage_value(cfg, g))
    sizes = [norm(a) for a in alphabet(cfg) if any(c != 0 for c in a)]
    if not sizes:
        return l1(vsub(x, y)) + 4
    return l1(vsub(x, y)) + 2 * math.ceil(total / min(sizes) - 1e-12) + 4


def cap_box(cfg: Configuration, x, y, cap: int) -> Box:
    """Smallest box holding every x-y path with at most ``cap`` edges."""
    slack = (cap - l1(vsub(x, y))) // 2
    box = Box.around([x, y], max(slack, 0))
    if cfg.bounding_box is not None:
        bb = cfg.bounding_box
        box = Box(tuple(max(a, b) for a, b in zip(box.lo, bb.lo)), tuple(min(a, b) for a, b in zip(box.hi, bb.hi)))
    return box


class _Engine:
    """Shared state-space machinery for one configuration and box."""

    def __init__(self, cfg: Configuration, box: Box, edge_ok: Optional[Callable] = None):
        _require_vector(cfg)
        self.cfg = cfg
        self.box = box
        self.alpha = alphabet(cfg)
        self.index = {a: i for i, a in enumerate(self.alpha)}
        self.k = cfg.kind
        self.exact = all_exact(self.alpha)
        self.edge_ok = edge_ok
        self._adj: Dict = {}
        self._vec: Dict = {}

    def adj(self, u):
        out = self._adj.get(u)
        if out is None:
            out = []
            for v in sorted(self.box.neighbors(u)):
                e = _edge(u, v)
                if self.edge_ok is not None and not self.edge_ok(e):
                    continue
                val = self.cfg.value(e)
                try:
                    out.append((v, self.index[val]))
                except KeyError:
                    raise ValueError(f"edge value {val} is not in the declared value set") from None
            self._adj[u] = out
        return out

    def vector(self, counts) -> tuple:
        v = self._vec.get(counts)
        if v is None:
            v = tuple(
                sum((c * a[j] for c, a in zip(counts, self.alpha) if c), 0) for j in range(self.k)
            )
            self._vec[counts] = v
        return v

    def sq(self, counts):
        return sqnorm(self.vector(counts))

    @staticmethod
    def bump(counts, i):
        return counts[:i] + (counts[i] + 1,) + counts[i + 1:]

    def layers(self, source, cap: int, keep_all_preds: bool = False):
        """Breadth-first layers of reachable states up to ``cap`` edges.

        Returns ``preds``: state -> predecessor state (or list of them).
        """
        start = (source, (0,) * len(self.alpha))
        preds = {start: [] if keep_all_preds else None}
        frontier = [start]
        for _ in range(cap):
            nxt = []
            for st in frontier:
                u, counts = st
                for v, i in self.adj(u):
                    ns = (v, self.bump(counts, i))
                    if ns in preds:
                        if keep_all_preds:
                            preds[ns].append(st)
                        continue
                    preds[ns] = [st] if keep_all_preds else st
                    nxt.append(ns)
            frontier = nxt
            if not frontier:
                break
        return preds

    def best_first(self, source, target, cap: int):
        """Dijkstra-like search valid when norms never decrease along extensions."""
        start = (source, (0,) * len(self.alpha))
        pred = {start: None}
        heap = [(0, 0, source, start[1])]
        seen = set()
        while heap:
            sq, length, u, counts = heapq.heappop(heap)
            st = (u, counts)
            if st in seen:
                continue
            seen.add(st)
            if u == target:
                return st, pred
            if length == cap:
                continue
            for v, i in self.adj(u):
                ns = (v, self.bump(counts, i))
                if ns in pred:
                    continue
                pred[ns] = st
                heapq.heappush(heap, (self.sq(ns[1]), length + 1, v, ns[1]))
        return None, pred


def _trace(pred, st) -> Path:
    verts = []
    while st is not None:
        verts.append(st[0])
        st = pred[st]
    return Path(tuple(reversed(verts)))


def _setup(cfg, x, y, cap, box):
    _require_vector(cfg)
    x, y = as_point(x), as_point(y)
    if len(x) != cfg.dim or len(y) != cfg.dim:
        raise DimensionMismatch("endpoint dimension differs from configuration")
    if cap is None:
        cap = default_cap(cfg, x, y)
    dist = l1(vsub(x, y))
    if cap < dist:
        raise CapTooSmall(f"length cap {cap} is below |x-y| = {dist}")
    if box is None:
        box = cap_box(cfg, x, y, cap)
    if x not in box or y not in box:
        raise Unreachable("endpoints outside the search box")
    return x, y, cap, box


@dataclass(frozen=True)
class HilbertOptimum:
    time: float
    sqnorm: object
    vector: tuple
    witness: Path
    cap: int


def _better(a, b, exact):
    """``a`` strictly smaller than ``b`` beyond tolerance."""
    if b is None:
        return True
    if exact:
        return a < b
    return a < b - TOL_CMP


def hilbert_optimum(cfg: Configuration, x, y, cap: Optional[int] = None, box: Optional[Box] = None,
                    strategy: str = "auto") -> HilbertOptimum:
    """Exact minimum of ``|v(path)|`` over x-y paths with at most ``cap`` edges."""
    from .cones import is_positive

    x, y, cap, box = _setup(cfg, x, y, cap, box)
    eng = _Engine(cfg, box)
    if strategy == "auto":
        strategy = "best-first" if is_positive(eng.alpha) else "layers"
    if strategy == "best-first":
        st, pred = eng.best_first(x, y, cap)
        if st is None:
            raise Unreachable(f"{y} not reachable from {x} within {cap} steps")
        sq = eng.sq(st[1])
        return HilbertOptimum(math.sqrt(sq), sq, eng.vector(st[1]), _trace(pred, st), cap)
    preds = eng.layers(x, cap)
    best = None
    for st in preds:
        if st[0] != y:
            continue
        sq = eng.sq(st[1])
        if best is None or _better(sq, best[0], eng.exact):
            best = (sq, st)
    if best is None:
        raise Unreachable(f"{y} not reachable from {x} within {cap} steps")
    sq, st = best
    return HilbertOptimum(math.sqrt(sq), sq, eng.vector(st[1]), _trace(preds, st), cap)


def passage_time_h(cfg: Configuration, x, y, cap: Optional[int] = None, box: Optional[Box] = None):
    """``(time, witness)``: minimal norm of the passage vector, exact up to ``cap`` edges."""
    opt = hilbert_optimum(cfg, x, y, cap, box)
    return opt.time, opt.witness


def passage_minima_h(cfg: Configuration, x, cap: int, box: Box,
                     edge_ok: Optional[Callable] = None) -> dict:
    """Minimal squared norm from ``x`` to every vertex reachable within ``cap`` edges.

    ``edge_ok`` restricts the search to edges it accepts.
    """
    eng = _Engine(cfg, box, edge_ok)
    preds = eng.layers(as_point(x), cap)
    out = {}
    for v, counts in preds:
        sq = eng.sq(counts)
        old = out.get(v)
        if old is None or sq < old:
            out[v] = sq
    return out


@dataclass(frozen=True)
class PassageSet:
    source: tuple
    target: tuple
    cap: int
    vectors: dict  # vector -> shortest path length realising it

    def min_norm(self) -> float:
        return math.sqrt(min(sqnorm(v) for v in self.vectors))

    def min_sqnorm(self):
        return min(sqnorm(v) for v in self.vectors)

    def __contains__(self, v) -> bool:
        return tuple(v) in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def passage_set(cfg: Configuration, x, y, cap: Optional[int] = None, box: Optional[Box] = None) -> PassageSet:
    """Every passage vector realised by an x-y path with at most ``cap`` edges."""
    x, y, cap, box = _setup(cfg, x, y, cap, box)
    eng = _Engine(cfg, box)
    preds = eng.layers(x, cap)
    vecs: dict = {}
    for v, counts in preds:
        if v != y:
            continue
        vec = eng.vector(counts)
        n = sum(counts)
        if vec not in vecs or n < vecs[vec]:
            vecs[vec] = n
    if not vecs:
        raise Unreachable(f"{y} not reachable from {x} within {cap} steps")
    return PassageSet(x, y, cap, dict(sorted(vecs.items(), key=lambda kv: (kv[1], kv[0]))))


def optimal_paths_h(cfg: Configuration, x, y, cap: Optional[int] = None, box: Optional[Box] = None,
                    max_count: int = 10_000, edge_ok: Optional[Callable] = None) -> list:
    """Every x-y path (loops allowed) of at most ``cap`` edges attaining the minimal norm."""
    x, y, cap, box = _setup(cfg, x, y, cap, box)
    eng = _Engine(cfg, box, edge_ok)
    preds = eng.layers(x, cap, keep_all_preds=True)
    ends = [st for st in preds if st[0] == y]
    if not ends:
        raise Unreachable(f"{y} not reachable from {x} within {cap} steps")
    best = min(eng.sq(st[1]) for st in ends)
    finals = [st for st in ends if close(eng.sq(st[1]), best)]
    out: list = []

    def back(st, tail):
        if len(out) >= max_count:
            return
        tail.append(st[0])
        ps = preds[st]
        if not ps:
            out.append(Path(tuple(reversed(tail))))
        for p in ps:
            back(p, tail)
        tail.pop()

    for st in finals:
        back(st, [])
    return sorted(out, key=lambda p: p.vertices)


def is_geodesic_h(cfg: Configuration, p: Path, cap: Optional[int] = None, box: Optional[Box] = None) -> bool:
    """True iff every contiguous subpath attains the minimal norm between its endpoints.

    All subpaths are compared against paths with at most ``max(cap, |p|)``
    edges, so the path itself is always a candidate.
    """
    return first_nonoptimal_subpath(cfg, p, cap, box) is None


def first_nonoptimal_subpath(cfg: Configuration, p: Path, cap: Optional[int] = None,
                             box: Optional[Box] = None):
    """``(i, j)`` of the first subpath (by start, then end) beaten by another path, else None."""
    _require_vector(cfg)
    if p.dim != cfg.dim:
        raise DimensionMismatch("path and configuration dimensions differ")
    n = len(p)
    cap = max(cap or 0, n)
    if box is None:
        box = Box.around(p.vertices, cap // 2 + 1)
        if cfg.bounding_box is not None:
            bb = cfg.bounding_box
            box = Box(tuple(max(a, b) for a, b in zip(box.lo, bb.lo)),
                      tuple(min(a, b) for a, b in zip(box.hi, bb.hi)))
    eng = _Engine(cfg, box)
    vals = [cfg.value(e) for e in p.edges]
    for i in range(n):
        minima = passage_minima_h(cfg, p.vertices[i], cap, box)
        acc = (0,) * cfg.kind
        for j in range(i + 1, n + 1):
            acc = tuple(a + b for a, b in zip(acc, vals[j - 1]))
            sq = sqnorm(acc)
            best = minima[p.vertices[j]]
            if _better(best, sq, eng.exact):
                return (i, j)
    return None


# --- monotonicity sampling --------------------------------------------------


@dataclass
class MonotonicityReport:
    trials: int
    violations: int = 0
    example: Optional[tuple] = None  # (inner path, outer path, inner time, outer time)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _random_walk(rng: random.Random, box: Box, start, length: int):
    verts = [start]
    seen = {start}
    for _ in range(length):
        opts = [v for v in box.neighbors(verts[-1]) if v not in seen]
        if not opts:
            break
        v = opts[rng.randrange(len(opts))]
        verts.append(v)
        seen.add(v)
    return verts


def monotonicity_check(cfg: Configuration, trials: int, seed: int = 0, box: Optional[Box] = None,
                       max_len: int = 10) -> MonotonicityReport:
    """Sample nested self-avoiding paths and count cases with |v(inner)| > |v(outer)|."""
    _require_vector(cfg)
    if box is None:
        box = cfg.bounding_box
    if box is None:
        pts = [e.a for e in cfg.explicit] + [e.b for e in cfg.explicit]
        box = Box.around(pts, 1) if pts else Box.cube(cfg.dim, max_len)
    rng = random.Random(seed)
    pts = list(box.points())
    exact = all_exact(alphabet(cfg))
    rep = MonotonicityReport(trials)
    vcache = {}
    for _ in range(trials):
        start = pts[rng.randrange(len(pts))]
        verts = _random_walk(rng, box, start, rng.randint(1, max_len))
        if len(verts) < 2:
            continue
        pref = [(0,) * cfg.kind]
        for u, v in zip(verts, verts[1:]):
            e = _edge(u, v)
            val = vcache.get(e)
            if val is None:
                val = vcache[e] = cfg.value(e)
            pref.append(tuple(a + b for a, b in zip(pref[-1], val)))
        n = len(verts) - 1
        i = rng.randint(0, n - 1)
        j = rng.randint(i + 1, n)
        inner = sqnorm(vsub(pref[j], pref[i]))
        outer = sqnorm(pref[n])
        if _better(outer, inner, exact):
            rep.violations += 1
            if rep.example is None:
                rep.example = (Path(tuple(verts[i:j + 1])), Path(tuple(verts)), math.sqrt(inner), math.sqrt(outer))
    return rep
