"""Explicit finite configurations with a claimed property, and verifiers for them.

Every generator here builds a configuration on a small box; every verifier
re-establishes the claimed property by exhaustive search rather than by
re-running the argument that motivated the construction.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from . import cones
from .errors import (CapTooSmall, NoEvenPair, NoMargin, NormMismatch, NotNegative, NotSPD,
                     ParityMismatch, PreconditionFailed, RayContained, Unreachable)
from .hilbert import (first_nonoptimal_subpath, optimal_paths_h, passage_minima_h,
                      passage_set)
from .lattice import Box, Configuration, Edge, Path, ValueSet, canonical_edge, path_passage_value
from .numeric import (TOL_CMP, all_exact, dot, is_exact, json_number, l1, norm, sqnorm,
                      to_number, vadd, vscale, vsub)
from .scalar import box_graph, integer_scale, passage_time


def _edge(u, v) -> Edge:
    return Edge(u, v) if u < v else Edge(v, u)


def _axis_point(d: int, k: int) -> tuple:
    return (k,) + (0,) * (d - 1)


# --- reports ----------------------------------------------------------------


@dataclass
class GadgetReport:
    """Outcome of one verifier run; a failed run always carries a witness."""

    claim: str
    verified: bool
    counterexample: Optional[tuple] = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.verified and self.counterexample is None:
            raise ValueError("a failed verification must carry a counterexample")

    def to_json(self) -> dict:
        out = {"claim": self.claim, "verified": self.verified,
               "stats": {k: json_number(v) for k, v in self.stats.items()}}
        if self.counterexample is not None:
            out["counterexample"] = [
                p.to_json() if isinstance(p, Path) else json_number(p) for p in self.counterexample
            ]
        return out


# --- skew-box gadget --------------------------------------------------------


@dataclass(frozen=True)
class SkewBoxParams:
    """Sizes of ``K1 = [-p, p]^d`` and ``K2 = [-q', q] x [-r, r]^(d-1)``.

    ``proof_faithful`` params satisfy every inequality the funneling argument
    needs; shrunken params (minimal mode, desk-scale Hilbert runs) only keep
    the nesting ``p < q < r < q'``.
    """

    d: int
    p: int
    q: int
    r: int
    q_prime: int
    a: object = None
    b: object = None
    eps: object = None
    lam: object = None
    m: int = 1
    proof_faithful: bool = True

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise PreconditionFailed("; ".join(problems))

    def violations(self) -> list:
        p, q, r, qq, d = self.p, self.q, self.r, self.q_prime, self.d
        out = []
        if d < 2:
            out.append("d must be at least 2")
        if not (0 < p < q < r < qq):
            out.append(f"need 0 < p < q < r < q' (got {p}, {q}, {r}, {qq})")
        if not self.proof_faithful:
            return out
        a, b, eps, lam = (Fraction(x) for x in (self.a, self.b, self.eps, self.lam))
        if not (a + eps) * lam < b - eps:
            out.append("(a+eps)*lam < b-eps fails")
        if lam <= 1:
            out.append("lam must exceed 1")
            return out
        if not q - p > max(self.m, 4 * d * p / (lam - 1)):
            out.append("q-p too small")
        if not r - q > (4 * d * p + 2 * q - 2 * p) / (lam - 1):
            out.append("r-q too small")
        if not qq - p > (2 * r + 4 * d * p + 2 * q - 2 * p) / (lam - 1):
            out.append("q'-p too small")
        return out

    def shrunk(self, **changes) -> "SkewBoxParams":
        kw = dict(d=self.d, p=self.p, q=self.q, r=self.r, q_prime=self.q_prime, a=self.a, b=self.b,
                  eps=self.eps, lam=self.lam, m=self.m, proof_faithful=False)
        kw.update(changes)
        return SkewBoxParams(**kw)

    @property
    def K1(self) -> Box:
        return Box.cube(self.d, self.p)

    @property
    def K2(self) -> Box:
        return Box((-self.q_prime,) + (-self.r,) * (self.d - 1), (self.q,) + (self.r,) * (self.d - 1))

    def segment(self) -> list:
        return [_axis_point(self.d, k) for k in range(self.p, self.q + 1)]

    def segment_edges(self) -> list:
        pts = self.segment()
        return [Edge(u, v) for u, v in zip(pts, pts[1:])]

    def cheap_edges(self) -> frozenset:
        """Edges of the K1 boundary, the K2 boundary and the axis segment between them."""
        out = set(self.segment_edges())
        for box in (self.K1, self.K2):
            out.update(e for e in _boundary_edges(box))
        return frozenset(out)

    def sources(self) -> list:
        """Start points of funneling pairs: the K1 boundary and the segment minus its far end."""
        pts = set(self.K1.boundary_points())
        pts.update(_axis_point(self.d, k) for k in range(self.p, self.q))
        return sorted(pts)

    def targets(self) -> list:
        pts = set(self.K2.boundary_points())
        pts.update(_axis_point(self.d, k) for k in range(self.p + 1, self.q + 1))
        return sorted(pts)

    def to_json(self) -> dict:
        return {"d": self.d, "p": self.p, "q": self.q, "r": self.r, "q_prime": self.q_prime,
                "a": json_number(self.a), "b": json_number(self.b), "eps": json_number(self.eps),
                "lam": json_number(self.lam), "m": self.m, "proof_faithful": self.proof_faithful}


def _boundary_edges(box: Box):
    """Edges lying in a facet, enumerated facet by facet."""
    d = box.dim
    for i in range(d):
        for side in (box.lo[i], box.hi[i]):
            lo = list(box.lo)
            hi = list(box.hi)
            lo[i] = hi[i] = side
            yield from Box(tuple(lo), tuple(hi)).edges()


def _pick_lambda(a: Fraction, b: Fraction, eps: Fraction) -> Fraction:
    """Largest ``n/2^j`` (first j=2 with a value above 1) satisfying ``(a+eps) lam < b-eps``."""
    bound = (b - eps) / (a + eps)
    den = 4
    while True:
        n = math.ceil(bound * den) - 1
        lam = Fraction(n, den)
        if lam > 1:
            return lam
        den *= 2


def choose_gadget_params(d: int, m: int, a, b, A=None, *, p: int = 2, lam=None) -> SkewBoxParams:
    """Smallest integer ``q, r, q'`` for which the funneling inequalities hold strictly.

    ``lam`` overrides the default multiplier choice; ``A`` (when given) must contain ``a`` and ``b``.
    """
    a, b = Fraction(to_number(a)), Fraction(to_number(b))
    if b <= a:
        raise NoMargin(f"need a < b, got a={a}, b={b}")
    if m < 1:
        raise PreconditionFailed("m must be at least 1")
    if A is not None:
        vals = {Fraction(to_number(v)) for v in A}
        if a not in vals or b not in vals:
            raise PreconditionFailed("a and b must belong to A")
    eps = (b - a) / 8
    lam = _pick_lambda(a, b, eps) if lam is None else Fraction(to_number(lam))
    if not (a + eps) * lam < b - eps or lam <= 1:
        raise NoMargin(f"multiplier {lam} leaves no margin")

    def above(x):
        return math.floor(x) + 1

    q = p + above(max(Fraction(m), 4 * d * p / (lam - 1)))
    r = max(q + above((4 * d * p + 2 * q - 2 * p) / (lam - 1)), q + 1)
    qq = max(p + above((2 * r + 4 * d * p + 2 * q - 2 * p) / (lam - 1)), r + 1)
    return SkewBoxParams(d, p, q, r, qq, _num(a), _num(b), _num(eps), _num(lam), m)


def _num(x):
    return to_number(Fraction(x))


def skew_box_config(params: SkewBoxParams):
    """Scalar gadget: ``a`` on cheap edges, ``b`` everywhere else.  Returns ``(config, cheap)``."""
    cheap = params.cheap_edges()
    a, b = to_number(params.a), to_number(params.b)
    cfg = Configuration(params.d, b, explicit={e: a for e in cheap},
                        value_set=ValueSet.between(min(a, b), max(a, b)))
    return cfg, cheap


def _funnel_box(params: SkewBoxParams) -> Box:
    # Clamping a path into K2 never raises its cost, so one layer of slack suffices.
    K2 = params.K2
    return Box(tuple(c - 1 for c in K2.lo), tuple(c + 1 for c in K2.hi))


def _edge_arrays(box: Box, cfg: Configuration, scale):
    us, vs, ws, edges = [], [], [], []
    for e in box.edges():
        us.append(box.index(e.a))
        vs.append(box.index(e.b))
        w = cfg.value(e)
        ws.append(float(w * scale) if scale else float(w))
        edges.append(e)
    return np.array(us), np.array(vs), np.array(ws), edges


def _scipy_path(pred_row, box: Box, src: int, dst: int) -> list:
    out = [dst]
    while out[-1] != src:
        nxt = pred_row[out[-1]]
        if nxt < 0:
            raise Unreachable("broken predecessor chain")
        out.append(int(nxt))
    return [box.point(i) for i in reversed(out)]


def _segment_is_bridge(params: SkewBoxParams, cheap: frozenset, cfg: Configuration) -> bool:
    """Each segment edge separates the K1 boundary from the K2 boundary in the cheap graph."""
    box = _funnel_box(params)
    a = cfg.value(params.segment_edges()[0])
    lows = [e for e in cheap if cfg.value(e) <= a]
    k1 = box.index(params.K1.boundary_points()[0])
    k2 = box.index(params.K2.boundary_points()[0])
    for cut in params.segment_edges():
        keep = [e for e in lows if e != cut]
        rows = [box.index(e.a) for e in keep]
        cols = [box.index(e.b) for e in keep]
        g = csr_matrix((np.ones(len(keep)), (rows, cols)), shape=(box.size, box.size))
        _, labels = connected_components(g, directed=False)
        if labels[k1] == labels[k2]:
            return False
    return True


def verify_funneling(cfg: Configuration, cheap: Iterable, params: SkewBoxParams) -> GadgetReport:
    """Check that no optimal path between a source and a target uses an expensive edge.

    Sources are the K1 boundary and the axis segment up to ``q-1``; targets are
    the axis segment from ``p+1`` and the K2 boundary.  Distances come from
    multi-row Dijkstra on integer-scaled weights, so rational data are compared
    exactly.  An expensive edge lies on some optimal path for ``(x1, x2)`` iff
    ``D(x1,u) + w + D(v,x2) = D(x1,x2)`` for one of its orientations.
    """
    cheap = frozenset(cheap)
    box = _funnel_box(params)
    scale = integer_scale(cfg.value(e) for e in box.edges())
    exact = scale is not None
    g = box_graph(cfg, box, scale)
    src = params.sources()
    dst = params.targets()
    si = np.array([box.index(x) for x in src])
    ti = np.array([box.index(x) for x in dst])
    D1, P1 = _csgraph_dijkstra(g, directed=False, indices=si, return_predecessors=True)
    D2, P2 = _csgraph_dijkstra(g, directed=False, indices=ti, return_predecessors=True)
    us, vs, ws, edges = _edge_arrays(box, cfg, scale)
    expensive = np.array([e not in cheap for e in edges])
    eu, ev, ew = us[expensive], vs[expensive], ws[expensive]
    exp_edges = [e for e, x in zip(edges, expensive) if x]
    tol = 0.0 if exact else TOL_CMP
    margin = np.inf
    pairs = 0
    witness = None
    for i, x1 in enumerate(src):
        T = D1[i, ti]                                   # (J,)
        thru1 = D1[i, eu][None, :] + ew[None, :] + D2[:, ev]   # x1 -> u -> v -> x2
        thru2 = D1[i, ev][None, :] + ew[None, :] + D2[:, eu]
        gap = np.minimum(thru1, thru2) - T[:, None]
        same = ti == si[i]
        gap[same, :] = np.inf
        pairs += int((~same).sum())
        margin = min(margin, float(gap.min()))
        if witness is None and (gap <= tol).any():
            j, k = map(int, np.argwhere(gap <= tol)[0])
            forward = thru1[j, k] <= thru2[j, k]
            u, v = (eu[k], ev[k]) if forward else (ev[k], eu[k])
            head = _scipy_path(P1[i], box, si[i], int(u))
            tail = _scipy_path(P2[j], box, ti[j], int(v))[::-1]
            witness = (x1, dst[j], Path(tuple(head + tail)), exp_edges[k])
    stats = {"pairs": pairs, "sources": len(src), "targets": len(dst),
             "expensive_edges": int(expensive.sum()),
             "margin": _unscale(margin, scale), "params": [params.p, params.q, params.r, params.q_prime]}
    if witness is not None:
        x1, x2, path, e = witness
        t_opt, _ = passage_time(cfg, x1, x2, box)
        cost = path_passage_value(cfg, path)
        stats["witness_time"] = cost
        stats["rechecked"] = bool(cost == t_opt if exact else abs(cost - t_opt) <= TOL_CMP)
        return GadgetReport("funnel", False, (path,), stats)
    if not _segment_is_bridge(params, cheap, cfg):
        # cheap edges alone connect the boundaries without the segment
        path = Path(tuple(params.segment()))
        stats["segment_bridge"] = False
        return GadgetReport("funnel", False, (path,), stats)
    stats["segment_bridge"] = True
    return GadgetReport("funnel", True, None, stats)


def _unscale(x, scale):
    if not np.isfinite(x):
        return None
    if scale:
        return to_number(Fraction(int(round(x)), scale))
    return float(x)


def minimal_verified_params(params: SkewBoxParams, check=None) -> SkewBoxParams:
    """Shrink ``q'``, then ``r``, then ``q`` while ``check(params)`` keeps returning True.

    Each coordinate drops by the largest power-of-two step that still
    verifies, halving the step on failure; passes repeat until nothing moves.
    ``check`` defaults to scalar funneling on :func:`skew_box_config`.
    """
    if check is None:
        def check(pp):
            cfg, cheap = skew_box_config(pp)
            return verify_funneling(cfg, cheap, pp).verified

    cur = params
    changed = True
    while changed:
        changed = False
        for name in ("q_prime", "r", "q"):
            step = 1 << max(0, getattr(cur, name).bit_length() - 2)
            while step:
                val = getattr(cur, name) - step
                cand = None
                if not (name == "q" and val - cur.p <= cur.m):
                    try:
                        cand = cur.shrunk(**{name: val})
                    except PreconditionFailed:
                        cand = None
                if cand is not None and check(cand):
                    cur = cand
                    changed = True
                else:
                    step //= 2
    return cur


# --- Hilbert skew box with alternating tree ---------------------------------


@dataclass(frozen=True)
class AlternatingTree:
    """Breadth-first tree of the cheap graph rooted at ``p xi_1``."""

    root: tuple
    parent: dict
    depth: dict
    k2_side: dict  # True for nodes reached through (p+1) xi_1

    def path(self, x, y) -> list:
        up, down = [x], [y]
        while up[-1] != down[-1]:
            if self.depth[up[-1]] >= self.depth[down[-1]]:
                up.append(self.parent[up[-1]])
            else:
                down.append(self.parent[down[-1]])
        return up + down[-2::-1]


def _bfs_tree(params: SkewBoxParams) -> AlternatingTree:
    cheap = params.cheap_edges()
    adj: Dict[tuple, list] = {}
    for e in cheap:
        adj.setdefault(e.a, []).append(e.b)
        adj.setdefault(e.b, []).append(e.a)
    root = _axis_point(params.d, params.p)
    toward_k2 = _axis_point(params.d, params.p + 1)
    parent = {root: None}
    depth = {root: 0}
    side = {root: False}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v in parent:
                continue
            parent[v] = u
            depth[v] = depth[u] + 1
            side[v] = v == toward_k2 if u == root else side[u]
            queue.append(v)
    return AlternatingTree(root, parent, depth, side)


@dataclass(frozen=True)
class AlternatingGadget:
    config: Configuration
    tree_edges: frozenset
    tree: AlternatingTree
    mu: object
    lam_sq: object

    @property
    def lam(self) -> float:
        return math.sqrt(self.lam_sq)


def _ratio(x, y):
    if is_exact(x) and is_exact(y):
        return to_number(Fraction(x) / Fraction(y))
    return float(x) / float(y)


def bfs_alternating_config(params: SkewBoxParams, a, b) -> AlternatingGadget:
    """Vector gadget whose tree paths between the two boundaries alternate ``a`` and ``b``.

    On the K2 side the edge into a node at depth k carries ``b`` for odd k and
    ``a`` for even k; on the K1 side it is the other way round.  Every other
    edge carries ``b``.
    """
    a = tuple(to_number(c) for c in a)
    b = tuple(to_number(c) for c in b)
    if len(a) != len(b):
        raise ValueError("a and b differ in length")
    if cones.is_ray_contained([a, b]):
        raise RayContained("a and b lie on a common ray")
    if sqnorm(a) > sqnorm(b):
        raise PreconditionFailed("need |a| <= |b|")
    mu = _ratio(dot(a, b), sqnorm(b))
    mu = max(mu, 0)
    lam_sq = _ratio(3, 4) + _ratio(mu, 4) if is_exact(mu) else 0.75 + mu / 4
    tree = _bfs_tree(params)
    explicit = {}
    for v, u in tree.parent.items():
        if u is None:
            continue
        odd = tree.depth[v] % 2 == 1
        explicit[_edge(u, v)] = b if odd == tree.k2_side[v] else a
    cfg = Configuration(params.d, b, kind=len(a), explicit=explicit, value_set=ValueSet.finite([a, b]))
    return AlternatingGadget(cfg, frozenset(explicit), tree, mu, lam_sq)


class _Lca:
    """Binary-lifting ancestor queries on an :class:`AlternatingTree`."""

    def __init__(self, tree: AlternatingTree):
        self.tree = tree
        self.up = [dict(tree.parent)]
        top = max(tree.depth.values())
        while (1 << len(self.up)) <= top:
            prev = self.up[-1]
            self.up.append({v: (prev[p] if p is not None else None) for v, p in prev.items()})

    def __call__(self, x, y):
        dep = self.tree.depth
        if dep[x] < dep[y]:
            x, y = y, x
        diff = dep[x] - dep[y]
        for j, table in enumerate(self.up):
            if diff >> j & 1:
                x = table[x]
        if x == y:
            return x
        for table in reversed(self.up):
            if table[x] is not None and table[x] != table[y]:
                x, y = table[x], table[y]
        return self.tree.parent[x]


def _prefix_vectors(cfg: Configuration, tree: AlternatingTree) -> dict:
    vec = {tree.root: (0,) * cfg.kind}
    for v in sorted(tree.parent, key=tree.depth.get):
        u = tree.parent[v]
        if u is not None:
            vec[v] = vadd(vec[u], cfg.value(_edge(u, v)))
    return vec


def verify_funneling_h(cfg: Configuration, params: SkewBoxParams, length_cap: int,
                       route: str = "auto") -> GadgetReport:
    """Tree paths between sources and targets beat every path avoiding the cheap set.

    Also checks the alternating bound ``|v(path)|^2 <= lam^2 n^2 |b|^2`` on each
    tree path used.  ``route`` picks how expensive-only minima are found:
    ``"search"`` runs the state-space search with the cheap set removed;
    ``"uniform"`` (valid when every expensive edge carries the same vector)
    uses ``|b|`` times the graph distance; ``"auto"`` chooses.
    """
    tree = _bfs_tree(params)
    cheap = params.cheap_edges()
    src, dst = params.sources(), params.targets()
    need = max(l1(vsub(x, y)) for x in src for y in dst)
    if length_cap < need:
        raise CapTooSmall(f"length cap {length_cap} is below the widest pair distance {need}")
    box = params.K2
    exp_vals = {cfg.value(e) for e in box.edges() if e not in cheap}
    if route == "auto":
        route = "uniform" if len(exp_vals) == 1 else "search"
    if route == "uniform" and len(exp_vals) != 1:
        raise PreconditionFailed("uniform route needs a single expensive value")
    vec = _prefix_vectors(cfg, tree)
    lca = _Lca(tree)
    b_ref = max(exp_vals, key=sqnorm)
    b_sq = sqnorm(b_ref)
    others = ({cfg.value(e) for e in cheap} | exp_vals) - {b_ref}
    mu = max([_ratio(dot(v, b_ref), b_sq) for v in others] + [0])
    lam_sq = _ratio(3, 4) + _ratio(mu, 4) if is_exact(mu) else 0.75 + mu / 4
    exact = all_exact([vec[tree.root]] + list(exp_vals)) and is_exact(lam_sq)

    def below(x, y):  # x < y
        return x < y if exact else x < y - TOL_CMP

    def atmost(x, y):
        return x <= y if exact else x <= y + TOL_CMP

    worst_ratio = 0.0
    min_gap = math.inf
    pairs = 0
    edge_ok = (lambda e: e not in cheap)
    for x1 in src:
        parents, reach = _expensive_bfs(box, x1, cheap)
        if route == "search":
            minima = passage_minima_h(cfg, x1, length_cap, box, edge_ok=edge_ok)
        else:
            minima = _uniform_minima(box, x1, cheap, b_sq, length_cap)
        for x2 in dst:
            if x1 == x2 or x2 not in reach:  # no path avoids the cheap set
                continue
            pairs += 1
            z = lca(x1, x2)
            n = tree.depth[x1] + tree.depth[x2] - 2 * tree.depth[z]
            v = vsub(vadd(vec[x1], vec[x2]), vscale(2, vec[z]))
            sq = sqnorm(v)
            if n >= 2:
                bound = lam_sq * n * n * b_sq
                worst_ratio = max(worst_ratio, float(sq) / float(n * n * b_sq))
                if not atmost(sq, bound):
                    return GadgetReport("funnel-h", False, (Path(tuple(tree.path(x1, x2))),),
                                        {"pairs": pairs, "failure": "tree bound"})
            best = minima.get(x2)
            if best is None:
                raise CapTooSmall(f"{x2} not reached from {x1} within {length_cap} expensive edges")
            min_gap = min(min_gap, math.sqrt(best) - math.sqrt(sq))
            if not below(sq, best):
                if route == "uniform":
                    verts = [x2]
                    while parents[verts[-1]] is not None:
                        verts.append(parents[verts[-1]])
                    wit = Path(tuple(reversed(verts)))
                else:
                    wit = optimal_paths_h(cfg, x1, x2, length_cap, box, max_count=1, edge_ok=edge_ok)[0]
                return GadgetReport("funnel-h", False, (wit, Path(tuple(tree.path(x1, x2)))),
                                    {"pairs": pairs, "failure": "separation"})
    stats = {"pairs": pairs, "route": route, "lam": math.sqrt(lam_sq), "mu": mu,
             "worst_tree_ratio": math.sqrt(worst_ratio), "min_gap": min_gap,
             "params": [params.p, params.q, params.r, params.q_prime]}
    return GadgetReport("funnel-h", True, None, stats)


def _expensive_bfs(box: Box, x, cheap, cap=None) -> dict:
    """Breadth-first parents from ``x`` over edges outside ``cheap``."""
    parent = {x: None}
    dist = {x: 0}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if cap is not None and dist[u] == cap:
            continue
        for v in box.neighbors(u):
            if v in parent or _edge(u, v) in cheap:
                continue
            parent[v] = u
            dist[v] = dist[u] + 1
            queue.append(v)
    return parent, dist


def _uniform_minima(box: Box, x, cheap, b_sq, cap) -> dict:
    """``|b|^2 n^2`` with ``n`` the breadth-first distance avoiding cheap edges."""
    _, dist = _expensive_bfs(box, x, cheap, cap)
    return {v: n * n * b_sq for v, n in dist.items()}


# --- non-positive sets: a longer path that is cheaper -----------------------


def lemma52_counterexample(a, b):
    """Straight line of ``n`` edges ``a`` then one edge ``b`` with ``|na + b| < |na|``.

    Returns ``(config, inner, outer)`` with ``inner`` the first ``n`` edges.
    """
    a = tuple(to_number(c) for c in a)
    b = tuple(to_number(c) for c in b)
    ab = dot(a, b)
    if ab >= 0:
        raise NotNegative(f"(a, b) = {ab} is not negative")
    n = max(1, math.floor(sqnorm(b) / (-2 * ab)) + 1)
    while n > 1 and 2 * (n - 1) * ab + sqnorm(b) < 0:
        n -= 1
    while not 2 * n * ab + sqnorm(b) < 0:
        n += 1
    explicit = {Edge((i, 0), (i + 1, 0)): a for i in range(n)}
    explicit[Edge((n, 0), (n + 1, 0))] = b
    cfg = Configuration(2, a, kind=len(a), explicit=explicit, value_set=ValueSet.finite([a, b]))
    outer = Path(tuple((i, 0) for i in range(n + 2)))
    return cfg, outer.subpath(0, n), outer


# --- optimal paths that are not geodesics -----------------------------------


def _check_pair(a, b):
    a = tuple(to_number(c) for c in a)
    b = tuple(to_number(c) for c in b)
    if len(a) != len(b):
        raise ValueError("a and b differ in length")
    if cones.is_ray_contained([a, b]):
        raise RayContained("a and b lie on a common ray")
    return a, b


def lemma53_equal_norm_config(a, b):
    """3x3 grid where the unique optimal X-Y path passes through Z but is not a geodesic.

    Returns ``(config, X, Y, Z)``.
    """
    a, b = _check_pair(a, b)
    na, nb = sqnorm(a), sqnorm(b)
    if not (na == nb if all_exact([a, b]) else abs(na - nb) <= TOL_CMP):
        raise NormMismatch(f"|a|^2 = {na} differs from |b|^2 = {nb}")
    h = lambda i, j: Edge((i, j), (i + 1, j))
    v = lambda i, j: Edge((i, j), (i, j + 1))
    explicit = {h(0, 0): a, h(1, 0): a, h(0, 1): a, h(1, 2): a, v(1, 0): a, v(1, 1): a, v(2, 0): a,
                v(0, 0): b, v(0, 1): b, h(1, 1): b, v(2, 1): b, h(0, 2): b}
    cfg = Configuration(2, a, kind=len(a), explicit=explicit, value_set=ValueSet.finite([a, b]))
    return cfg, (0, 0), (2, 2), (1, 1)


def _simple_paths(box: Box, x, y):
    stack = [x]
    seen = {x}

    def walk(u):
        if u == y:
            yield tuple(stack)
            return
        for w in sorted(box.neighbors(u)):
            if w not in seen:
                seen.add(w)
                stack.append(w)
                yield from walk(w)
                stack.pop()
                seen.discard(w)

    yield from walk(x)


def _min_step_norm(A) -> float:
    """Lower bound on the distance from the origin to conv(A).

    Every n-edge path has norm at least n times this.  Vertices and edges of
    the hull are exhaustive in the plane; higher dimensions add a numerical
    minimization, derated so that it can only underestimate.
    """
    lifted = [tuple(a) + (1,) for a in A]
    if cones.in_cone((0,) * len(A[0]) + (1,), lifted).member:
        return 0.0
    A = [tuple(float(c) for c in a) for a in A]
    best = min(norm(a) for a in A)
    for u, w in itertools.combinations(A, 2):
        d = vsub(w, u)
        dd = sqnorm(d)
        if dd == 0:
            continue
        t = min(1.0, max(0.0, -dot(u, d) / dd))
        best = min(best, norm(vadd(u, vscale(t, d))))
    if len(A[0]) > 2 and len(A) > 2:
        from scipy.optimize import minimize  # only needed off the plane

        M = np.array(A)
        k = len(A)
        res = minimize(lambda w: float(np.sum((w @ M) ** 2)), np.full(k, 1 / k),
                       bounds=[(0, 1)] * k, constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1}],
                       options={"ftol": 1e-12})
        best = min(best, 0.99 * math.sqrt(max(res.fun, 0.0)))
    return best


def _length_cap_for(opt_norm: float, A) -> int:
    step = _min_step_norm(A)
    if step <= 0:
        raise PreconditionFailed("0 lies in conv(A); no finite length cap is exact")
    return math.floor(opt_norm / step + 1e-9)


def verify_lemma53_equal(cfg: Configuration, X, Y, Z) -> GadgetReport:
    """Exhaustive check: unique optimum through Z, its X-Z part beaten, no X-Y geodesic.

    Route one enumerates simple paths in the 3x3 box; route two runs the
    state-space search with a length cap that provably covers every optimum.
    """
    box = Box((0, 0), (2, 2))
    vals = {}
    for verts in _simple_paths(box, X, Y):
        p = Path(verts)
        vals[verts] = path_passage_value(cfg, p)
    best = min(sqnorm(v) for v in vals.values())
    optima = [vs for vs, v in vals.items() if sqnorm(v) == best]
    a, b = cfg.value_set.elements[:2]
    expected = vadd(vscale(2, a), vscale(2, b))
    stats = {"simple_paths": len(vals), "optimum_norm": math.sqrt(best),
             "optimal_simple_paths": len(optima)}
    wit = Path(optima[0])
    if len(optima) != 1 or vals[optima[0]] != expected or Z not in optima[0]:
        return GadgetReport("lemma53-eq", False, (wit,), stats)
    cap = max(8, _length_cap_for(math.sqrt(best), cfg.value_set.elements))
    search = optimal_paths_h(cfg, X, Y, cap, box)
    stats["search_cap"] = cap
    stats["search_optima"] = len(search)
    if {p.vertices for p in search} != set(optima):
        return GadgetReport("lemma53-eq", False, tuple(search), stats)
    for p in search:
        if first_nonoptimal_subpath(cfg, p, cap, box) is None:
            return GadgetReport("lemma53-eq", False, (p,), stats)
    xz = [p for p in _simple_paths(box, X, Z)]
    leg = Path(optima[0][:optima[0].index(Z) + 1])
    leg_sq = sqnorm(path_passage_value(cfg, leg))
    better = min(xz, key=lambda vs: sqnorm(path_passage_value(cfg, Path(vs))))
    stats["leg_norm"] = math.sqrt(leg_sq)
    stats["leg_best_norm"] = norm(path_passage_value(cfg, Path(better)))
    return GadgetReport("lemma53-eq", True, None, stats)


@dataclass(frozen=True)
class UnequalNormGadget:
    config: Configuration
    gamma1: Path
    gamma2: Path
    gamma3: Path
    fill: str  # "a" or "b"
    n_a: int
    n_b: int
    M: int
    mu: object


def _even_pair(a, b, M: int, max_n: int):
    A2, B2 = sqnorm(a), sqnorm(b)
    for n_b in range(4, max_n + 1, 2):
        for n_a in range(2, n_b, 2):
            lhs = n_a * n_a * A2
            if lhs > n_b * n_b * B2 and lhs * M * M <= n_b * n_b * B2 * (M + 1) ** 2:
                return n_a, n_b
    raise NoEvenPair(f"no even n_a < n_b <= {max_n} fits M = {M}")


def lemma53_unequal_norm_config(a, b, M: int, max_n: int = 2000) -> UnequalNormGadget:
    """Planar gadget for ``|a| > |b|``: a straight a-segment beaten by a longer b-detour."""
    a, b = _check_pair(a, b)
    if not sqnorm(a) > sqnorm(b) > 0:
        raise PreconditionFailed("need |a| > |b| > 0")
    n_a, n_b = _even_pair(a, b, M, max_n)
    h = (n_b - n_a) // 2
    g1 = Path(tuple((i, 0) for i in range(n_a + 1)))
    g2 = ([(0, -j) for j in range(h + 1)] + [(i, -h) for i in range(1, n_a + 1)]
          + [(n_a, -h + j) for j in range(1, h + 1)])
    g2 = Path(tuple(g2))
    g3 = Path(tuple((n_a, j) for j in range(3 * n_b + 1)))
    N = 3 * n_b + n_a
    # direction test: does |t a + (N - t) b| grow as t increases past n_a?
    slope = n_a * sqnorm(vsub(a, b)) - N * (sqnorm(b) - dot(a, b))
    fill = "a" if slope > 0 else "b"
    explicit = {e: a for e in g1.edges}
    explicit.update({e: b for e in g2.edges})
    explicit.update({e: b for e in g3.edges})
    cfg = Configuration(2, a if fill == "a" else b, kind=len(a), explicit=explicit,
                        value_set=ValueSet.finite([a, b]))
    cos = dot(a, b) / (norm(a) * norm(b))
    return UnequalNormGadget(cfg, g1, g2, g3, fill, n_a, n_b, M, max(cos, 0.0))


def contradiction_holds(mu: float, M: int) -> bool:
    """True when ``6 < 6 mu + (2 + 6 mu)/M + 1/M^2``; the gadget needs this to be false."""
    return 6 < 6 * mu + (2 + 6 * mu) / M + 1 / (M * M)


def verify_lemma53_unequal(g: UnequalNormGadget, exhaustive: bool = True,
                           max_states: int = 2_000_000) -> GadgetReport:
    cfg = g.config
    t1 = sqnorm(path_passage_value(cfg, g.gamma1))
    t2 = sqnorm(path_passage_value(cfg, g.gamma2))
    stats = {"n_a": g.n_a, "n_b": g.n_b, "fill": g.fill, "tau1_sq": t1, "tau2_sq": t2,
             "contradiction_inequality": contradiction_holds(g.mu, g.M)}
    if not t1 > t2:
        return GadgetReport("lemma53-neq", False, (g.gamma1, g.gamma2), stats)
    if stats["contradiction_inequality"]:
        return GadgetReport("lemma53-neq", False, (g.gamma1, g.gamma2), stats)
    if not exhaustive:
        return GadgetReport("lemma53-neq", True, None, stats)
    X, Y = g.gamma1.start, g.gamma3.end
    main = g.gamma1.concat(g.gamma3)
    opt = norm(path_passage_value(cfg, main))
    cap = _length_cap_for(opt, cfg.value_set.elements)
    slack = (cap - l1(vsub(X, Y))) // 2
    box = Box.around([X, Y, g.gamma2.vertices[len(g.gamma2) // 2]], slack)
    if box.size * cap * cap > max_states:
        raise CapTooSmall(f"exhaustive search would need ~{box.size * cap * cap} states")
    paths = optimal_paths_h(cfg, X, Y, cap, box)
    stats["search_cap"] = cap
    stats["optimal_paths"] = len(paths)
    for p in paths:
        if first_nonoptimal_subpath(cfg, p, cap, box) is None:
            return GadgetReport("lemma53-neq", False, (p,), stats)
    return GadgetReport("lemma53-neq", True, None, stats)


# --- no geodesic rays -------------------------------------------------------

_A_VEC, _B_VEC, _2B_VEC = (1, 0), (0, 1), (0, 2)

# Edge values near q*xi_1 in coordinates relative to it, upper half plane
# (0 -> a, 1 -> b); the lower half is the mirror image.  Found by local search
# and certified by verify_no_geodesic_ray.
_NO_RAY_TABLE = {
    ((0, 1), (1, 1)): 1, ((0, 2), (1, 2)): 0, ((0, 3), (1, 3)): 0, ((0, 4), (1, 4)): 1,
    ((0, 5), (1, 5)): 0, ((0, 6), (1, 6)): 0, ((1, 0), (1, 1)): 1, ((1, 1), (1, 2)): 1,
    ((1, 1), (2, 1)): 1, ((1, 2), (1, 3)): 0, ((1, 2), (2, 2)): 1, ((1, 3), (1, 4)): 0,
    ((1, 3), (2, 3)): 1, ((1, 4), (1, 5)): 0, ((1, 4), (2, 4)): 0, ((1, 5), (1, 6)): 0,
    ((1, 5), (2, 5)): 1, ((2, 0), (2, 1)): 1, ((2, 1), (2, 2)): 0, ((2, 1), (3, 1)): 0,
    ((2, 2), (2, 3)): 1, ((2, 2), (3, 2)): 0, ((2, 3), (2, 4)): 1, ((2, 3), (3, 3)): 1,
    ((2, 4), (2, 5)): 0, ((2, 4), (3, 4)): 1, ((3, 0), (3, 1)): 0, ((3, 1), (3, 2)): 0,
    ((3, 1), (4, 1)): 0, ((3, 2), (3, 3)): 0, ((3, 2), (4, 2)): 0, ((3, 3), (3, 4)): 0,
    ((3, 3), (4, 3)): 1, ((4, 0), (4, 1)): 0, ((4, 1), (4, 2)): 0, ((4, 1), (5, 1)): 0,
    ((4, 2), (4, 3)): 1, ((4, 2), (5, 2)): 1, ((5, 0), (5, 1)): 0, ((5, 1), (5, 2)): 0,
    ((5, 1), (6, 1)): 1, ((6, 0), (6, 1)): 0,
}
_NO_RAY_AXIS = 8  # axis edges to the right of q*xi_1 carrying a


def no_ray_config(q: int = 10, p: int = 1) -> Configuration:
    """Vector gadget with ``A = {(1,0), (0,1), (0,2)}`` and no geodesic leaving ``q xi_1``."""
    if q < p + 9:
        raise PreconditionFailed(f"q must be at least p + 9 = {p + 9}")
    params = SkewBoxParams(2, p, q, q + 1, q + 2, proof_faithful=False)
    explicit = {}
    K2 = params.K2
    for e in K2.edges():
        explicit[e] = _2B_VEC
    for e in params.cheap_edges():
        explicit[e] = _B_VEC
    for i in range(_NO_RAY_AXIS):
        explicit[Edge((q + i, 0), (q + i + 1, 0))] = _A_VEC
    vecs = (_A_VEC, _B_VEC)
    for ((x0, y0), (x1, y1)), k in _NO_RAY_TABLE.items():
        for s in (1, -1):
            explicit[canonical_edge((q + x0, s * y0), (q + x1, s * y1))] = vecs[k]
    return Configuration(2, _2B_VEC, kind=2, explicit=explicit,
                         value_set=ValueSet.finite([_A_VEC, _B_VEC, _2B_VEC]))


def no_ray_targets(q: int) -> list:
    out = []
    for x in range(7):
        for y in sorted({6 - x, x - 6}):
            out.append((q + x, y))
    return out


def verify_no_geodesic_ray(cfg: Configuration, q: int, length_cap: int = 8) -> GadgetReport:
    """No optimal path from ``q xi_1`` to ``q xi_1 + x`` (|x| = 6, x_1 >= 0) is a geodesic.

    Each optimal path must also fail already on its first 2 or first 4 edges.
    """
    start = (q, 0)
    if length_cap < 6:
        raise CapTooSmall("targets sit at distance 6")
    box = Box.around([start], length_cap)
    first = passage_minima_h(cfg, start, length_cap, box)
    stats = {"targets": 0, "optimal_paths": 0, "norms": {}}
    for t in no_ray_targets(q):
        paths = optimal_paths_h(cfg, start, t, length_cap, box)
        stats["targets"] += 1
        stats["optimal_paths"] += len(paths)
        opt = norm(path_passage_value(cfg, paths[0]))
        stats["norms"][f"{t[0] - q},{t[1]}"] = opt
        for p in paths:
            if first_nonoptimal_subpath(cfg, p, length_cap, box) is None:
                return GadgetReport("no-ray", False, (p,), _flat(stats))
            early = False
            for k in (2, 4):
                if len(p) >= k:
                    pre = sqnorm(path_passage_value(cfg, p.subpath(0, k)))
                    if pre > first[p.vertices[k]]:
                        early = True
            if not early:
                return GadgetReport("no-ray", False, (p,), _flat(stats))
    return GadgetReport("no-ray", True, None, _flat(stats))


def _flat(stats: dict) -> dict:
    out = {k: v for k, v in stats.items() if k != "norms"}
    for k, v in stats["norms"].items():
        out[f"norm[{k}]"] = v
    return out


# --- cycle construction for strongly positively dependent sets --------------


@dataclass(frozen=True)
class CycleConstruction:
    config: Configuration
    witness: Path
    target: tuple
    alpha: tuple
    weights: dict  # generator -> r_i with sum r_i a_i = -alpha
    p: tuple
    q: int
    Q: int
    eps: float
    residual: float  # |sum 2 p_i a_i + 2 q alpha|
    error: float  # |v(witness) - target|

    def __iter__(self):
        yield self.config
        yield self.witness


def _host_path(x, y, R: int):
    """Simple path x -> z -> y inside [-R, R]^2 through the corner z = (R, R)."""

    def line(u, v):
        pts = [u]
        i = 0 if u[1] == v[1] else 1
        step = 1 if v[i] > u[i] else -1
        while pts[-1] != v:
            w = list(pts[-1])
            w[i] += step
            pts.append(tuple(w))
        return pts

    def join(*corners):
        pts = [corners[0]]
        for u, v in zip(corners, corners[1:]):
            if u != v:
                pts += line(u, v)[1:]
        return pts

    z = (R, R)
    if x[0] == y[0] and y[1] >= x[1]:
        first = join(x, (x[0], -R), (R, -R), z)
        second = join(z, (y[0], R), y)
    else:
        first = join(x, (x[0], R), z)
        second = join(z, (R, -R), (y[0], -R), y)
    return first, second


def _rectangle_cycle(z, length: int) -> list:
    w = max(1, length // 4)
    h = length // 2 - w
    if h < 1:
        raise PreconditionFailed("cycle too short for a rectangle")
    zx, zy = z
    pts = [(zx + i, zy) for i in range(w + 1)]
    pts += [(zx + w, zy + j) for j in range(1, h + 1)]
    pts += [(zx + w - i, zy + h) for i in range(1, w + 1)]
    pts += [(zx, zy + h - j) for j in range(1, h + 1)]
    return pts


def thm43_cycle_builder(A, m, x, y, host: Configuration, *, eps=0.5, odd: bool = False,
                        odd_value=None, m_terms: Optional[Sequence] = None,
                        max_total: int = 8) -> CycleConstruction:
    """Append a cycle at a corner of a box around x, y so the x-y path vector lands near ``m``.

    The cycle carries the terms of ``m``, ``2 p_i`` copies of each ``a_i`` and
    ``2q - 1`` further copies of the host path, where ``p_i / q`` approximates
    the weights ``r_i`` of ``-alpha = sum r_i a_i``.  With ``odd=True`` one edge
    of the host path is set to ``odd_value`` and the target becomes ``m + odd_value``.
    """
    A = cones.as_vectors(A)
    k = len(A[0])
    if host.dim != 2:
        raise ValueError("the cycle layout is planar")
    if not cones.is_strongly_positively_dependent(A):
        raise NotSPD("A is not strongly positively dependent")
    x, y = tuple(x), tuple(y)
    parity = l1(vsub(x, y)) % 2
    if parity != (1 if odd else 0):
        raise ParityMismatch(f"|x - y| = {l1(vsub(x, y))} does not fit the {'odd' if odd else 'even'} builder")
    m = tuple(to_number(c) for c in m)
    if m_terms is None:
        decomp = cones.monoid_decompositions(A, max_total)
        if m not in decomp:
            raise PreconditionFailed(f"{m} is not in M(A) truncated at {max_total}")
        m_terms = [a for a, c in zip(A, decomp[m]) if c for _ in range(c)]
    m_terms = [tuple(to_number(c) for c in a) for a in m_terms]
    if len(m_terms) % 2 or _vsum(m_terms, k) != m:
        raise PreconditionFailed("m_terms must be an even number of elements of A summing to m")

    R = max([abs(c) for c in x + y] + [abs(c) for e in host.explicit for c in e.a + e.b]) + 2
    first, second = _host_path(x, y, R)
    gamma = Path(tuple(first + second[1:]))
    vals = [host.value(e) for e in gamma.edges]
    target = m
    if odd:
        sep_val = A[0] if odd_value is None else tuple(to_number(c) for c in odd_value)
        vals[0] = sep_val
        target = vadd(m, sep_val)
    body = vals[1:] if odd else vals
    alpha = _vsum(body, k)
    weights = cones.caratheodory_decompose(tuple(-c for c in alpha), A)
    gens = list(weights)
    r = [weights[g] for g in gens]
    if gens:
        S = sum(norm(g) for g in gens)
        Q = cones.dirichlet_Q(eps, S, len(gens))
        p, q = cones.dirichlet_approx(r, Q)
    else:
        Q, p, q = 1, [], 1
    resid_vec = vadd(_vsum([vscale(2 * pi, g) for pi, g in zip(p, gens)], k), vscale(2 * q, alpha))
    residual = norm(resid_vec)
    if not residual < float(eps) / 3:
        raise PreconditionFailed(f"approximation residual {residual} is not below eps/3")

    cycle_vals = list(m_terms)
    for pi, g in zip(p, gens):
        cycle_vals += [g] * (2 * pi)
    cycle_vals += body * (2 * q - 1)
    z = (R, R)
    cycle = _rectangle_cycle(z, len(cycle_vals))
    explicit = dict(host.explicit)
    for e, v in zip(gamma.edges, vals):
        explicit[e] = v
    for (u, w), v in zip(zip(cycle, cycle[1:]), cycle_vals):
        explicit[canonical_edge(u, w)] = v
    cfg = Configuration(2, host.default, kind=k, rules=[(rg, v) for rg, v in host.rules],
                        explicit=explicit, value_set=ValueSet.finite(A))
    witness = Path(tuple(first + cycle[1:] + second[1:]))
    err = norm(vsub(path_passage_value(cfg, witness), target))
    if not err < float(eps):
        raise PreconditionFailed(f"witness misses the target by {err}")
    return CycleConstruction(cfg, witness, target, alpha, dict(weights), tuple(p), q, Q,
                             float(eps), residual, err)


def _vsum(vectors, k: int) -> tuple:
    """Sum of ``k``-vectors (the zero vector for an empty list)."""
    total = (0,) * k
    for v in vectors:
        total = vadd(total, v)
    return total


def min_norm_at_truncation(cfg: Configuration, x, y, cap: int, box: Optional[Box] = None) -> float:
    """Smallest passage-vector norm among x-y paths with at most ``cap`` edges."""
    return passage_set(cfg, x, y, cap, box).min_norm()
