"""Piecewise-constant cost fields on R^d and their percolation metric.

A field is a default value plus an ordered list of regions (first match
wins).  Distances are upper approximations computed on the grid
``(Z/N)^d`` enriched with nodes along the field's one-dimensional pieces,
with every edge cost an exact integral of the field.

The constructions here turn a target polytope ``K`` into a configuration
whose rescaled balls approach ``K``: a star field of rays to an ε-net of
``∂K``, its two-valued alternating version, and the cone/grid-path field
that lives on a lattice ``Z^d/M``.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConesOverlap,
    DegeneratePolytope,
    DimensionMismatch,
    DomainExceeded,
    NoGridPath,
    NoRationalSplit,
    PreconditionFailed,
    ScaleMismatch,
)
from .lattice import Box, Configuration, Edge, ValueSet, canonical_edge
from .numeric import json_number, lcm_of_denominators, to_number
from .simplex import feasible_point

Q = Fraction
Vec = Tuple[Fraction, ...]


def _q(x) -> Fraction:
    return Fraction(to_number(x))


def _pt(p: Iterable) -> Vec:
    return tuple(_q(c) for c in p)


def _l1(v) -> Fraction:
    return sum((abs(c) for c in v), Q(0))


def _at(z0: Vec, z1: Vec, s) -> Vec:
    return tuple(a + s * (b - a) for a, b in zip(z0, z1))


def _root(h0, h1, s0, s1):
    """Zero of the linear function through (s0,h0),(s1,h1) if strictly inside."""
    if (h0 < 0 < h1) or (h1 < 0 < h0):
        return s0 + (s1 - s0) * h0 / (h0 - h1)
    return None


def _coordinate_cuts(z0: Vec, z1: Vec, offset: Vec) -> List[Fraction]:
    """Parameters in [0,1] where some ``z_j(s) - offset_j`` vanishes, plus 0 and 1."""
    cuts = {Q(0), Q(1)}
    for a, b, c in zip(z0, z1, offset):
        r = _root(a - c, b - c, Q(0), Q(1))
        if r is not None:
            cuts.add(r)
    return sorted(cuts)


def _bbox_overlap(lo1, hi1, lo2, hi2) -> bool:
    return all(a <= d and c <= b for a, b, c, d in zip(lo1, hi1, lo2, hi2))


# --- regions ----------------------------------------------------------------


class FieldRegion:
    """A region of R^d carrying field values.

    ``value_at`` returns the value at a point or ``None`` outside the region;
    ``breakpoints`` lists parameters ``s`` in (0,1) along a segment where the
    value may change; ``skeleton`` names the one-dimensional pieces that the
    distance graph must be able to travel along.
    """

    kind = ""

    def value_at(self, z: Vec):  # pragma: no cover - interface
        raise NotImplementedError

    def breakpoints(self, z0: Vec, z1: Vec) -> List[Fraction]:  # pragma: no cover - interface
        raise NotImplementedError

    def bbox(self) -> Tuple[Vec, Vec]:  # pragma: no cover - interface
        raise NotImplementedError

    def skeleton(self) -> List[Tuple[Vec, Vec]]:
        return []

    def values(self) -> list:  # pragma: no cover - interface
        raise NotImplementedError

    def to_json(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


def segment_hits(u: Vec, w: Vec, z0: Vec, z1: Vec) -> List[Fraction]:
    """Parameters s in (0,1) of ``z0 + s(z1-z0)`` where it meets or starts/stops overlapping [u,w]."""
    d = [b - a for a, b in zip(z0, z1)]
    e = [b - a for a, b in zip(u, w)]
    k = len(d)
    pair = None
    for i in range(k):
        for j in range(i + 1, k):
            if d[i] * e[j] - d[j] * e[i] != 0:
                pair = (i, j)
                break
        if pair:
            break
    if pair is None:
        # parallel: overlap only when collinear
        g = [a - b for a, b in zip(u, z0)]
        if any(d[i] * g[j] - d[j] * g[i] != 0 for i in range(k) for j in range(i + 1, k)):
            return []
        j = next((i for i in range(k) if d[i] != 0), None)
        if j is None:
            return []
        out = []
        for p in (u, w):
            s = (p[j] - z0[j]) / d[j]
            if 0 < s < 1:
                out.append(s)
        return out
    i, j = pair
    # s d - r e = u - z0 on coordinates i, j
    bi, bj = u[i] - z0[i], u[j] - z0[j]
    det = -d[i] * e[j] + d[j] * e[i]
    s = (-bi * e[j] + bj * e[i]) / det
    r = (d[i] * bj - d[j] * bi) / det
    if not (0 < s < 1 and 0 <= r <= 1):
        return []
    if any(z0[c] + s * d[c] != u[c] + r * e[c] for c in range(k)):
        return []
    return [s]


@dataclass(frozen=True)
class Segment(FieldRegion):
    """Open straight segment (start, end) with a constant value."""

    start: Vec
    end: Vec
    value: Fraction
    kind = "segment"

    def __post_init__(self):
        object.__setattr__(self, "start", _pt(self.start))
        object.__setattr__(self, "end", _pt(self.end))
        object.__setattr__(self, "value", _q(self.value))
        if self.start == self.end:
            raise ValueError("degenerate segment")

    def value_at(self, z):
        d = [b - a for a, b in zip(self.start, self.end)]
        j = next(i for i, c in enumerate(d) if c != 0)
        r = (z[j] - self.start[j]) / d[j]
        if not 0 < r < 1:
            return None
        if any(z[i] != self.start[i] + r * d[i] for i in range(len(d))):
            return None
        return self.value

    def breakpoints(self, z0, z1):
        return segment_hits(self.start, self.end, z0, z1)

    def bbox(self):
        return (tuple(map(min, self.start, self.end)), tuple(map(max, self.start, self.end)))

    def skeleton(self):
        return [(self.start, self.end)]

    def values(self):
        return [self.value]

    def to_json(self):
        return {"type": "segment", "from": json_number(self.start), "to": json_number(self.end),
                "value": json_number(self.value)}


@dataclass(frozen=True)
class Ball(FieldRegion):
    """Closed l1 ball with a constant value."""

    center: Vec
    radius: Fraction
    value: Fraction
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        object.__setattr__(self, "radius", _q(self.radius))
        object.__setattr__(self, "value", _q(self.value))

    def value_at(self, z):
        return self.value if _l1(a - c for a, c in zip(z, self.center)) <= self.radius else None

    def breakpoints(self, z0, z1):
        cuts = _coordinate_cuts(z0, z1, self.center)
        out = list(cuts[1:-1])

        def h(s):
            return _l1(a - c for a, c in zip(_at(z0, z1, s), self.center)) - self.radius

        for s0, s1 in zip(cuts, cuts[1:]):
            r = _root(h(s0), h(s1), s0, s1)
            if r is not None:
                out.append(r)
        return out

    def bbox(self):
        return (tuple(c - self.radius for c in self.center), tuple(c + self.radius for c in self.center))

    def values(self):
        return [self.value]

    def to_json(self):
        return {"type": "ball", "center": json_number(self.center), "radius": json_number(self.radius),
                "value": json_number(self.value)}


@dataclass(frozen=True)
class Cone(FieldRegion):
    """Points z != 0 with ``|z| <= |tip|`` and ``| z |tip|/|z| - tip | <= theta``.

    The value is radial: the block of ``profile`` containing ``|z|``, where
    ``profile`` is a list of ``(r0, r1, value)`` covering ``(0, |tip|]``.
    """

    tip: Vec
    theta: Fraction
    profile: tuple
    kind = "cone"

    def __post_init__(self):
        object.__setattr__(self, "tip", _pt(self.tip))
        object.__setattr__(self, "theta", _q(self.theta))
        object.__setattr__(self, "profile", tuple((_q(a), _q(b), _q(v)) for a, b, v in self.profile))

    @property
    def length(self):
        return _l1(self.tip)

    def _gap(self, z, n):
        L = self.length
        return sum((abs(zj * L - tj * n) for zj, tj in zip(z, self.tip)), Q(0)) - self.theta * n

    def contains(self, z) -> bool:
        n = _l1(z)
        return 0 < n <= self.length and self._gap(z, n) <= 0

    def value_at(self, z):
        n = _l1(z)
        if not (0 < n <= self.length) or self._gap(z, n) > 0:
            return None
        for r0, r1, v in self.profile:
            if n <= r1:
                return v
        return self.profile[-1][2]

    def breakpoints(self, z0, z1):
        zero = tuple(Q(0) for _ in z0)
        cuts = _coordinate_cuts(z0, z1, zero)
        L = self.length
        levels = [r1 for _, r1, _ in self.profile]
        out = set(cuts[1:-1])
        for s0, s1 in zip(cuts, cuts[1:]):
            a, b = _at(z0, z1, s0), _at(z0, z1, s1)
            na, nb = _l1(a), _l1(b)
            for rho in levels:
                r = _root(na - rho, nb - rho, s0, s1)
                if r is not None:
                    out.add(r)
            sub = {s0, s1}
            for j, tj in enumerate(self.tip):
                r = _root(a[j] * L - tj * na, b[j] * L - tj * nb, s0, s1)
                if r is not None:
                    sub.add(r)
            sub = sorted(sub)
            out.update(sub[1:-1])
            for t0, t1 in zip(sub, sub[1:]):
                p, q = _at(z0, z1, t0), _at(z0, z1, t1)
                r = _root(self._gap(p, _l1(p)), self._gap(q, _l1(q)), t0, t1)
                if r is not None:
                    out.add(r)
        return sorted(out)

    def bbox(self):
        lo = tuple(min(Q(0), t - self.theta) for t in self.tip)
        hi = tuple(max(Q(0), t + self.theta) for t in self.tip)
        return lo, hi

    def values(self):
        return [v for _, _, v in self.profile]

    def to_json(self):
        return {"type": "cone", "tip": json_number(self.tip), "theta": json_number(self.theta),
                "profile": [json_number(list(b)) for b in self.profile]}


class LatticeEdges(FieldRegion):
    """Open unit edges of the lattice ``Z^d/scale`` with individual values.

    Edges are stored in integer coordinates (the lattice scaled by ``scale``).
    """

    kind = "gridpath"

    def __init__(self, scale: int, edges: Mapping):
        if scale < 1:
            raise ValueError("scale must be a positive integer")
        self.scale = int(scale)
        table = {}
        for e, v in edges.items():
            if not isinstance(e, Edge):
                e = canonical_edge(*e)
            table[e] = _q(v)
        if not table:
            raise ValueError("no edges")
        self.edges = table
        pts = [p for e in table for p in (e.a, e.b)]
        d = len(pts[0])
        self._lo = tuple(Q(min(p[j] for p in pts), self.scale) for j in range(d))
        self._hi = tuple(Q(max(p[j] for p in pts), self.scale) for j in range(d))

    def __eq__(self, other):
        return isinstance(other, LatticeEdges) and self.scale == other.scale and self.edges == other.edges

    def __hash__(self):
        return hash((self.scale, len(self.edges)))

    def value_at(self, z):
        w = [c * self.scale for c in z]
        frac = [j for j, c in enumerate(w) if c.denominator != 1]
        if len(frac) != 1:
            return None
        j = frac[0]
        a = tuple(int(c) if i != j else math.floor(c) for i, c in enumerate(w))
        b = a[:j] + (a[j] + 1,) + a[j + 1:]
        return self.edges.get(Edge(a, b))

    def breakpoints(self, z0, z1):
        out = set()
        for a, b in zip(z0, z1):
            if a == b:
                continue
            wa, wb = a * self.scale, b * self.scale
            lo, hi = min(wa, wb), max(wa, wb)
            for k in range(math.floor(lo) + 1, math.ceil(hi)):
                out.add((k - wa) / (wb - wa))
        return sorted(out)

    def bbox(self):
        return self._lo, self._hi

    def skeleton(self):
        s = self.scale
        return [(tuple(Q(c, s) for c in e.a), tuple(Q(c, s) for c in e.b)) for e in self.edges]

    def values(self):
        return sorted(set(self.edges.values()))

    def to_json(self):
        return {"type": "gridpath", "scale": self.scale,
                "edges": [[list(e.a), list(e.b), json_number(v)] for e, v in sorted(self.edges.items())]}


def region_from_json(spec: dict) -> FieldRegion:
    t = spec.get("type")
    if t == "segment":
        return Segment(spec["from"], spec["to"], spec["value"])
    if t == "ball":
        return Ball(spec["center"], spec["radius"], spec["value"])
    if t == "cone":
        return Cone(spec["tip"], spec["theta"], tuple(tuple(b) for b in spec["profile"]))
    if t == "gridpath":
        return LatticeEdges(int(spec["scale"]), {canonical_edge(a, b): v for a, b, v in spec["edges"]})
    raise ValueError(f"unknown field region type {t!r}")


# --- fields -----------------------------------------------------------------


@dataclass(frozen=True)
class Ray:
    """A ray from the origin to ``tip`` with a radial value profile ``(r0, r1, value)``."""

    tip: Vec
    profile: tuple

    @property
    def length(self) -> Fraction:
        return _l1(self.tip)

    def direction(self) -> Vec:
        L = self.length
        return tuple(c / L for c in self.tip)

    def point_at(self, rho) -> Vec:
        L = self.length
        return tuple(c * rho / L for c in self.tip)

    def integral(self, r0, r1) -> Fraction:
        """Exact integral of the profile over norms in [r0, r1]."""
        total = Q(0)
        for a, b, v in self.profile:
            lo, hi = max(a, r0), min(b, r1)
            if hi > lo:
                total += (hi - lo) * v
        return total


class CostField:
    """A piecewise-constant field: ordered regions over a default value.

    ``domain`` is the closed box ``(lo, hi)`` on which distances are computed.
    """

    def __init__(
        self,
        dim: int,
        default,
        regions: Sequence[FieldRegion] = (),
        *,
        domain: Tuple[Sequence, Sequence],
        value_range: Optional[Tuple] = None,
        rays: Sequence[Ray] = (),
        paths: Sequence = (),
        grid_scale: Optional[int] = None,
        eps=None,
        kind: str = "field",
    ):
        self.dim = int(dim)
        self.default = _q(default)
        self.regions = tuple(regions)
        lo, hi = _pt(domain[0]), _pt(domain[1])
        if len(lo) != self.dim or len(hi) != self.dim:
            raise DimensionMismatch("domain corners must match the field dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("empty domain")
        self.domain = (lo, hi)
        if value_range is None:
            vals = [self.default] + [v for r in self.regions for v in r.values()]
            value_range = (min(vals), max(vals))
        self.value_range = (_q(value_range[0]), _q(value_range[1]))
        vmin, vmax = self.value_range
        for v in [self.default] + [v for r in self.regions for v in r.values()]:
            if not vmin <= v <= vmax:
                raise PreconditionFailed(f"field value {v} outside [{vmin}, {vmax}]")
        self.rays = tuple(rays)
        self.paths = tuple(tuple(tuple(p) for p in path) for path in paths)
        self.grid_scale = grid_scale
        self.eps = None if eps is None else _q(eps)
        self.kind = kind
        self._bboxes = [r.bbox() for r in self.regions]
        self._graphs: Dict[int, "FieldGraph"] = {}

    @property
    def inf_value(self) -> Fraction:
        return self.value_range[0]

    @property
    def sup_value(self) -> Fraction:
        return self.value_range[1]

    @property
    def eps_prime(self) -> Optional[Fraction]:
        """Composite tolerance ``ε(1 + sup - inf)/inf + ε`` for star-derived fields."""
        if self.eps is None:
            return None
        lo, hi = self.value_range
        return self.eps * (1 + hi - lo) / lo + self.eps

    def in_domain(self, z) -> bool:
        lo, hi = self.domain
        return all(a <= c <= b for a, c, b in zip(lo, z, hi))

    def value_at(self, z):
        z = _pt(z)
        for r, (lo, hi) in zip(self.regions, self._bboxes):
            if all(a <= c <= b for a, c, b in zip(lo, z, hi)):
                v = r.value_at(z)
                if v is not None:
                    return v
        return self.default

    def breakpoints(self, z0: Vec, z1: Vec) -> List[Fraction]:
        qlo = tuple(map(min, z0, z1))
        qhi = tuple(map(max, z0, z1))
        out = set()
        for r, (lo, hi) in zip(self.regions, self._bboxes):
            if _bbox_overlap(lo, hi, qlo, qhi):
                out.update(r.breakpoints(z0, z1))
        return sorted(s for s in out if 0 < s < 1)

    def integral(self, z0, z1) -> Fraction:
        """Exact integral of the field along the straight segment, l1 arc length."""
        z0, z1 = _pt(z0), _pt(z1)
        length = _l1(b - a for a, b in zip(z0, z1))
        if length == 0:
            return Q(0)
        cuts = [Q(0)] + self.breakpoints(z0, z1) + [Q(1)]
        total = Q(0)
        for s0, s1 in zip(cuts, cuts[1:]):
            total += self.value_at(_at(z0, z1, (s0 + s1) / 2)) * (s1 - s0)
        return total * length

    def graph(self, grid_n: int) -> "FieldGraph":
        g = self._graphs.get(grid_n)
        if g is None:
            g = self._graphs[grid_n] = FieldGraph(self, grid_n)
        return g

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "default": json_number(self.default),
            "domain": {"lo": json_number(self.domain[0]), "hi": json_number(self.domain[1])},
            "value_range": json_number(list(self.value_range)),
            "kind": self.kind,
            "regions": [r.to_json() for r in self.regions],
        }
        if self.rays:
            out["rays"] = [{"tip": json_number(r.tip), "profile": [json_number(list(b)) for b in r.profile]}
                           for r in self.rays]
        if self.paths:
            out["paths"] = [[list(p) for p in path] for path in self.paths]
        if self.grid_scale is not None:
            out["grid_scale"] = self.grid_scale
        if self.eps is not None:
            out["eps"] = json_number(self.eps)
            out["eps_prime"] = json_number(self.eps_prime)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CostField":
        rays = [Ray(_pt(r["tip"]), tuple(tuple(_q(c) for c in b) for b in r["profile"]))
                for r in data.get("rays", [])]
        return cls(
            int(data["dim"]),
            data["default"],
            [region_from_json(r) for r in data.get("regions", [])],
            domain=(data["domain"]["lo"], data["domain"]["hi"]),
            value_range=tuple(data["value_range"]) if "value_range" in data else None,
            rays=rays,
            paths=data.get("paths", ()),
            grid_scale=data.get("grid_scale"),
            eps=data.get("eps"),
            kind=data.get("kind", "field"),
        )


def constant_field(dim: int, value, radius=1) -> CostField:
    r = _q(radius)
    return CostField(dim, value, domain=((-r,) * dim, (r,) * dim))


# --- grid approximation of the metric -----------------------------------------


class FieldGraph:
    """Grid ``(Z/N)^d`` over the domain plus nodes along the field's 1-d pieces.

    Skeleton nodes sit where a piece crosses a grid hyperplane or the field
    changes value; each connects to the corners of its grid cell by
    axis-parallel legs.  All costs are exact integrals, so every graph path
    is a real path and distances are upper bounds on ``d_f``.
    """

    def __init__(self, f: CostField, grid_n: int):
        if grid_n < 1:
            raise ValueError("grid_n must be positive")
        self.field = f
        self.n = int(grid_n)
        lo, hi = f.domain
        self.lo_idx = tuple(math.ceil(c * self.n) for c in lo)
        self.hi_idx = tuple(math.floor(c * self.n) for c in hi)
        self.adj: Dict[Vec, Dict[Vec, Fraction]] = {}
        self._build_grid()
        self._build_skeleton()

    # grid points are stored as exact coordinate tuples
    def _grid_point(self, idx) -> Vec:
        return tuple(Q(i, self.n) for i in idx)

    def is_grid_point(self, z) -> bool:
        return all((c * self.n).denominator == 1 for c in z)

    def _link(self, u, v, w):
        du = self.adj.setdefault(u, {})
        dv = self.adj.setdefault(v, {})
        if w < du.get(v, w + 1):
            du[v] = w
            dv[u] = w

    def _build_grid(self):
        f = self.field
        ranges = [range(a, b + 1) for a, b in zip(self.lo_idx, self.hi_idx)]
        for idx in itertools.product(*ranges):
            u = self._grid_point(idx)
            self.adj.setdefault(u, {})
            for j in range(f.dim):
                if idx[j] + 1 <= self.hi_idx[j]:
                    nb = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
                    v = self._grid_point(nb)
                    self._link(u, v, f.integral(u, v))

    def _clip(self, u: Vec, w: Vec):
        lo, hi = self.field.domain
        s0, s1 = Q(0), Q(1)
        for a, b, l, h in zip(u, w, lo, hi):
            if a == b:
                if not l <= a <= h:
                    return None
                continue
            t_l, t_h = (l - a) / (b - a), (h - a) / (b - a)
            s0, s1 = max(s0, min(t_l, t_h)), min(s1, max(t_l, t_h))
        if s0 >= s1:
            return None
        return _at(u, w, s0), _at(u, w, s1)

    def _build_skeleton(self):
        f = self.field
        seen = set()
        for region in f.regions:
            for u, w in region.skeleton():
                key = (u, w)
                if key in seen:
                    continue
                seen.add(key)
                clipped = self._clip(u, w)
                if clipped is None:
                    continue
                u, w = clipped
                cuts = {Q(0), Q(1)}
                for a, b in zip(u, w):
                    if a == b:
                        continue
                    wa, wb = a * self.n, b * self.n
                    for k in range(math.floor(min(wa, wb)) + 1, math.ceil(max(wa, wb))):
                        cuts.add((k - wa) / (wb - wa))
                cuts.update(f.breakpoints(u, w))
                pts = [_at(u, w, s) for s in sorted(cuts)]
                for p, q in zip(pts, pts[1:]):
                    self._link(p, q, f.integral(p, q))
                for p in pts:
                    self.attach(p)

    def corners(self, z: Vec) -> List[Vec]:
        opts = []
        for c in z:
            w = c * self.n
            opts.append([math.floor(w)] if w.denominator == 1 else [math.floor(w), math.ceil(w)])
        out = []
        for idx in itertools.product(*opts):
            if all(a <= i <= b for a, i, b in zip(self.lo_idx, idx, self.hi_idx)):
                out.append(self._grid_point(idx))
        return out

    def leg_cost(self, z: Vec, c: Vec) -> Fraction:
        """Integral along the staircase that fixes coordinates in order 0..d-1."""
        total = Q(0)
        cur = z
        for j in range(len(z)):
            if cur[j] != c[j]:
                nxt = cur[:j] + (c[j],) + cur[j + 1:]
                total += self.field.integral(cur, nxt)
                cur = nxt
        return total

    def attach(self, z: Vec):
        """Make ``z`` a node linked to the corners of its grid cell (no-op for grid points)."""
        if z in self.adj and self.is_grid_point(z):
            return
        self.adj.setdefault(z, {})
        for c in self.corners(z):
            if c != z:
                self._link(z, c, self.leg_cost(z, c))

    def distances(self, source: Vec, cutoff=None, target=None) -> Dict[Vec, Fraction]:
        dist = {source: Q(0)}
        done = {}
        heap = [(Q(0), source)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            if cutoff is not None and d > cutoff:
                break
            done[u] = d
            if u == target:
                break
            for v, w in self.adj[u].items():
                nd = d + w
                if v not in done and nd < dist.get(v, nd + 1):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return done


def _graph_with(f: CostField, grid_n: int, points) -> FieldGraph:
    g = f.graph(grid_n)
    for p in points:
        if p not in g.adj:
            g.attach(p)
    return g


def field_distance(f: CostField, x, y, grid_n: int) -> Fraction:
    """Grid upper approximation of ``d_f(x, y)``."""
    x, y = _pt(x), _pt(y)
    for p in (x, y):
        if len(p) != f.dim:
            raise DimensionMismatch("point dimension differs from the field")
        if not f.in_domain(p):
            raise DomainExceeded(f"{p} lies outside the field domain")
    g = _graph_with(f, grid_n, (x, y))
    dist = g.distances(x, target=y)
    if y not in dist:
        raise DomainExceeded("target not connected inside the domain")
    return dist[y]


def unit_ball(f: CostField, grid_n: int, radius=1, center=None) -> np.ndarray:
    """Grid points at field distance at most ``radius`` from ``center`` (default 0), sorted."""
    c = _pt(center) if center is not None else tuple(Q(0) for _ in range(f.dim))
    if not f.in_domain(c):
        raise DomainExceeded("center outside the field domain")
    g = _graph_with(f, grid_n, (c,))
    dist = g.distances(c, cutoff=_q(radius))
    pts = sorted(p for p in dist if g.is_grid_point(p))
    return np.array([[float(v) for v in p] for p in pts], dtype=float).reshape(-1, f.dim)


# --- polytopes ----------------------------------------------------------------


def _nullvec(rows: List[List[Fraction]], n: int) -> List[Fraction]:
    """A nonzero vector orthogonal to every row (rows span a hyperplane)."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][col]
        m[r] = [c / pv for c in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                fct = m[i][col]
                m[i] = [a - fct * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    free = next(c for c in range(n) if c not in pivots)
    v = [Q(0)] * n
    v[free] = Q(1)
    for i, col in enumerate(pivots):
        v[col] = -m[i][free]
    return v


def _rank(vectors) -> int:
    from .cones import rank

    return rank(vectors) if vectors else 0


@dataclass(frozen=True)
class Polytope:
    """Convex hull of rational vertices."""

    vertices: tuple

    def __post_init__(self):
        vs = []
        for v in self.vertices:
            v = _pt(v)
            if v not in vs:
                vs.append(v)
        object.__setattr__(self, "vertices", tuple(vs))

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    def check_full_dimensional(self):
        v0 = self.vertices[0]
        diffs = [tuple(a - b for a, b in zip(v, v0)) for v in self.vertices[1:]]
        if len(self.vertices) <= self.dim or _rank(diffs) < self.dim:
            raise DegeneratePolytope("polytope is not full-dimensional")

    def contains(self, p) -> bool:
        p = _pt(p)
        n = len(self.vertices)
        rows = [[v[j] for v in self.vertices] for j in range(self.dim)] + [[Q(1)] * n]
        return feasible_point(rows, list(p) + [Q(1)]) is not None

    def facets(self) -> List[Tuple[Vec, ...]]:
        """Boundary simplices (exact vertices), from a floating hull triangulation."""
        self.check_full_dimensional()
        if self.dim == 1:
            xs = sorted(v[0] for v in self.vertices)
            return [((xs[0],),), ((xs[-1],),)]
        from scipy.spatial import ConvexHull

        hull = ConvexHull(np.array([[float(c) for c in v] for v in self.vertices]))
        return [tuple(self.vertices[i] for i in simplex) for simplex in hull.simplices]

    def facet_inequalities(self) -> List[Tuple[Vec, Fraction]]:
        """Exact outward ``(normal, offset)`` pairs with ``normal . x <= offset`` on the polytope."""
        centroid = tuple(sum(c) / len(self.vertices) for c in zip(*self.vertices))
        out = []
        for simplex in self.facets():
            v0 = simplex[0]
            if self.dim == 1:
                nrm = [Q(1)]
            else:
                rows = [[a - b for a, b in zip(v, v0)] for v in simplex[1:]]
                nrm = _nullvec(rows, self.dim)
            off = sum(a * b for a, b in zip(nrm, v0))
            if sum(a * b for a, b in zip(nrm, centroid)) > off:
                nrm = [-c for c in nrm]
                off = -off
            out.append((tuple(nrm), off))
        return out

    def interior_contains(self, p) -> bool:
        p = _pt(p)
        return all(sum(a * b for a, b in zip(n, p)) < off for n, off in self.facet_inequalities())


def cross_polytope(d: int, radius) -> Polytope:
    r = _q(radius)
    verts = []
    for j in range(d):
        for sgn in (1, -1):
            v = [Q(0)] * d
            v[j] = sgn * r
            verts.append(tuple(v))
    return Polytope(tuple(verts))


def _as_polytope(K) -> Polytope:
    return K if isinstance(K, Polytope) else Polytope(tuple(K))


def value_bounds(A) -> Tuple[Fraction, Fraction]:
    if isinstance(A, ValueSet):
        lo, hi = A.inf, A.sup
    else:
        vals = [to_number(a) for a in A]
        lo, hi = min(vals), max(vals)
    lo, hi = _q(lo), _q(hi)
    if lo <= 0:
        raise PreconditionFailed("the value set must be bounded away from 0")
    return lo, hi


def in_KAd(K, A) -> bool:
    """``D_{1/sup A} ⊆ K ⊆ D_{1/inf A}`` for a convex polytope ``K``."""
    K = _as_polytope(K)
    K.check_full_dimensional()
    lo, hi = value_bounds(A)
    if any(_l1(v) > 1 / lo for v in K.vertices):
        return False
    return all(K.contains(v) for v in cross_polytope(K.dim, 1 / hi).vertices)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def boundary_net(K, eps) -> List[Vec]:
    """Rational ε-net of ``∂K``: each boundary simplex refined dyadically until its l1 diameter <= ε."""
    K = _as_polytope(K)
    eps = _q(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = set()
    for simplex in K.facets():
        diam = max((_l1(a - b for a, b in zip(u, v)) for u, v in itertools.combinations(simplex, 2)),
                   default=Q(0))
        j = 0
        while diam / (1 << j) > eps:
            j += 1
        n = 1 << j
        for comp in _compositions(n, len(simplex)):
            pts.add(tuple(sum(Q(c, n) * v[i] for c, v in zip(comp, simplex)) for i in range(K.dim)))
    return sorted(pts)


# --- star / alternating / cone-and-grid constructions --------------------------


def star_field(tips: Sequence, A, eps, domain=None) -> CostField:
    """Rays ``(0, x_i)`` with value ``|x_i|^-1`` over the default ``sup A``."""
    lo, hi = value_bounds(A)
    tips = [_pt(x) for x in tips]
    if not tips:
        raise PreconditionFailed("no rays")
    d = len(tips[0])
    rays, regions = [], []
    for x in tips:
        L = _l1(x)
        if L == 0:
            raise PreconditionFailed("a ray tip sits at the origin")
        v = 1 / L
        if not lo <= v <= hi:
            raise PreconditionFailed(f"ray value {v} outside [{lo}, {hi}]")
        rays.append(Ray(x, ((Q(0), L, v),)))
        regions.append(Segment(tuple(Q(0) for _ in x), x, v))
    if domain is None:
        R = 1 / lo
        domain = ((-R,) * d, (R,) * d)
    return CostField(d, hi, regions, domain=domain, value_range=(lo, hi), rays=rays, eps=eps, kind="star")


def build_star_field(K, A, eps) -> CostField:
    """Star field over a rational ε-net of ``∂K``."""
    K = _as_polytope(K)
    eps = _q(eps)
    lo, hi = value_bounds(A)
    if not in_KAd(K, A):
        raise PreconditionFailed("K is not squeezed between the two l1 balls")
    if not 0 < eps < 1 / hi:
        raise PreconditionFailed("eps must lie in (0, 1/sup A)")
    if not all(K.interior_contains(v) for v in cross_polytope(K.dim, 1 / hi).vertices):
        raise PreconditionFailed("the boundary of K touches the inner ball")
    return star_field(boundary_net(K, eps), (lo, hi), eps)


def _rational_gcd(a: Fraction, b: Fraction) -> Fraction:
    den = math.lcm(a.denominator, b.denominator)
    return Q(math.gcd(int(a * den), int(b * den)), den)


def _merge(profile):
    out = []
    for a, b, v in profile:
        if b <= a:
            continue
        if out and out[-1][2] == v and out[-1][1] == a:
            out[-1] = (out[-1][0], b, v)
        else:
            out.append((a, b, v))
    return tuple(out)


def split_block(s_i, value, lo, hi) -> Tuple[Fraction, Fraction]:
    """``(s1, s2)`` with ``s1 + s2 = s_i`` and ``s1 hi + s2 lo = s_i value``."""
    if hi == lo:
        if value != hi:
            raise NoRationalSplit("value outside a one-point range")
        return s_i, Q(0)
    s1 = s_i * (value - lo) / (hi - lo)
    return s1, s_i - s1


def alternate_field(f: CostField, s, max_blocks: int = 100_000) -> CostField:
    """Replace each ray value by blocks alternating ``sup A`` / ``inf A`` with equal block integrals."""
    if not f.rays or f.eps is None:
        raise PreconditionFailed("alternate_field needs a star field")
    s = _q(s)
    if s <= 0:
        raise NoRationalSplit("block length must be positive")
    lo, hi = f.value_range
    rays, regions = [], []
    for ray in f.rays:
        prof = []
        for r0, r1, v in ray.profile:
            if v in (lo, hi):
                prof.append((r0, r1, v))
                continue
            g = _rational_gcd(_rational_gcd(f.eps, r1 - r0), r0) if r0 else _rational_gcd(f.eps, r1 - r0)
            s_i = g / math.ceil(g / s)
            count = (r1 - r0) / s_i
            if count.denominator != 1 or count > max_blocks:
                raise NoRationalSplit(f"no block length <= {s} tiles the ray to {ray.tip}")
            s1, _ = split_block(s_i, v, lo, hi)
            for k in range(int(count)):
                start = r0 + k * s_i
                prof.append((start, start + s1, hi))
                prof.append((start + s1, start + s_i, lo))
        prof = _merge(prof)
        rays.append(Ray(ray.tip, prof))
        for a, b, v in prof:
            regions.append(Segment(ray.point_at(a), ray.point_at(b), v))
    return CostField(f.dim, f.default, regions, domain=f.domain, value_range=f.value_range,
                     rays=rays, eps=f.eps, kind="alternating")


def _cones_overlap(rays: Sequence[Ray], theta) -> Optional[Tuple[int, int]]:
    """Conservative test: directions closer than the two cone half-widths count as overlapping."""
    dirs = [r.direction() for r in rays]
    for i, j in itertools.combinations(range(len(rays)), 2):
        gap = _l1(a - b for a, b in zip(dirs[i], dirs[j]))
        if gap <= theta / rays[i].length + theta / rays[j].length:
            return i, j
    return None


def cone_field(f: CostField, theta) -> CostField:
    """``g``: ray profiles copied radially into cones around each ray, ``sup A`` on ``D_ε`` and elsewhere."""
    if not f.rays or f.eps is None:
        raise PreconditionFailed("cone_field needs a star or alternating field")
    theta = _q(theta)
    if theta <= 0:
        raise ValueError("theta must be positive")
    clash = _cones_overlap(f.rays, theta)
    if clash is not None:
        i, j = clash
        raise ConesOverlap(f"cones around {f.rays[i].tip} and {f.rays[j].tip} may intersect")
    lo, hi = f.value_range
    origin = tuple(Q(0) for _ in range(f.dim))
    regions = [Ball(origin, f.eps, hi)] + [Cone(r.tip, theta, r.profile) for r in f.rays]
    return CostField(f.dim, hi, regions, domain=f.domain, value_range=f.value_range,
                     rays=f.rays, eps=f.eps, kind="cone")


def staircase(start: Vec, end: Vec, scale: int) -> List[Tuple[int, ...]]:
    """Monotone lattice path on ``Z^d/scale`` from ``start`` towards ``end`` tracking the segment.

    Returned in integer (scaled) coordinates.  Each step moves the coordinate
    lagging furthest behind the straight line at the next l1 level.
    """
    a = [c * scale for c in start]
    b = [c * scale for c in end]
    if any(c.denominator != 1 for c in a + b):
        raise NoGridPath("segment endpoints are not lattice points at this scale")
    a = [int(c) for c in a]
    b = [int(c) for c in b]
    total = sum(abs(y - x) for x, y in zip(a, b))
    cur = list(a)
    out = [tuple(cur)]
    for step in range(1, total + 1):
        lag = []
        for j, (x, y) in enumerate(zip(a, b)):
            span = abs(y - x)
            moved = abs(cur[j] - x)
            lag.append((Q(span * step, total) - moved, -j) if moved < span else (Q(-1), -j))
        _, negj = max(lag)
        j = -negj
        cur[j] += 1 if b[j] > a[j] else -1
        out.append(tuple(cur))
    return out


def _required_scale(f: CostField) -> int:
    vals = []
    for ray in f.rays:
        vals.extend(ray.point_at(f.eps))
        vals.extend(ray.tip)
        vals.append(f.eps)
        for _, r1, _ in ray.profile:
            vals.append(r1)
    return lcm_of_denominators(vals)


def _grid_paths(g: CostField, M: int):
    cones = [r for r in g.regions if isinstance(r, Cone)]
    edges: Dict[Edge, Fraction] = {}
    paths = []
    for ray, cone in zip(g.rays, cones):
        pts = staircase(ray.point_at(g.eps), ray.tip, M)
        if pts[-1] != tuple(int(c * M) for c in ray.tip):
            return None
        for p in pts:
            if not cone.contains(tuple(Q(c, M) for c in p)):
                return None
        for p, q in zip(pts, pts[1:]):
            mid = tuple(Q(a + b, 2 * M) for a, b in zip(p, q))
            if not cone.contains(mid):
                return None
            edges[canonical_edge(p, q)] = g.value_at(mid)
        paths.append(pts)
    return edges, paths


def cone_and_grid_field(f: CostField, theta, M: Optional[int] = None, max_scale: int = 4096) -> CostField:
    """``g̃``: the cone field kept only on lattice paths Γ_i of ``Z^d/M`` inside each cone.

    ``M`` defaults to the smallest multiple of the required denominator at
    which every path fits in its cone.
    """
    g = cone_field(f, theta)
    base = _required_scale(f)
    if M is not None:
        if M % base:
            raise NoGridPath(f"M={M} is not a multiple of {base}; block endpoints are off the lattice")
        candidates = [M]
    else:
        candidates = range(base, max_scale + 1, base)
    for m in candidates:
        built = _grid_paths(g, m)
        if built is not None:
            edges, paths = built
            return CostField(f.dim, f.sup_value, [LatticeEdges(m, edges)], domain=f.domain,
                             value_range=f.value_range, rays=f.rays, paths=paths, grid_scale=m,
                             eps=f.eps, kind="grid")
    raise NoGridPath(f"no grid path fits inside its cone (tried M up to {candidates[-1]})")


def path_integral(f: CostField, path_pts: Sequence, scale: int) -> Fraction:
    """Exact integral of ``f`` along a lattice path given in scaled integer coordinates."""
    total = Q(0)
    for p, q in zip(path_pts, path_pts[1:]):
        total += f.integral(tuple(Q(c, scale) for c in p), tuple(Q(c, scale) for c in q))
    return total


# --- bridges to configurations ---------------------------------------------


def _value_set(A, f: CostField) -> ValueSet:
    if A is None:
        return ValueSet.finite(sorted({f.inf_value, f.sup_value} | {v for r in f.regions for v in r.values()}))
    return A if isinstance(A, ValueSet) else ValueSet.finite(list(A))


def config_from_field(f: CostField, t: int, A=None) -> Configuration:
    """Scalar configuration with edge ``e`` valued ``f(midpoint(e)/(M t))``.

    Only grid-path fields (regions on ``Z^d/M``) are supported; other edges
    take the default.
    """
    M = f.grid_scale or 1
    if not isinstance(t, int) or t < 1:
        raise ScaleMismatch("t must be a positive integer")
    S = M * t
    explicit = {}
    for r in f.regions:
        if not isinstance(r, LatticeEdges) or r.scale != M:
            raise ScaleMismatch("field regions must be lattice edges at the field's grid scale")
        for e in r.edges:
            j = e.axis
            for k in range(t):
                a = tuple(c * t + (k if i == j else 0) for i, c in enumerate(e.a))
                b = a[:j] + (a[j] + 1,) + a[j + 1:]
                mid = tuple(Q(2 * c + (1 if i == j else 0), 2 * S) for i, c in enumerate(a))
                explicit[Edge(a, b)] = f.value_at(mid)
    vs = _value_set(A, f)
    for v in set(explicit.values()) | {f.default}:
        if v not in vs:
            raise PreconditionFailed(f"field value {v} is not in the value set")
    lo, hi = f.domain
    box = Box(tuple(math.ceil(c * S) for c in lo), tuple(math.floor(c * S) for c in hi))
    return Configuration(f.dim, f.default, explicit={e: _plain(v) for e, v in explicit.items()},
                         value_set=vs, bounding_box=box)


def _plain(v: Fraction):
    return v.numerator if v.denominator == 1 else v


def field_from_config(cfg: Configuration, t: int, box: Optional[Box] = None, sup_value=None) -> CostField:
    """Field equal to ``τ(e)`` on the open edges of ``Z^d/t`` and ``sup A`` elsewhere."""
    if cfg.is_vector:
        raise TypeError("field_from_config needs a scalar configuration")
    box = box or cfg.bounding_box
    if box is None:
        raise PreconditionFailed("a bounded box is required")
    vals = {e: cfg.value(e) for e in box.edges()}
    if sup_value is None:
        sup_value = cfg.value_set.sup if cfg.value_set is not None else max(cfg.distinct_values())
    lo = min([sup_value] + list(vals.values()))
    if cfg.value_set is not None:
        lo = min(lo, cfg.value_set.inf)
    domain = (tuple(Q(c, t) for c in box.lo), tuple(Q(c, t) for c in box.hi))
    return CostField(cfg.dim, sup_value, [LatticeEdges(t, vals)], domain=domain,
                     value_range=(lo, sup_value), grid_scale=t, kind="lattice")
