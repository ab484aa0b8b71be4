"""Lattice points, edges, paths and edge-valued configurations on Z^d."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainExceeded, NotAdjacent
from .numeric import is_exact, l1, norm, to_number, vadd, vsub

Point = tuple


def as_point(x: Iterable) -> Point:
    pt = tuple(int(c) for c in x)
    if any(pc != c for pc, c in zip(pt, x)):
        raise ValueError(f"not a lattice point: {x!r}")
    return pt


def unit(d: int, i: int, sign: int = 1) -> Point:
    """Coordinate vector ``sign * xi_{i+1}`` in dimension ``d`` (``i`` is 0-based)."""
    return tuple(sign if j == i else 0 for j in range(d))


def neighbors(x: Point) -> Iterator[Point]:
    for i in range(len(x)):
        for s in (-1, 1):
            yield x[:i] + (x[i] + s,) + x[i + 1:]


@dataclass(frozen=True, order=True)
class Edge:
    """Nearest-neighbour edge stored with its lexicographically smaller endpoint first."""

    a: Point
    b: Point

    @property
    def axis(self) -> int:
        for i, (u, v) in enumerate(zip(self.a, self.b)):
            if u != v:
                return i
        raise NotAdjacent("degenerate edge")

    @property
    def dim(self) -> int:
        return len(self.a)

    def midpoint(self) -> tuple:
        return tuple(Fraction(u + v, 2) for u, v in zip(self.a, self.b))

    def other(self, x: Point) -> Point:
        return self.b if x == self.a else self.a


def canonical_edge(a: Sequence[int], b: Sequence[int]) -> Edge:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise DimensionMismatch(f"{a} and {b} live in different dimensions")
    if l1(vsub(a, b)) != 1:
        raise NotAdjacent(f"{a} and {b} are not nearest neighbours")
    return Edge(a, b) if a <= b else Edge(b, a)


@dataclass(frozen=True)
class Path:
    vertices: tuple

    def __post_init__(self):
        verts = tuple(tuple(v) for v in self.vertices)
        if not verts:
            raise ValueError("a path needs at least one vertex")
        d = len(verts[0])
        for u, v in zip(verts, verts[1:]):
            if len(v) != d:
                raise DimensionMismatch("mixed dimensions in path")
            if l1(vsub(u, v)) != 1:
                raise NotAdjacent(f"consecutive vertices {u}, {v} are not adjacent")
        object.__setattr__(self, "vertices", verts)

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    @property
    def edges(self) -> tuple:
        return tuple(canonical_edge(u, v) for u, v in zip(self.vertices, self.vertices[1:]))

    def __len__(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> Point:
        return self.vertices[0]

    @property
    def end(self) -> Point:
        return self.vertices[-1]

    def subpath(self, i: int, j: int) -> "Path":
        """Vertices ``i..j`` inclusive."""
        return Path(self.vertices[i:j + 1])

    def concat(self, other: "Path") -> "Path":
        if self.end != other.start:
            raise ValueError("paths do not meet")
        return Path(self.vertices + other.vertices[1:])

    def reversed(self) -> "Path":
        return Path(self.vertices[::-1])

    def to_json(self) -> list:
        return [list(v) for v in self.vertices]


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box of lattice points ``lo <= x <= hi``."""

    lo: Point
    hi: Point

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(int(c) for c in self.hi))
        if len(self.lo) != len(self.hi):
            raise DimensionMismatch("box corners differ in dimension")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty box {self.lo}..{self.hi}")

    @classmethod
    def around(cls, points: Iterable[Sequence[int]], radius: int) -> "Box":
        pts = [tuple(p) for p in points]
        d = len(pts[0])
        lo = tuple(min(p[i] for p in pts) - radius for i in range(d))
        hi = tuple(max(p[i] for p in pts) + radius for i in range(d))
        return cls(lo, hi)

    @classmethod
    def cube(cls, d: int, radius: int) -> "Box":
        return cls((-radius,) * d, (radius,) * d)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def __contains__(self, x) -> bool:
        return len(x) == len(self.lo) and all(l <= c <= h for l, c, h in zip(self.lo, x, self.hi))

    def contains_edge(self, e: Edge) -> bool:
        return e.a in self and e.b in self

    def points(self) -> Iterator[Point]:
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def edges(self) -> Iterator[Edge]:
        for x in self.points():
            for i in range(self.dim):
                if x[i] < self.hi[i]:
                    yield Edge(x, x[:i] + (x[i] + 1,) + x[i + 1:])

    def neighbors(self, x: Point) -> Iterator[Point]:
        for y in neighbors(x):
            if y in self:
                yield y

    def is_boundary(self, x: Point) -> bool:
        return any(c == l or c == h for l, c, h in zip(self.lo, x, self.hi))

    def boundary_points(self) -> list:
        return [x for x in self.points() if self.is_boundary(x)]

    def edge_on_boundary(self, e: Edge) -> bool:
        """True when the whole edge lies in a facet of the box."""
        if not self.contains_edge(e):
            return False
        ax = e.axis
        return any(
            e.a[i] in (self.lo[i], self.hi[i]) for i in range(self.dim) if i != ax
        )

    def edge_in_interior(self, e: Edge) -> bool:
        """True when the open edge lies in the interior of the box."""
        ax = e.axis
        for i in range(self.dim):
            if i == ax:
                if e.a[i] < self.lo[i] or e.b[i] > self.hi[i]:
                    return False
            elif not (self.lo[i] < e.a[i] < self.hi[i]):
                return False
        return True

    def index(self, x: Point) -> int:
        return int(np.ravel_multi_index(tuple(c - l for c, l in zip(x, self.lo)), self.shape))

    def point(self, idx: int) -> Point:
        return tuple(int(c) + l for c, l in zip(np.unravel_index(idx, self.shape), self.lo))

    def all_points_array(self) -> np.ndarray:
        grids = np.meshgrid(*(np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


# --- value sets -------------------------------------------------------------


@dataclass(frozen=True)
class ValueSet:
    """The admissible value set A: a finite list, or a closed scalar interval."""

    elements: Optional[tuple] = None
    interval: Optional[tuple] = None

    def __post_init__(self):
        if (self.elements is None) == (self.interval is None):
            raise ValueError("give exactly one of elements / interval")
        if self.elements is not None:
            elems = []
            for e in self.elements:
                e = tuple(to_number(c) for c in e) if isinstance(e, (list, tuple)) else to_number(e)
                if e not in elems:
                    elems.append(e)
            if not elems:
                raise ValueError("empty value set")
            object.__setattr__(self, "elements", tuple(elems))
        else:
            lo, hi = (to_number(v) for v in self.interval)
            if lo > hi:
                raise ValueError("empty interval")
            object.__setattr__(self, "interval", (lo, hi))

    @classmethod
    def finite(cls, values: Iterable) -> "ValueSet":
        return cls(elements=tuple(values))

    @classmethod
    def between(cls, lo, hi) -> "ValueSet":
        return cls(interval=(lo, hi))

    @property
    def is_finite(self) -> bool:
        return self.elements is not None

    @property
    def is_vector(self) -> bool:
        return self.is_finite and isinstance(self.elements[0], tuple)

    @property
    def inf(self):
        if self.is_vector:
            raise TypeError("inf of a vector set is undefined")
        return min(self.elements) if self.is_finite else self.interval[0]

    @property
    def sup(self):
        if self.is_vector:
            raise TypeError("sup of a vector set is undefined")
        return max(self.elements) if self.is_finite else self.interval[1]

    def __contains__(self, v) -> bool:
        if self.is_finite:
            return v in self.elements
        return self.interval[0] <= v <= self.interval[1]


# --- default-rule regions ---------------------------------------------------


class Region:
    """A set of edges used by the ordered default rule of a configuration."""

    def contains(self, e: Edge) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def mask(self, box: Box, axis: int) -> np.ndarray:
        """Boolean mask over edges ``x -> x + xi_axis`` with both ends in ``box``."""
        shape = list(box.shape)
        shape[axis] -= 1
        out = np.zeros(shape, dtype=bool)
        for idx in np.ndindex(*shape):
            a = tuple(i + l for i, l in zip(idx, box.lo))
            b = a[:axis] + (a[axis] + 1,) + a[axis + 1:]
            out[idx] = self.contains(Edge(a, b))
        return out

    def to_json(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


def _edge_grid(box: Box, axis: int):
    shape = list(box.shape)
    shape[axis] -= 1
    grids = np.meshgrid(
        *(np.arange(box.lo[i], box.lo[i] + shape[i]) for i in range(box.dim)), indexing="ij"
    )
    return grids


@dataclass(frozen=True)
class BoxRegion(Region):
    """Edges with both endpoints in the closed box."""

    lo: Point
    hi: Point

    def contains(self, e: Edge) -> bool:
        b = Box(self.lo, self.hi)
        return e.a in b and e.b in b

    def mask(self, box: Box, axis: int) -> np.ndarray:
        grids = _edge_grid(box, axis)
        m = np.ones(grids[0].shape, dtype=bool)
        for i, g in enumerate(grids):
            top = g + (1 if i == axis else 0)
            m &= (g >= self.lo[i]) & (top <= self.hi[i])
        return m

    def to_json(self) -> dict:
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class BoxBoundaryRegion(Region):
    """Edges lying in the boundary of the closed box."""

    lo: Point
    hi: Point

    def contains(self, e: Edge) -> bool:
        return Box(self.lo, self.hi).edge_on_boundary(e)

    def mask(self, box: Box, axis: int) -> np.ndarray:
        grids = _edge_grid(box, axis)
        inside = BoxRegion(self.lo, self.hi).mask(box, axis)
        on = np.zeros(grids[0].shape, dtype=bool)
        for i, g in enumerate(grids):
            if i != axis:
                on |= (g == self.lo[i]) | (g == self.hi[i])
        return inside & on

    def to_json(self) -> dict:
        return {"type": "box_boundary", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class SegmentRegion(Region):
    """Edges of an axis-parallel lattice segment ``[start, stop]``."""

    start: Point
    stop: Point

    def __post_init__(self):
        diff = [i for i, (u, v) in enumerate(zip(self.start, self.stop)) if u != v]
        if len(diff) > 1:
            raise ValueError("segment regions must be axis-parallel")

    def contains(self, e: Edge) -> bool:
        lo = tuple(min(u, v) for u, v in zip(self.start, self.stop))
        hi = tuple(max(u, v) for u, v in zip(self.start, self.stop))
        return BoxRegion(lo, hi).contains(e)

    def mask(self, box: Box, axis: int) -> np.ndarray:
        lo = tuple(min(u, v) for u, v in zip(self.start, self.stop))
        hi = tuple(max(u, v) for u, v in zip(self.start, self.stop))
        return BoxRegion(lo, hi).mask(box, axis)

    def to_json(self) -> dict:
        return {"type": "segment", "from": list(self.start), "to": list(self.stop)}


@dataclass(frozen=True)
class PeriodicPattern(Region):
    """Matches every edge; the value cycles with the coordinate sum of the lower endpoint.

    Used as the last rule of a default: ``value_for(e)`` replaces the rule's
    constant value.
    """

    values: tuple

    def contains(self, e: Edge) -> bool:
        return True

    def value_for(self, e: Edge):
        return self.values[sum(e.a) % len(self.values)]

    def to_json(self) -> dict:
        return {"type": "periodic"}


def region_from_json(spec: dict) -> Region:
    kind = spec.get("type")
    if kind == "box":
        return BoxRegion(tuple(spec["lo"]), tuple(spec["hi"]))
    if kind == "box_boundary":
        return BoxBoundaryRegion(tuple(spec["lo"]), tuple(spec["hi"]))
    if kind == "segment":
        return SegmentRegion(tuple(spec["from"]), tuple(spec["to"]))
    raise ValueError(f"unknown region type {kind!r}")


# --- configurations ---------------------------------------------------------


def _norm_value(v, kind):
    if kind == "scalar":
        if isinstance(v, (list, tuple)):
            raise DimensionMismatch("vector value in a scalar configuration")
        v = to_number(v)
        if v < 0:
            raise ValueError("scalar passage values must be nonnegative")
        return v
    if not isinstance(v, (list, tuple)) or len(v) != kind:
        raise DimensionMismatch(f"expected a {kind}-vector, got {v!r}")
    return tuple(to_number(c) for c in v)


class Configuration:
    """An immutable assignment of passage values to the edges of Z^d.

    Explicit edges override an ordered list of ``(region, value)`` rules
    (first match wins), which override the constant default.  ``kind`` is
    ``"scalar"`` or the vector length ``k``.
    """

    def __init__(
        self,
        dim: int,
        default,
        *,
        kind="scalar",
        rules: Sequence = (),
        explicit: Optional[Mapping] = None,
        value_set: Optional[ValueSet] = None,
        bounding_box: Optional[Box] = None,
    ):
        if kind != "scalar" and not (isinstance(kind, int) and kind >= 1):
            raise ValueError(f"bad value kind {kind!r}")
        self.dim = int(dim)
        self.kind = kind
        self.default = _norm_value(default, kind)
        norm_rules = []
        for region, value in rules:
            if isinstance(region, PeriodicPattern):
                region = PeriodicPattern(tuple(_norm_value(v, kind) for v in region.values))
                norm_rules.append((region, None))
            else:
                norm_rules.append((region, _norm_value(value, kind)))
        self.rules = tuple(norm_rules)
        table = {}
        for e, v in (explicit or {}).items():
            if not isinstance(e, Edge):
                e = canonical_edge(*e)
            if e.dim != self.dim:
                raise DimensionMismatch("edge dimension differs from configuration")
            table[e] = _norm_value(v, kind)
        self.explicit = MappingProxyType(table)
        if kind != "scalar" and value_set is not None and not value_set.is_finite:
            raise ValueError("vector configurations need a finite value set")
        self.value_set = value_set
        self.bounding_box = bounding_box

    @property
    def is_vector(self) -> bool:
        return self.kind != "scalar"

    def value(self, e: Edge):
        if self.bounding_box is not None and not self.bounding_box.contains_edge(e):
            raise DomainExceeded(f"edge {e} lies outside the declared bounding box")
        v = self.explicit.get(e)
        if v is not None:
            return v
        for region, val in self.rules:
            if region.contains(e):
                return region.value_for(e) if isinstance(region, PeriodicPattern) else val
        return self.default

    def __call__(self, a: Point, b: Point):
        return self.value(canonical_edge(a, b))

    def distinct_values(self) -> list:
        vals = [self.default]
        for region, v in self.rules:
            vals.extend(region.values if isinstance(region, PeriodicPattern) else [v])
        vals.extend(self.explicit.values())
        out = []
        seen = set()
        for v in vals:
            if v not in seen:
                seen.add(v)
                out.append(v)
        return out

    def replace(self, overrides: Mapping, **kw) -> "Configuration":
        """New configuration with extra explicit values layered on top."""
        table = dict(self.explicit)
        for e, v in overrides.items():
            table[e if isinstance(e, Edge) else canonical_edge(*e)] = v
        args = dict(
            kind=self.kind,
            rules=[(r, r.values if isinstance(r, PeriodicPattern) else v) for r, v in self.rules],
            explicit=table,
            value_set=self.value_set,
            bounding_box=self.bounding_box,
        )
        args.update(kw)
        return Configuration(self.dim, self.default, **args)

    def weight_arrays(self, box: Box, dtype=float) -> list:
        """Per-axis arrays of scalar edge values inside ``box`` (vectorised rules)."""
        if self.is_vector:
            raise TypeError("weight arrays exist for scalar configurations only")
        out = []
        for axis in range(box.dim):
            shape = list(box.shape)
            shape[axis] -= 1
            arr = np.full(shape, dtype(self.default), dtype=object if dtype is object else np.float64)
            for region, val in reversed(self.rules):
                if isinstance(region, PeriodicPattern):
                    grids = _edge_grid(box, axis)
                    s = sum(grids) % len(region.values)
                    for j, pv in enumerate(region.values):
                        arr[s == j] = dtype(pv)
                else:
                    arr[region.mask(box, axis)] = dtype(val)
            for e, v in self.explicit.items():
                if e.axis == axis and box.contains_edge(e):
                    arr[tuple(c - l for c, l in zip(e.a, box.lo))] = dtype(v)
            out.append(arr)
        return out

    def to_json(self) -> dict:
        from .numeric import json_number

        rules = []
        for region, v in self.rules:
            if isinstance(region, PeriodicPattern):
                rules.append({"region": {"type": "periodic"}, "value": json_number(list(region.values))})
            else:
                rules.append({"region": region.to_json(), "value": json_number(v)})
        out = {
            "dim": self.dim,
            "value_kind": "scalar" if self.kind == "scalar" else {"vector": self.kind},
            "default": json_number(self.default),
            "regions": rules,
            "edges": [
                {"a": list(e.a), "b": list(e.b), "value": json_number(v)}
                for e, v in sorted(self.explicit.items())
            ],
        }
        if self.value_set is not None:
            if self.value_set.is_finite:
                out["value_set"] = {"finite": json_number(list(self.value_set.elements))}
            else:
                out["value_set"] = {"interval": json_number(list(self.value_set.interval))}
        if self.bounding_box is not None:
            out["bounding_box"] = {"lo": list(self.bounding_box.lo), "hi": list(self.bounding_box.hi)}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Configuration":
        kind_spec = data.get("value_kind", "scalar")
        kind = "scalar" if kind_spec == "scalar" else int(kind_spec["vector"])
        rules = []
        for item in data.get("regions", []):
            spec = item["region"]
            if spec.get("type") == "periodic":
                rules.append((PeriodicPattern(tuple(item["value"])), item["value"]))
            else:
                rules.append((region_from_json(spec), item["value"]))
        explicit = {}
        for item in data.get("edges", []):
            explicit[canonical_edge(item["a"], item["b"])] = item["value"]
        vs = None
        if "value_set" in data:
            spec = data["value_set"]
            vs = ValueSet.finite(spec["finite"]) if "finite" in spec else ValueSet.between(*spec["interval"])
        bb = None
        if "bounding_box" in data:
            bb = Box(tuple(data["bounding_box"]["lo"]), tuple(data["bounding_box"]["hi"]))
        return cls(int(data["dim"]), data["default"], kind=kind, rules=rules,
                   explicit=explicit, value_set=vs, bounding_box=bb)


def constant_config(dim: int, value, **kw) -> Configuration:
    return Configuration(dim, value, **kw)


def path_passage_value(cfg: Configuration, p: Path):
    """Scalar sum of edge values, or the summed passage vector."""
    if p.dim != cfg.dim:
        raise DimensionMismatch(f"path in dimension {p.dim}, configuration in {cfg.dim}")
    if cfg.is_vector:
        total = (0,) * cfg.kind
        for e in p.edges:
            total = vadd(total, cfg.value(e))
        return total
    return sum((cfg.value(e) for e in p.edges), 0)


def passage_norm(cfg: Configuration, p: Path) -> float:
    return norm(path_passage_value(cfg, p))


# --- perturbation -----------------------------------------------------------


@dataclass(frozen=True)
class PerturbationSpec:
    radius: object
    target_edges: tuple
    seed: int = 0


_GRID = 1 << 20


def _draw(rng: random.Random, lo, hi):
    if is_exact(lo) and is_exact(hi):
        return to_number(Fraction(lo) + (Fraction(hi) - Fraction(lo)) * Fraction(rng.randrange(_GRID + 1), _GRID))
    return lo + (hi - lo) * rng.random()


def perturb(cfg: Configuration, spec: PerturbationSpec) -> Configuration:
    """Move each targeted edge value by at most ``spec.radius`` within the value set."""
    r = to_number(spec.radius)
    if r == 0:
        return cfg
    rng = random.Random(spec.seed)
    vs = cfg.value_set
    changes = {}
    for e in sorted(canonical_edge(*e) if not isinstance(e, Edge) else e for e in spec.target_edges):
        v = cfg.value(e)
        if vs is not None and vs.is_finite:
            cands = [a for a in vs.elements if _dist(a, v) <= r]
            if not cands:
                continue
            changes[e] = cands[rng.randrange(len(cands))]
        elif cfg.is_vector:
            raise ValueError("vector perturbation needs a finite value set")
        else:
            lo, hi = v - r, v + r
            if vs is not None:
                lo, hi = max(lo, vs.interval[0]), min(hi, vs.interval[1])
            lo = max(lo, 0)
            changes[e] = _draw(rng, lo, hi)
    return cfg.replace(changes)


def _dist(a, b):
    if isinstance(a, tuple):
        return norm(vsub(a, b))
    return abs(a - b)
