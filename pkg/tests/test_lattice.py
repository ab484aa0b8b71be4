from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from percolab.errors import DimensionMismatch, DomainExceeded, NotAdjacent
from percolab.lattice import (Box, BoxRegion, Configuration, Edge, Path, PerturbationSpec,
                              PeriodicPattern, SegmentRegion, ValueSet, canonical_edge,
                              constant_config, path_passage_value, perturb)


def test_canonical_edge_examples():
    assert canonical_edge((0, 0), (1, 0)) == Edge((0, 0), (1, 0))
    assert canonical_edge((1, 0), (0, 0)) == Edge((0, 0), (1, 0))
    with pytest.raises(NotAdjacent):
        canonical_edge((0, 0), (2, 0))
    with pytest.raises(DimensionMismatch):
        canonical_edge((0, 0), (1, 0, 0))


points = st.tuples(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))


@given(points, st.integers(0, 2), st.sampled_from([-1, 1]))
def test_canonicalization_symmetric_and_idempotent(x, axis, sign):
    y = tuple(c + sign if i == axis else c for i, c in enumerate(x))
    e = canonical_edge(x, y)
    assert e == canonical_edge(y, x)
    assert canonical_edge(e.a, e.b) == e
    assert e.a < e.b


def test_path_validation():
    with pytest.raises(NotAdjacent):
        Path(((0, 0), (1, 1)))
    with pytest.raises(ValueError):
        Path(())
    p = Path(((0, 0), (1, 0), (1, 1)))
    assert len(p) == 2 and len(p.edges) == 2
    assert p.subpath(1, 2).vertices == ((1, 0), (1, 1))


def test_path_passage_value_examples():
    cfg = constant_config(2, 1)
    p = Path(tuple((i, 0) for i in range(6)))
    assert path_passage_value(cfg, p) == 5
    assert path_passage_value(cfg, Path(((3, 3),))) == 0
    vcfg = Configuration(2, (0, 0), kind=2, explicit={((0, 0), (1, 0)): (1, 0), ((1, 0), (2, 0)): (-1, 0)})
    assert path_passage_value(vcfg, Path(((0, 0), (1, 0), (2, 0)))) == (0, 0)
    assert path_passage_value(vcfg, Path(((5, 5),))) == (0, 0)
    with pytest.raises(DimensionMismatch):
        path_passage_value(cfg, Path(((0, 0, 0), (1, 0, 0))))


walks = st.lists(st.sampled_from([(1, 0), (-1, 0), (0, 1), (0, -1)]), min_size=0, max_size=12)


def _walk(start, steps):
    verts = [start]
    for dx, dy in steps:
        verts.append((verts[-1][0] + dx, verts[-1][1] + dy))
    return Path(tuple(verts))


@settings(max_examples=60)
@given(walks, walks, st.integers(0, 10**6))
def test_path_additivity(s1, s2, seed):
    import random

    rng = random.Random(seed)
    table = {}
    for e in Box((-13, -13), (13, 13)).edges():
        table[e] = Fraction(rng.randint(0, 9), rng.randint(1, 4))
    cfg = Configuration(2, 1, explicit=table)
    vcfg = Configuration(2, (0, 0), kind=2, explicit={e: (v, -v) for e, v in table.items()})
    g1 = _walk((0, 0), s1)
    g2 = _walk(g1.end, s2)
    both = g1.concat(g2)
    assert path_passage_value(cfg, both) == path_passage_value(cfg, g1) + path_passage_value(cfg, g2)
    v1, v2 = path_passage_value(vcfg, g1), path_passage_value(vcfg, g2)
    assert path_passage_value(vcfg, both) == tuple(a + b for a, b in zip(v1, v2))


def test_rules_first_match_wins():
    cfg = Configuration(2, 7, rules=[(SegmentRegion((0, 0), (3, 0)), 1), (BoxRegion((-5, -5), (5, 5)), 2)],
                        explicit={((1, 0), (2, 0)): 3})
    assert cfg((0, 0), (1, 0)) == 1
    assert cfg((1, 0), (2, 0)) == 3
    assert cfg((0, 1), (0, 2)) == 2
    assert cfg((9, 9), (9, 10)) == 7
    assert cfg((0, 0), (1, 0)) == cfg((1, 0), (0, 0))


def test_periodic_pattern():
    cfg = Configuration(1, 1, rules=[(PeriodicPattern((1, 2)), None)])
    assert [cfg((i,), (i + 1,)) for i in range(4)] == [1, 2, 1, 2]


def test_bounding_box_is_enforced():
    cfg = Configuration(2, 1, bounding_box=Box((0, 0), (2, 2)))
    assert cfg((0, 0), (0, 1)) == 1
    with pytest.raises(DomainExceeded):
        cfg((2, 2), (3, 2))


def test_negative_scalar_rejected():
    with pytest.raises(ValueError):
        Configuration(2, -1)


def test_vector_config_needs_finite_values():
    with pytest.raises(ValueError):
        Configuration(2, (1, 0), kind=2, value_set=ValueSet.between(0, 1))


def test_json_round_trip():
    cfg = Configuration(2, Fraction(7, 2), rules=[(SegmentRegion((0, 0), (2, 0)), 1)],
                        explicit={((0, 0), (0, 1)): Fraction(1, 3)}, value_set=ValueSet.between(1, 4),
                        bounding_box=Box((-3, -3), (3, 3)))
    back = Configuration.from_json(cfg.to_json())
    for e in Box((-3, -3), (3, 3)).edges():
        assert back.value(e) == cfg.value(e)
    assert back.to_json() == cfg.to_json()


def test_perturb_examples():
    cfg = Configuration(2, 1, explicit={((0, 0), (1, 0)): 2}, value_set=ValueSet.finite([1, 2]))
    edges = tuple(Box((0, 0), (2, 2)).edges())
    assert perturb(cfg, PerturbationSpec(0, edges, 1)) is cfg
    same = perturb(cfg, PerturbationSpec(Fraction(3, 10), edges, 1))
    assert all(same.value(e) == cfg.value(e) for e in edges)

    icfg = Configuration(2, Fraction(3, 2), value_set=ValueSet.between(1, 2))
    r = Fraction(1, 10)
    p1 = perturb(icfg, PerturbationSpec(r, edges, 42))
    p2 = perturb(icfg, PerturbationSpec(r, edges, 42))
    p3 = perturb(icfg, PerturbationSpec(r, edges, 43))
    vals = [p1.value(e) for e in edges]
    assert vals == [p2.value(e) for e in edges]
    assert vals != [p3.value(e) for e in edges]
    assert all(abs(v - Fraction(3, 2)) <= r and 1 <= v <= 2 for v in vals)


@given(st.integers(0, 1000))
def test_perturb_clamps_to_interval(seed):
    cfg = Configuration(1, 1, value_set=ValueSet.between(1, 2))
    edges = tuple(Box((0,), (10,)).edges())
    out = perturb(cfg, PerturbationSpec(Fraction(1, 2), edges, seed))
    assert all(1 <= out.value(e) <= Fraction(3, 2) for e in edges)


def test_repeated_lookup_is_stable():
    cfg = Configuration(2, 1, explicit={((0, 0), (1, 0)): Fraction(1, 7)})
    e = canonical_edge((0, 0), (1, 0))
    assert cfg.value(e) is cfg.value(e)
