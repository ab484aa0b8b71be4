import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import floyd_warshall, grid_points, l1_ball_size, simple_path_minimum
from percolab.errors import EmptySet, Unreachable
from percolab.lattice import Box, Configuration, Path, canonical_edge, constant_config
from percolab.scalar import (RescaledBall, ball_convergence_trace, grow_ball,
                             hausdorff_l1, is_geodesic, optimal_paths, passage_time,
                             sample_l1_ball)


def config_from(weights, default=1):
    return Configuration(2, default, explicit={canonical_edge(a, b): w for (a, b), w in weights.items()})


def test_passage_time_examples():
    cfg = constant_config(2, 1)
    t, w = passage_time(cfg, (0, 0), (3, 4))
    assert t == 7 and len(w) == 7 and w.start == (0, 0) and w.end == (3, 4)
    t, w = passage_time(cfg, (2, 2), (2, 2))
    assert t == 0 and w.vertices == ((2, 2),)


def test_unreachable_outside_box():
    with pytest.raises(Unreachable):
        passage_time(constant_config(2, 1), (0, 0), (5, 0), Box((0, 0), (2, 2)))


def test_dijkstra_matches_simple_path_enumeration():
    rng = random.Random(7)
    shape = (4, 4)
    box = Box((0, 0), (3, 3))
    pts = grid_points(shape)
    for _ in range(500):
        weights = {}
        for x in pts:
            for i in range(2):
                if x[i] < 3:
                    y = x[:i] + (x[i] + 1,) + x[i + 1:]
                    weights[(x, y)] = rng.choice((1, 2, 3))
        cfg = config_from(weights)
        x, y = rng.sample(pts, 2)
        assert passage_time(cfg, x, y, box)[0] == simple_path_minimum(shape, weights, x, y)


def test_rational_grid_matches_enumeration():
    rng = random.Random(3)
    box = Box((0, 0), (2, 2))
    pts = grid_points((3, 3))
    for _ in range(50):
        weights = {}
        for x in pts:
            for i in range(2):
                if x[i] < 2:
                    weights[(x, x[:i] + (x[i] + 1,) + x[i + 1:])] = Fraction(rng.randint(1, 20), rng.randint(1, 6))
        cfg = config_from(weights)
        for y in pts:
            t, w = passage_time(cfg, (0, 0), y, box)
            assert t == simple_path_minimum((3, 3), weights, (0, 0), y)
            assert sum((cfg.value(e) for e in w.edges), 0) == t


def test_optimal_paths_examples():
    cfg = constant_config(2, 1)
    paths = optimal_paths(cfg, (0, 0), (1, 1))
    assert [p.vertices for p in paths] == [((0, 0), (0, 1), (1, 1)), ((0, 0), (1, 0), (1, 1))]
    assert [p.vertices for p in optimal_paths(cfg, (4, 4), (4, 4))] == [((4, 4),)]
    # monotone staircases from (0,0) to (2,2): C(4,2)
    assert len(optimal_paths(cfg, (0, 0), (2, 2))) == 6


def test_is_geodesic_examples():
    cfg = constant_config(2, 1)
    assert is_geodesic(cfg, Path(((0, 0), (1, 0))))
    assert is_geodesic(cfg, Path(tuple((i, 0) for i in range(5))))
    assert not is_geodesic(cfg, Path(((0, 0), (0, 1), (1, 1), (1, 0))))


def test_grow_ball_examples():
    cfg = constant_config(2, 1)
    snap = grow_ball(cfg, 2, Box.cube(2, 3))
    assert len(snap) == 13
    assert grow_ball(cfg, 0, Box.cube(2, 3)).points.tolist() == [[0, 0]]
    for n in range(1, 5):
        assert len(grow_ball(cfg, n, Box.cube(2, n + 1))) == l1_ball_size(2, n)


def test_grow_ball_methods_agree():
    rng = random.Random(11)
    box = Box.cube(2, 6)
    table = {e: Fraction(rng.randint(2, 9), 3) for e in box.edges()}
    cfg = Configuration(2, 3, explicit=table)
    for t in (Fraction(5, 3), 4, Fraction(22, 3)):
        a = grow_ball(cfg, t, box, method="heap").points
        b = grow_ball(cfg, t, box, method="sparse").points
        assert np.array_equal(a, b)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.fractions(0, 8), st.fractions(0, 8))
def test_balls_are_monotone(seed, s, t):
    s, t = min(s, t), max(s, t)
    rng = random.Random(seed)
    box = Box.cube(2, 5)
    cfg = Configuration(2, 1, explicit={e: rng.choice((1, 2, 3)) for e in box.edges()})
    small = {tuple(p) for p in grow_ball(cfg, s, box).points.tolist()}
    big = {tuple(p) for p in grow_ball(cfg, t, box).points.tolist()}
    assert (0, 0) in small and small <= big


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_passage_time_bounds(seed):
    rng = random.Random(seed)
    box = Box.cube(2, 4)
    cfg = Configuration(2, 2, explicit={e: rng.choice((1, 2)) for e in box.edges()})
    x = (rng.randint(-2, 2), rng.randint(-2, 2))
    y = (rng.randint(-2, 2), rng.randint(-2, 2))
    d = abs(x[0] - y[0]) + abs(x[1] - y[1])
    t, _ = passage_time(cfg, x, y, box)
    assert d <= t <= 2 * d


def test_auto_box_is_sufficient():
    rng = random.Random(5)
    big = Box.cube(2, 12)
    cfg = Configuration(2, 3, explicit={e: rng.choice((1, 3)) for e in big.edges()})
    for _ in range(20):
        x = (rng.randint(-3, 3), rng.randint(-3, 3))
        y = (rng.randint(-3, 3), rng.randint(-3, 3))
        assert passage_time(cfg, x, y)[0] == passage_time(cfg, x, y, big)[0]


def test_floyd_warshall_cross_check():
    rng = random.Random(2)
    shape = (3, 4)
    pts = grid_points(shape)
    weights = {}
    for x in pts:
        for i in range(2):
            if x[i] + 1 < shape[i]:
                weights[(x, x[:i] + (x[i] + 1,) + x[i + 1:])] = Fraction(rng.randint(1, 9), 2)
    cfg = config_from(weights)
    box = Box((0, 0), (2, 3))
    order, D = floyd_warshall(shape, weights)
    for i, x in enumerate(order):
        for j, y in enumerate(order):
            assert passage_time(cfg, x, y, box)[0] == D[i][j]


def test_hausdorff_examples():
    S = [(0, 0), (1, 2)]
    assert hausdorff_l1(S, S) == 0
    assert hausdorff_l1([(0, 0)], [(1, 0)]) == 1
    with pytest.raises(EmptySet):
        hausdorff_l1([], [(0, 0)])
    step = 0.05
    d = hausdorff_l1(sample_l1_ball(2, 1, step), sample_l1_ball(2, 2, step))
    assert abs(d - 1) <= 2 * step


point_sets = st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), min_size=1, max_size=12)


@given(point_sets, point_sets)
def test_hausdorff_symmetric_and_brute_force(S1, S2):
    def directed(a, b):
        return max(min(abs(p[0] - q[0]) + abs(p[1] - q[1]) for q in b) for p in a)

    h = hausdorff_l1(S1, S2)
    assert h == hausdorff_l1(S2, S1)
    assert h == max(directed(S1, S2), directed(S2, S1))
    assert (h == 0) == (set(S1) == set(S2))


def test_convergence_trace_constant_weights():
    K = sample_l1_ball(2, 1, Fraction(1, 40))
    trace = ball_convergence_trace(constant_config(2, 1), [5, 10, 20], K)
    assert [t for t, _ in trace] == [5, 10, 20]
    dists = [d for _, d in trace]
    assert dists[-1] <= 1 / 20 + 1 / 40 and dists == sorted(dists, reverse=True)
    K2 = sample_l1_ball(2, Fraction(1, 2), Fraction(1, 40))
    trace2 = ball_convergence_trace(constant_config(2, 2), [5, 10, 20], K2)
    assert trace2[-1][1] <= 1 / 20 + 1 / 40
    with pytest.raises(ValueError):
        ball_convergence_trace(constant_config(2, 1), [10, 5], K)


def test_rescaled_ball():
    snap = grow_ball(constant_config(2, 1), 2, Box.cube(2, 2))
    rb = RescaledBall.of(snap)
    assert rb.scale == 2
    assert np.allclose(np.asarray(rb.points, dtype=float) * 2, snap.points)
