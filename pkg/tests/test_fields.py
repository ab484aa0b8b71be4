import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percolab.errors import ConesOverlap, DomainExceeded, NoGridPath, PreconditionFailed, ScaleMismatch
from percolab.fields import (CostField, Polytope, alternate_field, boundary_net,
                             build_star_field, cone_and_grid_field, config_from_field,
                             constant_field, cross_polytope, field_distance, field_from_config,
                             in_KAd, path_integral, split_block, star_field, unit_ball)
from percolab.lattice import Box, Configuration, ValueSet
from percolab.scalar import grow_ball

A12 = (1, 2)
D1 = cross_polytope(2, 1)


@pytest.fixture(scope="module")
def star():
    return build_star_field(D1, A12, F(1, 4))


@pytest.fixture(scope="module")
def grid_field(star):
    return cone_and_grid_field(alternate_field(star, F(1, 4)), F(1, 16))


def test_in_KAd_examples():
    assert in_KAd(D1, A12)
    assert not in_KAd(cross_polytope(2, F(1, 4)), A12)
    s = F(7, 10)
    square = Polytope(((s, s), (-s, s), (-s, -s), (s, -s)))
    assert not in_KAd(square, A12)


def test_boundary_net_is_fine_enough():
    net = boundary_net(D1, F(1, 4))
    assert all(sum(abs(c) for c in p) == 1 for p in net)
    # every boundary point within eps of the net (sample the four edges)
    for k in range(41):
        s = F(k, 40)
        for p in [(s, 1 - s), (-s, 1 - s), (s, s - 1), (-s, s - 1)]:
            assert min(sum(abs(a - b) for a, b in zip(p, q)) for q in net) <= F(1, 4)


def test_star_field_examples(star):
    assert all(r.value == 1 for r in star.regions)
    assert star.eps_prime == F(1, 4) * (1 + 2 - 1) / 1 + F(1, 4)
    tip = star_field([(F(1), F(0))], A12, F(1, 4))
    assert tip.regions[0].value == 1
    far = star_field([(F(1, 2), F(0))], A12, F(1, 4))
    assert far.regions[0].value == 2
    for r in build_star_field(Polytope(((F(3, 4), 0), (0, F(9, 10)), (F(-4, 5), F(1, 5)), (0, F(-3, 4)))),
                              A12, F(1, 4)).regions:
        assert 1 <= r.value <= 2


def test_star_field_rejects_bad_input():
    with pytest.raises(PreconditionFailed):
        build_star_field(cross_polytope(2, F(1, 4)), A12, F(1, 4))
    with pytest.raises(PreconditionFailed):
        build_star_field(D1, A12, F(1, 2))


def test_split_block_examples():
    assert split_block(F(1, 4), 2, 1, 2) == (F(1, 4), 0)
    assert split_block(F(1, 4), 1, 1, 2) == (0, F(1, 4))
    assert split_block(F(1, 4), F(3, 2), 1, 2) == (F(1, 8), F(1, 8))


def test_alternating_blocks_conserve_integrals():
    f = star_field([(F(3, 4), F(0)), (F(0), F(5, 6))], A12, F(1, 4))
    g = alternate_field(f, F(1, 8))
    for r_old, r_new in zip(f.rays, g.rays):
        assert {v for _, _, v in r_new.profile} <= {1, 2}
        L = r_old.length
        # blocks tile the ray and each block length divides eps
        cuts = [k * F(1, 4) for k in range(int(L / F(1, 4)) + 1)] + [L]
        for c in cuts:
            assert r_old.integral(0, c) == r_new.integral(0, c)


def test_grid_paths_match_ray_integrals(grid_field):
    M = grid_field.grid_scale
    assert M >= 1 and len(grid_field.paths) == len(grid_field.rays)
    for ray, path in zip(grid_field.rays, grid_field.paths):
        eps = grid_field.eps
        assert path_integral(grid_field, path, M) == ray.integral(eps, ray.length)


def test_single_ray_grid_path_is_straight():
    f = star_field([(F(1), F(0))], A12, F(1, 4))
    g = cone_and_grid_field(alternate_field(f, F(1, 4)), F(1, 8))
    (path,) = g.paths
    assert all(p[1] == 0 for p in path)


def test_overlapping_cones_rejected():
    f = star_field([(F(1), F(0)), (F(7, 8), F(1, 8))], A12, F(1, 4))
    with pytest.raises(ConesOverlap):
        cone_and_grid_field(alternate_field(f, F(1, 8)), F(1, 4))


def test_bad_grid_scale_rejected(star):
    g = alternate_field(star, F(1, 4))
    with pytest.raises(NoGridPath):
        cone_and_grid_field(g, F(1, 16), M=3)


def test_field_distance_examples(star):
    c = constant_field(2, 3, radius=2)
    assert field_distance(c, (0, 0), (1, F(1, 2)), 2) == F(9, 2)
    for tip in [r.end for r in star.regions][:6]:
        assert field_distance(star, (0, 0), tip, 4) == 1
    with pytest.raises(DomainExceeded):
        field_distance(c, (0, 0), (3, 0), 2)


def test_field_distance_refinement_is_monotone(star):
    y = (F(3, 8), F(1, 4))
    vals = [field_distance(star, (0, 0), y, n) for n in (8, 16, 32)]
    assert vals == sorted(vals, reverse=True)
    # analytic upper bound: leave the ray only for the final l1 leg at sup A
    assert vals[-1] <= 2 * sum(abs(c) for c in y)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=3, max_size=3))
def test_field_metric_axioms(pts):
    f = star_field([(F(1), F(0)), (F(0), F(1)), (F(-1), F(0))], A12, F(1, 4))
    x, y, z = [tuple(F(c, 4) for c in p) for p in pts]
    if not all(f.in_domain(p) for p in (x, y, z)):
        return
    dxy = field_distance(f, x, y, 8)
    assert dxy == field_distance(f, y, x, 8)
    assert field_distance(f, x, x, 8) == 0
    assert field_distance(f, x, z, 8) <= dxy + field_distance(f, y, z, 8)


def test_unit_ball_examples(star):
    c = constant_field(2, 2, radius=1)
    ball = unit_ball(c, 4)
    assert np.all(np.abs(ball).sum(axis=1) <= 0.5 + 1e-12)
    assert len(ball) == 13
    B = unit_ball(star, 8)
    # star ball lies in K up to grid error and reaches the net points
    assert np.abs(B).sum(axis=1).max() <= 1 + 2 * 2 / 8
    tips = np.array([[float(c) for c in r.end] for r in star.regions])
    d = np.abs(B[:, None, :] - tips[None, :, :]).sum(axis=2).min(axis=0)
    assert d.max() <= 2 / 8


def test_unit_ball_radius_around_ray_point():
    # |x_j| = 1, sup A = 2, y on the ray at |y| = 1/2: an l1 ball of radius 1/4 around y is inside
    f = star_field([(F(1), F(0))], A12, F(1, 4))
    B = {tuple(p) for p in unit_ball(f, 16).tolist()}
    y = (0.5, 0.0)
    for dx in range(-4, 5):
        for dy in range(-4, 5):
            if abs(dx) + abs(dy) <= 4:
                assert (y[0] + dx / 16, y[1] + dy / 16) in B


def test_config_from_field_examples(grid_field):
    c = constant_field(2, 2, radius=1)
    cfg = config_from_field(c, 3, A12)
    assert cfg.distinct_values() == [2]
    cfg = config_from_field(grid_field, 1)
    vals = set(cfg.explicit.values())
    assert vals <= {1, 2} and 1 in vals and cfg.default == 2
    with pytest.raises(ScaleMismatch):
        config_from_field(grid_field, 0)


def test_field_from_config_examples():
    box = Box.cube(2, 3)
    cfg = Configuration(2, 1, value_set=ValueSet.finite([1, 2]), bounding_box=box)
    f = field_from_config(cfg, 3)
    assert f.value_at((F(1, 6), 0)) == 1
    assert f.value_at((F(1, 6), F(1, 6))) == 2
    rng = random.Random(1)
    t = 4
    box = Box.cube(2, t + 1)
    cfg = Configuration(2, 2, explicit={e: rng.choice(A12) for e in box.edges()},
                        value_set=ValueSet.finite([1, 2]), bounding_box=box)
    ball = {tuple(p) for p in unit_ball(field_from_config(cfg, t), t).tolist()}
    lattice = {tuple(c / t for c in p) for p in grow_ball(cfg, t, box).points.tolist()}
    assert lattice <= ball


def test_cost_field_json_round_trip(grid_field, star):
    for f in (star, grid_field):
        back = CostField.from_json(f.to_json())
        assert back.to_json() == f.to_json()
        for z in [(F(1, 3), F(1, 5)), (F(0), F(1, 2)), (F(-1, 7), F(0))]:
            assert back.value_at(z) == f.value_at(z)
