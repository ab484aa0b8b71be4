import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import nnls

from oracles import dirichlet_ok
from percolab.cones import (caratheodory_decompose, conv_contains_origin_interior,
                            dirichlet_approx, dirichlet_bound_holds, dirichlet_Q, in_cone,
                            is_positive, is_ray_contained, is_strongly_positively_dependent,
                            min_norm_odd_target, monoid_elements)
from percolab.errors import DimensionMismatch, NotInCone

E2 = [(1, 0), (0, 1)]
CROSS = [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_in_cone_examples():
    c = in_cone((1, 1), E2)
    assert c.member and c.coefficients == (1, 1) and c.verify()
    c = in_cone((-1, 0), E2)
    assert not c.member and c.verify()
    w = c.separator
    assert w[0] > 0 and w[1] >= 0
    c = in_cone((-1, -1), [(1, 0), (0, 1), (-1, -1)])
    assert c.member and c.verify()
    with pytest.raises(DimensionMismatch):
        in_cone((1, 0, 0), E2)


def _rand_vec(rng, k, exact):
    if exact:
        return tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(k))
    return tuple(rng.uniform(-1, 1) for _ in range(k))


def test_exact_and_float_routes_agree():
    rng = random.Random(21)
    for _ in range(150):
        k = rng.randint(1, 4)
        A = [_rand_vec(rng, k, True) for _ in range(rng.randint(1, 5))]
        A = [a for a in dict.fromkeys(A)]
        v = _rand_vec(rng, k, True)
        exact = in_cone(v, A)
        approx = in_cone(tuple(map(float, v)), [tuple(map(float, a)) for a in A])
        assert exact.exact and exact.verify() and approx.verify()
        assert exact.member == approx.member
        # independent check of the decision with a least-squares residual
        _, resid = nnls(np.array(A, dtype=float).T, np.array(v, dtype=float))
        assert exact.member == (resid < 1e-9)


def test_spd_examples():
    assert is_strongly_positively_dependent([(1, 0), (-1, 0)])
    assert is_strongly_positively_dependent(CROSS)
    assert not is_strongly_positively_dependent([(1, 0)])


def test_origin_interior_examples():
    assert conv_contains_origin_interior(CROSS)
    assert not conv_contains_origin_interior(E2)
    assert not conv_contains_origin_interior([(1, 0), (-1, 0)])
    rng = random.Random(8)
    for _ in range(50):
        P = [tuple(c + rng.uniform(-0.1, 0.1) for c in a) for a in CROSS]
        assert conv_contains_origin_interior(P)


def test_positive_and_ray_examples():
    assert is_positive(E2)
    assert not is_positive([(1, 0), (-1, 0)])
    assert is_positive([(1, 0), (0, 2), (1, 1)])
    assert is_ray_contained([(1, 0), (2, 0), (0, 0)])
    assert not is_ray_contained(E2)
    assert is_ray_contained([(1, 1), (2, 2), (3, 3)])
    assert not is_ray_contained([(1, 1), (-1, -1)])


@given(st.lists(st.fractions(Fraction(1, 10), 5), min_size=1, max_size=5),
       st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
def test_ray_contained_implies_positive(scales, direction):
    A = [tuple(s * c for c in direction) for s in scales]
    assert is_ray_contained(A)
    assert is_positive(A)


def test_monoid_examples():
    assert monoid_elements(E2, 2) == {(0, 0), (2, 0), (1, 1), (0, 2)}
    assert monoid_elements([(3, 1)], 4) == {(0, 0), (6, 2), (12, 4)}
    assert monoid_elements([(1, 0), (-1, 0)], 2) == {(-2, 0), (0, 0), (2, 0)}
    with pytest.raises(ValueError):
        monoid_elements(E2, 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=3, unique=True),
       st.sampled_from([0, 2, 4]))
def test_monoid_nested_and_in_cone(A, m):
    small, big = monoid_elements(A, m), monoid_elements(A, m + 2)
    assert small <= big
    for v in big:
        assert in_cone(v, A).member
    # brute force: all count vectors with even total
    brute = set()
    for counts in itertools.product(range(m + 3), repeat=len(A)):
        if sum(counts) % 2 == 0 and sum(counts) <= m + 2:
            brute.add(tuple(sum(c * a[j] for c, a in zip(counts, A)) for j in range(2)))
    assert big == brute


def test_dirichlet_examples():
    assert dirichlet_approx([Fraction(1, 2)], 10) == ([1], 2)
    assert dirichlet_approx([Fraction(1, 3), Fraction(1, 3)], 9) == ([1, 1], 3)
    p, q = dirichlet_approx([math.pi - 3], 10)
    assert (p, q) == ([1], 7) and abs(1 / 7 - (math.pi - 3)) < 1 / 70
    # brute-force scan agrees
    scan = next(q for q in range(1, 11) if abs(round(q * (math.pi - 3)) / q - (math.pi - 3)) < 1 / (q * 10))
    assert scan == 7


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=3), st.integers(1, 30))
def test_dirichlet_bound_always_holds(r, Q):
    p, q = dirichlet_approx(r, Q)
    assert 1 <= q <= Q and all(x >= 0 for x in p)
    assert dirichlet_bound_holds(r, p, q, Q)
    assert dirichlet_ok(r, p, q, Q)


def test_dirichlet_Q_minimal():
    for eps, S, k in [(0.5, 2.0, 1), (0.1, 1.0, 2), (1.0, 3.5, 3)]:
        Q = dirichlet_Q(eps, S, k)
        assert eps / 4 + 2 * Q ** (-1 / k) * S < eps / 3
        assert Q == 1 or not eps / 4 + 2 * (Q - 1) ** (-1 / k) * S < eps / 3


def test_caratheodory_examples():
    A = [(1, 0), (0, 1), (1, 1)]
    assert caratheodory_decompose((2, 0), A) == {(1, 0): 2}
    dec = caratheodory_decompose((1, 1), A)
    assert len(dec) <= 2
    assert tuple(sum(c * a[j] for a, c in dec.items()) for j in range(2)) == (1, 1)
    with pytest.raises(NotInCone):
        caratheodory_decompose((-1, 0), A)


def test_caratheodory_random_support():
    rng = random.Random(13)
    for exact in (True, False):
        for _ in range(100):
            A = [_rand_vec(rng, 3, exact) for _ in range(rng.randint(3, 7))]
            lam = [rng.uniform(0, 2) if not exact else Fraction(rng.randint(0, 5), 2) for _ in A]
            v = tuple(sum(l * a[j] for l, a in zip(lam, A)) for j in range(3))
            dec = caratheodory_decompose(v, A)
            assert len(dec) <= 3 and all(c >= 0 for c in dec.values())
            back = [sum(c * a[j] for a, c in dec.items()) for j in range(3)]
            if exact:
                assert tuple(back) == v
            else:
                assert np.linalg.norm(np.array(back, dtype=float) - np.array(v, dtype=float)) < 1e-7


def test_min_norm_odd_target_examples():
    assert min_norm_odd_target([(1, 0), (-1, 0)], 2) == 1
    assert min_norm_odd_target([(1, 0)], 4) == 1
    assert min_norm_odd_target([(2, 0), (-1, 0)], 4) == 0
    # exhaustive cross-check
    A = [(2, 1), (-1, 0), (0, -1)]
    best = min(math.hypot(*[sum(c * a[j] for c, a in zip(counts, A)) for j in range(2)])
               for counts in itertools.product(range(6), repeat=3) if sum(counts) % 2 == 1 and sum(counts) <= 5)
    assert abs(min_norm_odd_target(A, 4) - best) < 1e-12
