"""Brute-force reference implementations used to cross-check the library.

Nothing here imports the search code under test; each oracle enumerates
paths or walks directly.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np


def grid_points(shape):
    return list(itertools.product(*(range(n) for n in shape)))


def grid_edges(shape):
    out = []
    for x in grid_points(shape):
        for i, n in enumerate(shape):
            if x[i] + 1 < n:
                out.append((x, x[:i] + (x[i] + 1,) + x[i + 1:]))
    return out


def adjacency(shape):
    adj = {x: [] for x in grid_points(shape)}
    for a, b in grid_edges(shape):
        adj[a].append(b)
        adj[b].append(a)
    return adj


def key(a, b):
    return (a, b) if a <= b else (b, a)


def simple_path_minimum(shape, weight, x, y):
    """Minimum total weight over all self-avoiding x-y paths, by full enumeration."""
    adj = adjacency(shape)
    best = None
    stack = [(x, 0, frozenset([x]))]
    while stack:
        u, acc, seen = stack.pop()
        if u == y:
            best = acc if best is None or acc < best else best
            continue
        for v in adj[u]:
            if v not in seen:
                stack.append((v, acc + weight[key(u, v)], seen | {v}))
    return best


def floyd_warshall(shape, weight):
    """All-pairs distances by the textbook triple loop, exact for Fractions."""
    pts = grid_points(shape)
    idx = {p: i for i, p in enumerate(pts)}
    n = len(pts)
    inf = None
    D = [[inf] * n for _ in range(n)]
    for i in range(n):
        D[i][i] = 0
    for (a, b), w in weight.items():
        i, j = idx[a], idx[b]
        if D[i][j] is None or w < D[i][j]:
            D[i][j] = D[j][i] = w
    for k in range(n):
        Dk = D[k]
        for i in range(n):
            dik = D[i][k]
            if dik is None:
                continue
            Di = D[i]
            for j in range(n):
                if Dk[j] is None:
                    continue
                c = dik + Dk[j]
                if Di[j] is None or c < Di[j]:
                    Di[j] = c
    return pts, D


def walk_min_norms(shape, vector, source, cap):
    """Minimal Euclidean norm of the summed vector over every walk of length <= cap.

    Walks are expanded one step at a time without merging equal states, so
    the number of rows grows like the number of walks.
    """
    return walk_min_norms_adj(adjacency(shape), vector, source, cap)


def walk_min_norms_adj(adj, vector, source, cap):
    pts = sorted(adj)
    idx = {p: i for i, p in enumerate(pts)}
    k = len(next(iter(vector.values())))
    steps = [(idx[u], idx[v], vector[key(u, v)]) for u in pts for v in adj[u]]
    out_idx = {}
    for s, t, vec in steps:
        out_idx.setdefault(s, []).append((t, vec))
    verts = np.array([idx[source]])
    sums = np.zeros((1, k))
    best = np.full(len(pts), np.inf)
    best[idx[source]] = 0.0
    for _ in range(cap):
        nv, ns = [], []
        for s, lst in out_idx.items():
            sel = verts == s
            if not sel.any():
                continue
            base = sums[sel]
            for t, vec in lst:
                nv.append(np.full(len(base), t))
                ns.append(base + np.asarray(vec, dtype=float))
        verts = np.concatenate(nv)
        sums = np.concatenate(ns)
        norms = np.sqrt((sums ** 2).sum(axis=1))
        np.minimum.at(best, verts, norms)
    return {p: best[i] for p, i in idx.items()}


def random_weights(shape, values, rng: random.Random):
    return {e: rng.choice(values) for e in grid_edges(shape)}


def exact_norm_sq(v):
    return sum(Fraction(c) ** 2 for c in v)


def dirichlet_ok(r, p, q, Q):
    """The approximation bound checked directly in floating point."""
    k = len(r)
    bound = 1.0 / (q * Q ** (1.0 / k))
    return all(abs(pi / q - ri) < bound for pi, ri in zip(p, r))


def l1_ball_size(d, n):
    return sum(1 for x in itertools.product(range(-n, n + 1), repeat=d) if sum(map(abs, x)) <= n)
