"""Exact rational phase-one simplex (Bland's rule) for ``{x >= 0 : E x = f}``."""
from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence


def feasible_point(E: Sequence[Sequence], f: Sequence) -> Optional[List[Fraction]]:
    """A basic feasible solution of ``E x = f, x >= 0`` or None when infeasible.

    Basic solutions have at most ``rank(E)`` nonzero entries, which is what the
    Caratheodory-style decompositions rely on.
    """
    m = len(E)
    n = len(E[0]) if m else 0
    rows = []
    for i in range(m):
        row = [Fraction(c) for c in E[i]]
        rhs = Fraction(f[i])
        if rhs < 0:
            row = [-c for c in row]
            rhs = -rhs
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        rows.append(row + art + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m
    # reduced costs of the phase-one objective (sum of artificials)
    cost = [Fraction(0)] * (width + 1)
    for j in range(width + 1):
        if n <= j < width:
            continue
        cost[j] = -sum((r[j] for r in rows), Fraction(0))

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i, r in enumerate(rows):
            if r[enter] > 0:
                ratio = r[-1] / r[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # unbounded direction cannot occur in phase one
            break
        piv = rows[leave][enter]
        rows[leave] = [c / piv for c in rows[leave]]
        for i, r in enumerate(rows):
            if i != leave and r[enter] != 0:
                fac = r[enter]
                rows[i] = [a - fac * b for a, b in zip(r, rows[leave])]
        fac = cost[enter]
        cost = [a - fac * b for a, b in zip(cost, rows[leave])]
        basis[leave] = enter

    if -cost[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    return x
