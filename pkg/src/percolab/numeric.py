"""Exact-or-float arithmetic helpers.

Values that arrive as ``int`` or ``Fraction`` stay exact; anything else is
treated as a double and compared with ``TOL_CMP``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

TOL_CMP = 1e-9
TOL_CONE = 1e-7


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def all_exact(values: Iterable) -> bool:
    for v in values:
        if isinstance(v, (tuple, list)):
            if not all_exact(v):
                return False
        elif not is_exact(v):
            return False
    return True


def to_number(x):
    """Normalise a scalar: ints and Fractions stay exact, strings like "3/4" parse exactly."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        return to_number(Fraction(x))
    if isinstance(x, Rational):
        return to_number(Fraction(x.numerator, x.denominator))
    return float(x)


def close(a, b, tol: float = TOL_CMP) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= tol


def leq(a, b, tol: float = TOL_CMP) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return a <= b + tol


def less(a, b, tol: float = TOL_CMP) -> bool:
    """Strict comparison that ignores float noise below ``tol``."""
    if is_exact(a) and is_exact(b):
        return a < b
    return a < b - tol


def vadd(u: Sequence, v: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(u, v))


def vsub(u: Sequence, v: Sequence) -> tuple:
    return tuple(x - y for x, y in zip(u, v))


def vscale(c, v: Sequence) -> tuple:
    return tuple(c * x for x in v)


def dot(u: Sequence, v: Sequence):
    return sum((x * y for x, y in zip(u, v)), 0)


def sqnorm(v: Sequence):
    return dot(v, v)


def norm(v: Sequence) -> float:
    return math.sqrt(sqnorm(v))


def l1(v: Sequence):
    return sum((abs(x) for x in v), 0)


def fmt(x) -> str:
    """Pinned text form used in CSV/JSON output."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def lcm_of_denominators(values: Iterable) -> int:
    out = 1
    for v in values:
        if isinstance(v, Fraction):
            out = math.lcm(out, v.denominator)
    return out


def json_number(x):
    """JSON-safe form: ints stay ints, Fractions become "p/q" strings, floats stay floats."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    if isinstance(x, (tuple, list)):
        return [json_number(v) for v in x]
    if isinstance(x, dict):
        return {str(k): json_number(v) for k, v in x.items()}
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):  # numpy scalars
        return x.item()
    return x
