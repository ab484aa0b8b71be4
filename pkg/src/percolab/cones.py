"""Convex cones generated by finite vector sets, the even monoid M(A), and
simultaneous Dirichlet approximation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import DimensionMismatch, NoApproximant, NotInCone
from .numeric import TOL_CONE, all_exact, dot, norm, sqnorm, to_number
from .simplex import feasible_point


def as_vectors(A: Iterable) -> tuple:
    """Deduplicated tuple of vectors, keeping first-seen order."""
    out = []
    for a in A:
        a = tuple(to_number(c) for c in a)
        if a not in out:
            out.append(a)
    if not out:
        raise ValueError("empty vector set")
    k = len(out[0])
    if any(len(a) != k for a in out):
        raise DimensionMismatch("vectors of different lengths")
    return tuple(out)


@dataclass(frozen=True)
class ConeCertificate:
    """Witness for membership (coefficients) or non-membership (separating functional)."""

    member: bool
    vector: tuple
    generators: tuple
    coefficients: Optional[tuple] = None
    separator: Optional[tuple] = None
    exact: bool = False

    def verify(self, tol: float = TOL_CONE) -> bool:
        if self.member:
            if self.coefficients is None or self.separator is not None:
                return False
            if any(c < 0 for c in self.coefficients):
                return False
            k = len(self.vector)
            resid = [
                sum(c * a[j] for c, a in zip(self.coefficients, self.generators)) - self.vector[j]
                for j in range(k)
            ]
            if self.exact:
                return all(r == 0 for r in resid)
            return math.sqrt(sum(float(r) ** 2 for r in resid)) <= tol
        if self.separator is None or self.coefficients is not None:
            return False
        w = self.separator
        if self.exact:
            return all(dot(w, a) >= 0 for a in self.generators) and dot(w, self.vector) < 0
        return all(dot(w, a) >= -tol for a in self.generators) and dot(w, self.vector) < -tol

    def to_json(self) -> dict:
        from .numeric import json_number

        out = {"member": self.member, "vector": json_number(self.vector),
               "generators": json_number(self.generators)}
        if self.member:
            out["coefficients"] = json_number(self.coefficients)
        else:
            out["separator"] = json_number(self.separator)
        return out


def _exact_in_cone(v, A) -> ConeCertificate:
    k = len(v)
    E = [[a[j] for a in A] for j in range(k)]
    lam = feasible_point(E, v)
    if lam is not None:
        return ConeCertificate(True, v, A, coefficients=tuple(_clean(c) for c in lam), exact=True)
    # Farkas: find w with (w, a_i) >= 0 and (w, v) = -1; w = w+ - w-, slacks s_i.
    n = len(A)
    rows = []
    for i, a in enumerate(A):
        rows.append(list(a) + [-c for c in a] + [-1 if i == j else 0 for j in range(n)])
    rows.append(list(v) + [-c for c in v] + [0] * n)
    rhs = [0] * n + [-1]
    sol = feasible_point(rows, rhs)
    if sol is None:  # pragma: no cover - Farkas alternative guarantees a solution
        raise RuntimeError("neither membership nor separator found")
    w = tuple(_clean(sol[j] - sol[k + j]) for j in range(k))
    return ConeCertificate(False, v, A, separator=w, exact=True)


def _clean(c):
    c = Fraction(c)
    return c.numerator if c.denominator == 1 else c


def _float_in_cone(v, A, tol) -> ConeCertificate:
    M = np.array(A, dtype=float).T
    b = np.array(v, dtype=float)
    lam, resid = nnls(M, b)
    if resid <= tol:
        return ConeCertificate(True, v, A, coefficients=tuple(float(c) for c in lam))
    k = len(v)
    res = linprog(c=b, A_ub=-M.T, b_ub=np.zeros(M.shape[1]), bounds=[(-1, 1)] * k, method="highs")
    if res.status == 0 and res.fun < -tol:
        return ConeCertificate(False, v, A, separator=tuple(float(c) for c in res.x))
    # borderline: the distance to the cone is below anything the separator can certify
    return ConeCertificate(True, v, A, coefficients=tuple(float(c) for c in lam))


def in_cone(v: Sequence, A: Iterable, tol: float = TOL_CONE) -> ConeCertificate:
    """Decide ``v in cone(A)`` with a checkable certificate.

    Rational input is solved exactly by rational pivoting; floating input by
    nonnegative least squares plus a separator LP.
    """
    A = as_vectors(A)
    v = tuple(to_number(c) for c in v)
    if len(v) != len(A[0]):
        raise DimensionMismatch("vector and generators differ in length")
    if all_exact(A) and all_exact(v):
        return _exact_in_cone(v, A)
    return _float_in_cone(v, A, tol)


def is_strongly_positively_dependent(A: Iterable) -> bool:
    A = as_vectors(A)
    return all(in_cone(tuple(-c for c in a), A).member for a in A)


def rank(A: Sequence) -> int:
    """Rank of the vectors, exact for rational input."""
    A = as_vectors(A)
    if not all_exact(A):
        return int(np.linalg.matrix_rank(np.array(A, dtype=float), tol=TOL_CONE))
    rows = [[Fraction(c) for c in a] for a in A]
    r = 0
    ncols = len(rows[0])
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def conv_contains_origin_interior(A: Iterable) -> bool:
    """0 is interior to conv(A) iff A spans R^k and ``-sum(A)`` lies in cone(A).

    The second condition says 0 is a combination with every coefficient at
    least 1, i.e. a strictly positive convex combination after scaling.
    """
    A = as_vectors(A)
    if rank(A) < len(A[0]):
        return False
    s = tuple(-sum(a[j] for a in A) for j in range(len(A[0])))
    return in_cone(s, A).member


def is_positive(A: Iterable, tol: float = TOL_CONE) -> bool:
    A = as_vectors(A)
    exact = all_exact(A)
    for a, b in itertools.combinations_with_replacement(A, 2):
        p = dot(a, b)
        if (p < 0) if exact else (p < -tol):
            return False
    return True


def is_ray_contained(A: Iterable, tol: float = TOL_CONE) -> bool:
    A = as_vectors(A)
    nonzero = [a for a in A if any(c != 0 for c in a)]
    if not nonzero:
        return True
    ref = nonzero[0]
    exact = all_exact(A)
    for a in nonzero[1:]:
        p = dot(a, ref)
        if exact:
            if p <= 0 or p * p != sqnorm(a) * sqnorm(ref):
                return False
        elif p <= 0 or abs(p - norm(a) * norm(ref)) > tol * max(1.0, norm(a) * norm(ref)):
            return False
    return True


def _count_vectors(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _count_vectors(n - 1, total - first):
            yield (first,) + rest


def combination(counts: Sequence[int], A: Sequence) -> tuple:
    k = len(A[0])
    return tuple(sum((c * a[j] for c, a in zip(counts, A) if c), 0) for j in range(k))


def monoid_elements(A: Iterable, max_total: int) -> set:
    """Truncated M(A): sums ``sum n_i a_i`` with an even total ``sum n_i <= max_total``."""
    if max_total < 0 or max_total % 2:
        raise ValueError("max_total must be an even nonnegative integer")
    A = as_vectors(A)
    out = set()
    for total in range(0, max_total + 1, 2):
        for counts in _count_vectors(len(A), total):
            out.add(combination(counts, A))
    return out


def monoid_decompositions(A: Iterable, max_total: int) -> Dict[tuple, tuple]:
    """Map each truncated M(A) element to one count vector producing it (smallest total first)."""
    A = as_vectors(A)
    out: Dict[tuple, tuple] = {}
    for total in range(0, max_total + 1, 2):
        for counts in _count_vectors(len(A), total):
            out.setdefault(combination(counts, A), counts)
    return out


def min_norm_odd_target(A: Iterable, max_total: int) -> float:
    """``min |m + a|`` over m in truncated M(A) and a in A."""
    A = as_vectors(A)
    best = min(sqnorm(tuple(x + y for x, y in zip(m, a)))
               for m in monoid_elements(A, max_total) for a in A)
    return math.sqrt(best)


def caratheodory_decompose(v: Sequence, A: Iterable, tol: float = TOL_CONE) -> Dict[tuple, object]:
    """Nonnegative coefficients on at most ``k`` generators reproducing ``v``."""
    A = as_vectors(A)
    cert = in_cone(v, A, tol)
    if not cert.member:
        raise NotInCone(f"{tuple(v)} is not in the cone")
    lam = list(cert.coefficients)
    if not cert.exact:
        lam = _reduce_support(np.array(A, dtype=float).T, np.array(lam, dtype=float), tol)
    return {a: c for a, c in zip(A, lam) if c != 0}


def _reduce_support(M: np.ndarray, lam: np.ndarray, tol: float) -> list:
    lam = lam.copy()
    lam[lam < tol * 1e-3] = 0.0
    while True:
        supp = np.flatnonzero(lam > 0)
        if len(supp) == 0:
            break
        sub = M[:, supp]
        if np.linalg.matrix_rank(sub, tol=1e-10) == len(supp):
            break
        _, _, vt = np.linalg.svd(sub)
        z = vt[-1]
        if not (z > 1e-14).any():
            z = -z
        pos = z > 1e-14
        ratios = lam[supp][pos] / z[pos]
        t = ratios.min()
        lam[supp] = lam[supp] - t * z
        lam[supp[pos][np.argmin(ratios)]] = 0.0
        lam[np.abs(lam) < 1e-15] = 0.0
        lam[lam < 0] = 0.0
    return [float(c) for c in lam]


# --- Dirichlet --------------------------------------------------------------


def dirichlet_bound_holds(r: Sequence, p: Sequence[int], q: int, Q: int) -> bool:
    """Exact test of ``|p_i/q - r_i| < 1/(q Q^(1/k))`` as ``|p_i - q r_i|^k * Q < 1``."""
    k = len(r)
    for ri, pi in zip(r, p):
        err = abs(Fraction(pi) - q * Fraction(ri))
        if err ** k * Q >= 1:
            return False
    return True


def dirichlet_approx(r: Sequence, Q: int):
    """Scan ``q = 1..Q`` with ``p_i = round(q r_i)`` (clamped at 0) until the bound holds."""
    if Q < 1:
        raise ValueError("Q must be at least 1")
    if any(x < 0 for x in r):
        raise ValueError("entries must be nonnegative")
    for q in range(1, Q + 1):
        p = [max(0, round(q * Fraction(x))) for x in r]
        if dirichlet_bound_holds(r, p, q, Q):
            return p, q
    raise NoApproximant(f"no q <= {Q} satisfies the bound for {list(r)}")


def dirichlet_Q(eps, generator_norm_sum, k: int) -> int:
    """Smallest Q with ``eps/4 + 2 Q^(-1/k) S < eps/3``."""
    eps = float(eps)
    S = float(generator_norm_sum)
    if S == 0:
        return 1

    def ok(Q):
        return eps / 4 + 2 * Q ** (-1.0 / k) * S < eps / 3

    Q = max(1, math.floor((24 * S / eps) ** k))
    while Q > 1 and ok(Q - 1):
        Q -= 1
    while not ok(Q):
        Q += 1
    return Q
