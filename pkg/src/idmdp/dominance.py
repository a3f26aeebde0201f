"""Stochastic orders on finite distributions and total-positivity checks.

Distributions are probability vectors over the ordered states ``1..X``.
All predicates compare cumulative sums with an absolute tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np
from numba import njit

from .exceptions import GuardExceededError
from .mdp import ATOL

ORDERS = ("first", "second", "convex")


def as_distribution(p, tol=1e-8):
    """Validate ``p`` as a probability vector and return it as an array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("a distribution must be a 1-d vector")
    if np.any(p < -tol) or np.any(p > 1 + tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {p}")
    return p


def _pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return p, q


def tail_sums(p):
    """``T[l] = sum_{j >= l} p_j`` along the last axis."""
    p = np.asarray(p, dtype=float)
    return np.flip(np.cumsum(np.flip(p, -1), axis=-1), -1)


def concave_cumulants(p):
    """``S[m] = sum_{l <= m} sum_{j <= l} p_j`` (second-order order)."""
    return np.cumsum(np.cumsum(np.asarray(p, dtype=float), axis=-1), axis=-1)


def convex_cumulants(p):
    """``C[m] = sum_{l >= m} sum_{j >= l} p_j`` (increasing-convex order)."""
    return tail_sums(tail_sums(p))


def order_statistic(p, order):
    """Cumulative statistic for ``order`` oriented so that larger is better.

    For every order, ``p`` dominates ``q`` iff ``stat(p) >= stat(q)``
    entrywise; the second-order cumulants are negated to achieve this.
    """
    if order == "first":
        return tail_sums(p)
    if order == "second":
        return -concave_cumulants(p)
    if order == "convex":
        return convex_cumulants(p)
    raise ValueError(f"order must be one of {ORDERS}, got {order!r}")


def first_order_dominates(p, q, tol=ATOL):
    """True iff ``p`` first-order stochastically dominates ``q``."""
    p, q = _pair(p, q)
    return bool(np.all(tail_sums(p) >= tail_sums(q) - tol))


def second_order_dominates(p, q, tol=ATOL):
    """True iff ``f'p >= f'q`` for every increasing concave ``f``."""
    p, q = _pair(p, q)
    return bool(np.all(concave_cumulants(p) <= concave_cumulants(q) + tol))


def convex_dominates(p, q, tol=ATOL):
    """True iff ``f'p >= f'q`` for every increasing convex ``f``."""
    p, q = _pair(p, q)
    return bool(np.all(convex_cumulants(p) >= convex_cumulants(q) - tol))


_PREDICATES = {
    "first": first_order_dominates,
    "second": second_order_dominates,
    "convex": convex_dominates,
}


def dominates(p, q, order="first", tol=ATOL):
    try:
        pred = _PREDICATES[order]
    except KeyError:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}") from None
    return pred(p, q, tol)


def mixture_dominates(p_hi_next, p_lo, p_hi, p_lo_next, alpha, order="first",
                      tol=ATOL):
    """Compare the two alpha-mixtures used by the interval-dominance test.

    Checks ``(p_hi_next + alpha p_lo) / (1 + alpha)`` against
    ``(p_hi + alpha p_lo_next) / (1 + alpha)`` under ``order``, where
    ``p_hi*`` are rows of the higher state and ``*_next`` rows of the next
    action.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    left = (np.asarray(p_hi_next, float) + alpha * np.asarray(p_lo, float)) / (1 + alpha)
    right = (np.asarray(p_hi, float) + alpha * np.asarray(p_lo_next, float)) / (1 + alpha)
    return dominates(left, right, order, tol)


# --- integer-sequence shape tests -------------------------------------------

def is_nondecreasing(v, tol=ATOL):
    return bool(np.all(np.diff(np.asarray(v, float)) >= -tol))


def is_nonincreasing(v, tol=ATOL):
    return bool(np.all(np.diff(np.asarray(v, float)) <= tol))


def is_concave(v, tol=ATOL):
    """Integer concavity: ``v(x+1) - v(x) <= v(x) - v(x-1)`` within ``tol``."""
    return bool(np.all(np.diff(np.asarray(v, float), 2) <= tol))


def is_convex(v, tol=ATOL):
    return bool(np.all(np.diff(np.asarray(v, float), 2) >= -tol))


@dataclass(frozen=True)
class MeanProfile:
    mean: np.ndarray
    increasing: bool
    decreasing: bool
    concave: bool
    convex: bool


def conditional_mean_profile(matrix, tol=ATOL):
    """Row means ``m_i = sum_j j P_ij`` (1-based ``j``) and their shape flags."""
    P = np.asarray(matrix, dtype=float)
    m = P @ np.arange(1, P.shape[1] + 1)
    return MeanProfile(mean=m, increasing=is_nondecreasing(m, tol),
                       decreasing=is_nonincreasing(m, tol),
                       concave=is_concave(m, tol), convex=is_convex(m, tol))


# --- total positivity --------------------------------------------------------

@dataclass(frozen=True)
class TotalPositivityResult:
    """Outcome of a TP_k check.

    On failure ``rows``/``cols`` are the 1-based index sets of the most
    negative minor found and ``minor`` its value.
    """

    holds: bool
    order: int
    minors_checked: int
    sampled: bool = False
    rows: Optional[tuple] = None
    cols: Optional[tuple] = None
    minor: Optional[float] = None

    def __bool__(self):
        return self.holds


def count_minors(shape, order):
    n, m = shape
    return sum(comb(n, k) * comb(m, k) for k in range(1, order + 1))


@njit(cache=True)
def _min_minor(M, k):
    """Most negative k x k minor of ``M`` by exhaustive enumeration.

    Returns ``(value, r0, r1, r2, c0, c1, c2, count)``; unused indices are -1.
    """
    n, m = M.shape
    best = np.inf
    br = (-1, -1, -1)
    bc = (-1, -1, -1)
    count = 0
    if k == 1:
        for i in range(n):
            for j in range(m):
                count += 1
                if M[i, j] < best:
                    best = M[i, j]
                    br = (i, -1, -1)
                    bc = (j, -1, -1)
    elif k == 2:
        for i0 in range(n):
            for i1 in range(i0 + 1, n):
                for j0 in range(m):
                    for j1 in range(j0 + 1, m):
                        count += 1
                        d = M[i0, j0] * M[i1, j1] - M[i0, j1] * M[i1, j0]
                        if d < best:
                            best = d
                            br = (i0, i1, -1)
                            bc = (j0, j1, -1)
    else:
        minors = np.empty((m, m))
        for i0 in range(n):
            for i1 in range(i0 + 1, n):
                for i2 in range(i1 + 1, n):
                    # 2x2 minors of rows (i1, i2) over column pairs
                    for j0 in range(m):
                        for j1 in range(j0 + 1, m):
                            minors[j0, j1] = (M[i1, j0] * M[i2, j1]
                                              - M[i1, j1] * M[i2, j0])
                    for j0 in range(m):
                        for j1 in range(j0 + 1, m):
                            for j2 in range(j1 + 1, m):
                                count += 1
                                d = (M[i0, j0] * minors[j1, j2]
                                     - M[i0, j1] * minors[j0, j2]
                                     + M[i0, j2] * minors[j0, j1])
                                if d < best:
                                    best = d
                                    br = (i0, i1, i2)
                                    bc = (j0, j1, j2)
    return best, br[0], br[1], br[2], bc[0], bc[1], bc[2], count


def _sampled_dets(M, rows, cols):
    # paired rows[i] with cols[i]; shapes (S, k)
    sub = M[rows[:, :, None], cols[:, None, :]]
    return np.linalg.det(sub)


def is_totally_positive(matrix, order=2, tol=ATOL, size_guard=10**9,
                        sample=None, seed=None):
    """Check that every k x k minor (k <= ``order``) is at least ``-tol``.

    All minors are enumerated exactly unless their number exceeds
    ``size_guard``; in that case ``sample`` (a count of random minors per
    order) must be given, otherwise :class:`GuardExceededError` is raised.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise ValueError("matrix must be 2-d")
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    n, m = M.shape
    total = count_minors(M.shape, order)
    sampled = total > size_guard
    if sampled and sample is None:
        raise GuardExceededError(
            f"{total} minors exceed the guard {size_guard}; pass sample=",
            required=total)
    worst = (np.inf, None, None)
    checked = 0
    rng = np.random.default_rng(seed)
    for k in range(1, min(order, n, m) + 1):
        if sampled:
            rows = np.sort(np.array([rng.choice(n, k, replace=False)
                                     for _ in range(sample)]), axis=1)
            cols = np.sort(np.array([rng.choice(m, k, replace=False)
                                     for _ in range(sample)]), axis=1)
            d = _sampled_dets(M, rows, cols)
            checked += d.size
            i = int(np.argmin(d))
            if d[i] < worst[0]:
                worst = (float(d[i]), rows[i], cols[i])
            continue
        value, *idx, count = _min_minor(np.ascontiguousarray(M), k)
        checked += count
        if value < worst[0]:
            worst = (float(value), np.array(idx[:k]), np.array(idx[3:3 + k]))
    value, r, c = worst
    if value >= -tol:
        return TotalPositivityResult(True, order, checked, sampled)
    return TotalPositivityResult(
        False, order, checked, sampled,
        rows=tuple(int(i) + 1 for i in r), cols=tuple(int(j) + 1 for j in c),
        minor=value)
