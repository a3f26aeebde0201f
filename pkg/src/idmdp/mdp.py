"""Finite-state, finite-action MDPs and their dynamic-programming solution.

States and actions are labelled ``1..X`` and ``1..A`` in every public
output (policies, thresholds, reports). Arrays are stored 0-based:
``transitions[a - 1, x - 1, j - 1]`` is the probability of moving from
``x`` to ``j`` under action ``a`` and ``rewards[x - 1, a - 1]`` the
one-step reward (or cost, for ``objective="min"``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import (
    ConvergenceError,
    GuardExceededError,
    InvalidModelError,
    NumericalError,
)

ATOL = 1e-9
ROW_SUM_TOL = 1e-8
OBJECTIVES = ("max", "min")


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """A finite MDP.

    Parameters
    ----------
    transitions : array_like, shape (A, X, X)
        One row-stochastic matrix per action.
    rewards : array_like, shape (X, A)
        Rewards when ``objective="max"``, costs when ``objective="min"``.
    discount : float, optional
        Discount factor in (0, 1); required by the infinite-horizon solvers.
    terminal : array_like, shape (X,), optional
        Terminal reward (or cost); required by :func:`finite_horizon_dp`.
    objective : {"max", "min"}
    name : str
        Free-form label carried into reports and serialized documents.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: Optional[float] = None
    terminal: Optional[np.ndarray] = None
    objective: str = "max"
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.transitions, dtype=float)
        r = np.asarray(self.rewards, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise InvalidModelError(
                f"transitions must have shape (A, X, X), got {P.shape}")
        A, X, _ = P.shape
        if X < 1 or A < 1:
            raise InvalidModelError("need at least one state and one action")
        if r.shape != (X, A):
            raise InvalidModelError(
                f"rewards must have shape ({X}, {A}), got {r.shape}")
        if not np.all(np.isfinite(P)) or not np.all(np.isfinite(r)):
            raise InvalidModelError("transitions and rewards must be finite")
        bad = np.argwhere((P < -ROW_SUM_TOL) | (P > 1 + ROW_SUM_TOL))
        if bad.size:
            a, x, j = bad[0]
            raise InvalidModelError(
                f"P({a + 1})[{x + 1},{j + 1}] = {P[a, x, j]!r} outside [0, 1]")
        sums = P.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            a, x = bad[0]
            raise InvalidModelError(
                f"row {x + 1} of P({a + 1}) sums to {sums[a, x]!r}, not 1")
        if self.discount is not None:
            d = float(self.discount)
            if not 0.0 < d < 1.0:
                raise InvalidModelError(f"discount must lie in (0, 1), got {d}")
            object.__setattr__(self, "discount", d)
        if self.terminal is not None:
            t = np.asarray(self.terminal, dtype=float)
            if t.shape != (X,):
                raise InvalidModelError(
                    f"terminal must have length {X}, got shape {t.shape}")
            if not np.all(np.isfinite(t)):
                raise InvalidModelError("terminal must be finite")
            object.__setattr__(self, "terminal", _frozen(t))
        if self.objective not in OBJECTIVES:
            raise InvalidModelError(
                f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        object.__setattr__(self, "transitions", _frozen(np.clip(P, 0.0, 1.0)))
        object.__setattr__(self, "rewards", _frozen(r))

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def is_min(self) -> bool:
        return self.objective == "min"

    def utility(self) -> np.ndarray:
        """Rewards in maximization form (costs are negated)."""
        return -self.rewards if self.is_min else self.rewards

    def restrict(self, actions) -> "FiniteMdp":
        """Sub-MDP keeping only the given 1-based ``actions``."""
        idx = np.asarray(actions, dtype=int) - 1
        return replace(self, transitions=self.transitions[idx],
                       rewards=self.rewards[:, idx])

    def replace(self, **changes) -> "FiniteMdp":
        return replace(self, **changes)


@dataclass(frozen=True)
class FiniteHorizonSolution:
    """Per-stage output of backward induction.

    ``q[k]`` and ``policy[k]`` are stage ``k = 0..N-1``; ``values[k]`` runs
    over ``k = 0..N`` with ``values[N]`` the terminal vector.
    """

    q: np.ndarray
    values: np.ndarray
    policy: np.ndarray

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1


@dataclass(frozen=True)
class InfiniteHorizonSolution:
    q: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True)
class BruteForceResult:
    """Exhaustive search over stationary policies.

    ``policies`` lists every optimal policy (rows, 1-based actions) and
    ``values`` their value vectors; ``best`` is the pointwise optimum.
    """

    policies: np.ndarray
    values: np.ndarray
    best: np.ndarray
    num_evaluated: int

    def contains(self, policy) -> bool:
        p = np.asarray(policy, dtype=int)
        return bool(np.any(np.all(self.policies == p, axis=1)))


def _opt(q, objective):
    return q.min(axis=-1) if objective == "min" else q.max(axis=-1)


def greedy_policy(q, objective="max", tie_tol=ATOL):
    """Smallest action within ``tie_tol`` of the optimum in each row of ``q``."""
    q = np.asarray(q, dtype=float)
    score = -q if objective == "min" else q
    best = score.max(axis=-1, keepdims=True)
    return np.argmax(score >= best - tie_tol, axis=-1) + 1


def bellman_backup(mdp, v, discount=None):
    """``Q(x, a) = r(x, a) + discount * sum_j P_xj(a) v(j)``; shape (X, A)."""
    cont = (mdp.transitions @ np.asarray(v, dtype=float)).T
    if discount is not None:
        cont = discount * cont
    return mdp.rewards + cont


def finite_horizon_dp(mdp, horizon, discounted=None, tie_tol=ATOL):
    """Backward induction over ``horizon`` stages from the terminal vector.

    With ``discounted=None`` the expectation term is multiplied by the
    discount factor whenever the model carries one; pass ``False`` for the
    plain undiscounted recursion.
    """
    if mdp.terminal is None:
        raise InvalidModelError("finite-horizon DP needs a terminal vector")
    N = int(horizon)
    if N < 0:
        raise ValueError("horizon must be non-negative")
    if discounted is None:
        discounted = mdp.discount is not None
    if discounted and mdp.discount is None:
        raise InvalidModelError("discounted backup requested without a discount")
    rho = mdp.discount if discounted else None
    X, A = mdp.num_states, mdp.num_actions
    q = np.empty((N, X, A))
    values = np.empty((N + 1, X))
    policy = np.empty((N, X), dtype=int)
    values[N] = mdp.terminal
    for k in range(N - 1, -1, -1):
        q[k] = bellman_backup(mdp, values[k + 1], rho)
        values[k] = _opt(q[k], mdp.objective)
        policy[k] = greedy_policy(q[k], mdp.objective, tie_tol)
    return FiniteHorizonSolution(q=q, values=values, policy=policy)


def value_iteration(mdp, tol=1e-8, max_iter=100_000, tie_tol=ATOL, v0=None):
    """Discounted value iteration with the epsilon-optimal stopping rule.

    Iterates until ``||V_{n+1} - V_n|| <= tol * (1 - rho) / (2 * rho)``. The
    contraction bound between successive sweeps is checked on every sweep.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` sweeps do not reach the threshold, or if a sweep
        breaks the contraction bound.
    """
    if mdp.discount is None:
        raise InvalidModelError("value iteration needs a discount factor")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = mdp.discount
    threshold = tol * (1.0 - rho) / (2.0 * rho)
    v = np.zeros(mdp.num_states) if v0 is None else np.asarray(v0, float).copy()
    residuals = []
    prev = None
    for n in range(1, int(max_iter) + 1):
        v_new = _opt(bellman_backup(mdp, v, rho), mdp.objective)
        diff = float(np.max(np.abs(v_new - v)))
        # round-off slack scales with the magnitude of the iterate
        slack = 64 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(v_new))))
        if prev is not None and diff > rho * prev + slack:
            raise ConvergenceError(
                f"contraction violated at sweep {n}: {diff} > {rho} * {prev}",
                residual=diff, iterations=n)
        residuals.append(diff)
        prev = diff
        v = v_new
        if diff <= threshold:
            q = bellman_backup(mdp, v, rho)
            return InfiniteHorizonSolution(
                q=q, values=v, policy=greedy_policy(q, mdp.objective, tie_tol),
                iterations=n, residual=diff, residuals=np.array(residuals))
    raise ConvergenceError(
        f"value iteration did not converge in {max_iter} sweeps "
        f"(last residual {prev})", residual=prev, iterations=int(max_iter))


def _policy_system(mdp, policy):
    mu = np.asarray(policy, dtype=int) - 1
    if mu.shape != (mdp.num_states,):
        raise ValueError(f"policy must have length {mdp.num_states}")
    if mu.min() < 0 or mu.max() >= mdp.num_actions:
        raise ValueError("policy actions must lie in 1..A")
    rows = np.arange(mdp.num_states)
    return mdp.transitions[mu, rows], mdp.rewards[rows, mu]


def policy_evaluation(mdp, policy, residual_tol=1e-8):
    """Exact value of a stationary policy by a direct linear solve."""
    if mdp.discount is None:
        raise InvalidModelError("policy evaluation needs a discount factor")
    P_mu, r_mu = _policy_system(mdp, policy)
    M = np.eye(mdp.num_states) - mdp.discount * P_mu
    J = np.linalg.solve(M, r_mu)
    res = float(np.max(np.abs(M @ J - r_mu)))
    if res > residual_tol * (1.0 + float(np.max(np.abs(r_mu)))):
        raise NumericalError(f"policy evaluation residual {res}", residual=res)
    return J


def brute_force_optimal(mdp, size_guard=10**6, tol=ATOL, chunk=4096):
    """Evaluate all ``A**X`` stationary policies and return the optimal class.

    A policy is optimal when its value vector is within ``tol`` of the
    pointwise optimum in every state.
    """
    if mdp.discount is None:
        raise InvalidModelError("brute force needs a discount factor")
    X, A = mdp.num_states, mdp.num_actions
    count = A ** X
    if count > size_guard:
        raise GuardExceededError(
            f"{count} policies exceed the guard {size_guard}", required=count)
    rows = np.arange(X)
    eye = np.eye(X)
    all_pol = np.empty((count, X), dtype=int)
    all_val = np.empty((count, X))
    it = itertools.product(range(A), repeat=X)
    start = 0
    while start < count:
        batch = np.array(list(itertools.islice(it, chunk)), dtype=int)
        M = eye - mdp.discount * mdp.transitions[batch, rows]
        r = mdp.rewards[rows, batch]
        all_val[start:start + len(batch)] = np.linalg.solve(M, r[..., None])[..., 0]
        all_pol[start:start + len(batch)] = batch + 1
        start += len(batch)
    if mdp.is_min:
        best = all_val.min(axis=0)
        mask = np.all(all_val <= best + tol, axis=1)
    else:
        best = all_val.max(axis=0)
        mask = np.all(all_val >= best - tol, axis=1)
    return BruteForceResult(policies=all_pol[mask], values=all_val[mask],
                            best=best, num_evaluated=count)


def _select_row(q_row, prev, score_sign, tie_tol, decreasing):
    score = score_sign * q_row
    ok = np.flatnonzero(score >= score.max() - tie_tol) + 1
    if decreasing:
        ok = ok[ok <= prev][::-1]
    else:
        ok = ok[ok >= prev]
    return int(ok[0]) if ok.size else None


def extract_monotone_selection(q, tie_tol=ATOL, objective="max",
                               decreasing=False):
    """Monotone selection from the (near-)optimal action sets of ``q``.

    Sweeps ``x = 1..X`` taking the smallest near-optimal action not below
    the previous choice (largest not above it when ``decreasing``). Returns
    ``None`` when some state has no admissible action. A 3-d ``q`` is
    treated as a stack of stages and the sweep runs per stage.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim == 3:
        out = [extract_monotone_selection(qk, tie_tol, objective, decreasing)
               for qk in q]
        if any(p is None for p in out):
            return None
        return np.array(out, dtype=int).reshape(q.shape[:2])
    sign = -1.0 if objective == "min" else 1.0
    prev = q.shape[1] if decreasing else 1
    policy = np.empty(q.shape[0], dtype=int)
    for x in range(q.shape[0]):
        a = _select_row(q[x], prev, sign, tie_tol, decreasing)
        if a is None:
            return None
        policy[x] = prev = a
    return policy


def is_monotone(policy, decreasing=False):
    """True iff every stage of ``policy`` is non-decreasing in the state."""
    p = np.atleast_2d(np.asarray(policy))
    d = np.diff(p, axis=1)
    return bool(np.all(d <= 0) if decreasing else np.all(d >= 0))
