"""Sufficient conditions for monotone optimal policies.

The central object is the interval-dominance (ID) inequality between
adjacent actions ``a`` and ``a + 1`` at states ``x < xbar``::

    phi(xbar, a+1) - phi(xbar, a) >= gamma * (phi(x, a+1) - phi(x, a))

with ``gamma > 0`` non-decreasing in ``a``. For a table ``phi`` (rewards,
costs, or a cumulative transition statistic) every inequality is linear in
``gamma``, so the admissible coefficients for an index ``(x, xbar, a)``
form an interval. The checkers below compute those intervals, intersect
them, and look for a common non-decreasing schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dominance import (
    conditional_mean_profile,
    dominates,
    is_concave,
    is_nondecreasing,
    is_nonincreasing,
    is_totally_positive,
    order_statistic,
    tail_sums,
)
from .mdp import ATOL

PASS, FAIL, NA = "pass", "fail", "not-applicable"
ALPHA_FLOOR = 1e-12
ZERO_TOL = 1e-12
CERTIFIED = "MONOTONE-CERTIFIED"
NOT_CERTIFIED = "NOT-CERTIFIED"


def _idx(*ix):
    """Convert 0-based indices to the 1-based labels used in witnesses."""
    return tuple(int(i) + 1 for i in ix)


@dataclass
class ConditionResult:
    name: str
    verdict: str
    witness: Optional[dict] = None
    detail: str = ""
    informational: bool = False

    def __post_init__(self):
        if self.verdict == FAIL and self.witness is None:
            raise ValueError(f"{self.name}: a failing verdict needs a witness")
        if self.witness is not None:
            self.witness = _jsonable(self.witness)

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        out = {"name": self.name, "verdict": self.verdict}
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        if self.informational:
            out["informational"] = True
        return out


@dataclass
class ConditionReport:
    """Aggregate of condition verdicts for one theorem or corollary."""

    theorem: str
    conditions: list = field(default_factory=list)
    schedule: Optional["CoefficientSchedule"] = None
    direction: str = "increasing"
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def certified(self):
        return all(c.passed for c in self.conditions if not c.informational)

    @property
    def verdict(self):
        return CERTIFIED if self.certified else NOT_CERTIFIED

    def first_failure(self):
        for c in self.conditions:
            if not c.informational and not c.passed:
                return c
        return None

    def to_dict(self):
        out = {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "policy_direction": self.direction,
            "conditions": [c.to_dict() for c in self.conditions],
        }
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        if self.extra:
            out["extra"] = _jsonable(self.extra)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- textbook conditions -----------------------------------------------------

def _first_drop(table, tol):
    """First (x, col) where ``table`` decreases in x, else None."""
    d = np.diff(table, axis=0)
    bad = np.argwhere(d < -tol)
    return None if bad.size == 0 else tuple(bad[0])


def check_a1(mdp, tol=ATOL):
    """Rewards non-decreasing in the state for each action.

    For cost models the rewards are the negated costs, so costs must be
    non-increasing.
    """
    u = mdp.utility()
    hit = _first_drop(u, tol)
    if hit is None:
        return ConditionResult("A1", PASS)
    x, a = hit
    return ConditionResult("A1", FAIL, {
        "action": a + 1, "x": x + 1, "xbar": x + 2,
        "value_x": mdp.rewards[x, a], "value_xbar": mdp.rewards[x + 1, a]})


def check_a2(mdp, tol=ATOL):
    """Rows first-order increasing in the state for each action."""
    T = tail_sums(mdp.transitions)          # (A, X, L)
    d = np.diff(T, axis=1)                  # (A, X-1, L)
    bad = np.argwhere(d < -tol)
    if bad.size == 0:
        return ConditionResult("A2", PASS)
    a, x, l = bad[0]
    return ConditionResult("A2", FAIL, {
        "action": a + 1, "x": x + 1, "xbar": x + 2, "l": l + 1,
        "tail_x": T[a, x, l], "tail_xbar": T[a, x + 1, l]})


def supermodularity_violation(table, tol=ATOL):
    """First adjacent (x, a) with a negative cross difference, else None."""
    t = np.asarray(table, dtype=float)
    cross = np.diff(np.diff(t, axis=0), axis=1)
    bad = np.argwhere(cross < -tol)
    if bad.size == 0:
        return None
    x, a = bad[0]
    return {"x": x + 1, "xbar": x + 2, "action": a + 1,
            "cross_difference": cross[x, a]}


def check_supermodular(table, tol=ATOL, name="supermodular"):
    """Increasing differences of a 2-d table (adjacent steps suffice)."""
    w = supermodularity_violation(table, tol)
    return ConditionResult(name, PASS if w is None else FAIL, w)


def check_submodular(table, tol=ATOL, name="submodular"):
    w = supermodularity_violation(-np.asarray(table, dtype=float), tol)
    if w is not None:
        w["cross_difference"] = -w["cross_difference"]
    return ConditionResult(name, PASS if w is None else FAIL, w)


def check_a3(mdp, tol=ATOL):
    """Rewards supermodular in (x, a)."""
    return check_supermodular(mdp.utility(), tol, "A3")


def check_a4(mdp, tol=ATOL):
    """Tail sums of the rows supermodular in (x, a) for every threshold."""
    T = tail_sums(mdp.transitions)          # (A, X, L)
    cross = np.diff(np.diff(T, axis=0), axis=1)   # (A-1, X-1, L)
    bad = np.argwhere(cross < -tol)
    if bad.size == 0:
        return ConditionResult("A4", PASS)
    a, x, l = bad[0]
    return ConditionResult("A4", FAIL, {
        "action": a + 1, "x": x + 1, "xbar": x + 2, "l": l + 1,
        "cross_difference": cross[a, x, l]})


def check_a5(mdp, tol=ATOL):
    """Terminal reward non-decreasing (terminal cost non-increasing)."""
    if mdp.terminal is None:
        return ConditionResult("A5", NA, detail="no terminal vector")
    t = -mdp.terminal if mdp.is_min else mdp.terminal
    d = np.diff(t)
    bad = np.flatnonzero(d < -tol)
    if bad.size == 0:
        return ConditionResult("A5", PASS)
    x = bad[0]
    return ConditionResult("A5", FAIL, {
        "x": x + 1, "xbar": x + 2,
        "value_x": mdp.terminal[x], "value_xbar": mdp.terminal[x + 1]})


# --- coefficient intervals ---------------------------------------------------

@dataclass
class CoefficientIntervals:
    """Admissible ID coefficients per index ``(x, xbar, a)``.

    Arrays have shape ``(X, X, A - 1)`` with entry ``[x-1, xbar-1, a-1]``;
    entries with ``xbar <= x`` are unused (``valid`` is False there).
    ``lower`` is at least ``ALPHA_FLOOR`` (the open bound ``0+``) and
    ``upper`` may be ``inf``. ``witness`` records, for the first infeasible
    index, the constraint that emptied it.
    """

    kind: str
    lower: np.ndarray
    upper: np.ndarray
    feasible: np.ndarray
    valid: np.ndarray
    witness: Optional[dict] = None

    @property
    def num_actions(self):
        return self.lower.shape[2] + 1

    @property
    def all_feasible(self):
        return bool(np.all(self.feasible[self.valid]))

    def interval(self, x, xbar, a):
        i = (x - 1, xbar - 1, a - 1)
        return float(self.lower[i]), float(self.upper[i])

    def uniform(self):
        """Per-action intersection over all state pairs: (lower, upper, ok)."""
        lo = np.where(self.valid[..., None], self.lower, -np.inf)
        hi = np.where(self.valid[..., None], self.upper, np.inf)
        lo_a = np.maximum(lo.max(axis=(0, 1)), ALPHA_FLOOR)
        hi_a = hi.min(axis=(0, 1))
        ok = np.all(self.feasible | ~self.valid[..., None], axis=(0, 1))
        return lo_a, hi_a, ok & _le(lo_a, hi_a)

    def intersect(self, other, kind="gamma"):
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        feas = self.feasible & other.feasible & _le(lo, hi)
        witness = None
        bad = np.argwhere(~feas & self.valid[..., None])
        if bad.size:
            x, xb, a = bad[0]
            witness = {"x": x + 1, "xbar": xb + 1, "action": a + 1,
                       "lower": lo[x, xb, a], "upper": hi[x, xb, a],
                       "from": [self.kind, other.kind]}
        return CoefficientIntervals(kind, lo, hi, feas, self.valid, witness)


def _le(lo, hi):
    # lo <= hi up to relative round-off
    return lo <= hi + 1e-12 * np.maximum(1.0, np.abs(np.where(np.isinf(hi), 0, hi)))


def id_intervals(table, kind="beta", ztol=ZERO_TOL, stat=None):
    """Intervals for ``table`` (shape (X, A)) or a statistic (X, A, L).

    For each ``x < xbar`` and adjacent pair ``(a, a+1)``, collects the
    constraints ``lhs >= coef * rhs`` with ``lhs`` the increment at
    ``xbar`` and ``rhs`` the increment at ``x`` (one per trailing index when
    a statistic axis is present) and solves each for ``coef > 0``.
    """
    t = np.asarray(table, dtype=float)
    if t.ndim == 2:
        t = t[..., None]
    X, A, L = t.shape
    inc = np.diff(t, axis=1)                # (X, A-1, L)
    lower = np.full((X, X, A - 1), ALPHA_FLOOR)
    upper = np.full((X, X, A - 1), np.inf)
    feasible = np.ones((X, X, A - 1), dtype=bool)
    valid = np.triu(np.ones((X, X), dtype=bool), k=1)
    witness = None
    for x in range(X - 1):
        rhs = inc[x][None]                  # (1, A-1, L)
        lhs = inc[x + 1:]                   # (n, A-1, L)
        rhs_b = np.broadcast_to(rhs, lhs.shape)
        pos = rhs_b > ztol
        neg = rhs_b < -ztol
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = lhs / rhs_b
        hi = np.where(pos, ratio, np.inf).min(axis=-1)
        lo = np.where(neg, ratio, -np.inf).max(axis=-1)
        dead = (~pos & ~neg & (lhs < -ztol)).any(axis=-1)
        lower[x, x + 1:] = np.maximum(lo, ALPHA_FLOOR)
        upper[x, x + 1:] = hi
        feas = ~dead & _le(lower[x, x + 1:], hi)
        feasible[x, x + 1:] = feas
        if witness is None and not feas.all():
            n, a = np.argwhere(~feas)[0]
            xb = x + 1 + n
            if dead[n, a]:
                l = int(np.argmax(~pos[n, a] & ~neg[n, a] & (lhs[n, a] < -ztol)))
                why = "zero increment at x with negative increment at xbar"
            else:
                l = int(np.argmin(np.where(pos[n, a], ratio[n, a], np.inf)))
                why = "lower bound exceeds upper bound"
            witness = {"x": x + 1, "xbar": xb + 1, "action": a + 1,
                       "index": l + 1, "lhs": lhs[n, a, l], "rhs": rhs_b[n, a, l],
                       "lower": lower[x, xb, a], "upper": upper[x, xb, a],
                       "reason": why}
    return CoefficientIntervals(kind, lower, upper, feasible, valid, witness)


def reward_id_intervals(mdp, reverse=None, table=None):
    """Admissible ``beta`` for the reward (or cost) ID inequality.

    By default the inequality is imposed on rewards in maximization form,
    i.e. reversed on the stored costs of a minimization model. Pass
    ``reverse`` to override: ``False`` imposes it on the stored table as
    written, ``True`` on its negation.
    """
    t = mdp.rewards if table is None else np.asarray(table, dtype=float)
    if reverse is None:
        reverse = table is None and mdp.is_min
    return id_intervals(-t if reverse else t, kind="beta")


def transition_id_intervals(mdp, order="first"):
    """Admissible ``alpha`` for the mixture dominance of the rows.

    ``order="first"`` gives the tail-sum inequalities, ``"second"`` the
    concave-order and ``"convex"`` the convex-order analogues.
    """
    stat = order_statistic(mdp.transitions, order)      # (A, X, L)
    return id_intervals(np.transpose(stat, (1, 0, 2)), kind=f"alpha[{order}]")


# --- schedules ---------------------------------------------------------------

@dataclass
class CoefficientSchedule:
    """Chosen ID coefficients, positive and non-decreasing in the action.

    ``values`` has shape ``(A - 1,)`` in uniform mode and
    ``(X, X, A - 1)`` in pairwise mode. The interval arrays are the
    intersections the values were chosen from.
    """

    mode: str
    feasible: bool
    values: Optional[np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    witness: Optional[dict] = None

    def to_dict(self):
        out = {"mode": self.mode, "feasible": self.feasible}
        if self.mode == "uniform":
            out["lower"] = _jsonable(self.lower)
            out["upper"] = _jsonable(self.upper)
            if self.values is not None:
                out["gamma"] = _jsonable(self.values)
        elif self.values is not None:
            X = self.values.shape[0]
            out["gamma"] = {f"{x + 1},{xb + 1}": _jsonable(self.values[x, xb])
                            for x in range(X) for xb in range(x + 1, X)}
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        return out


def choose_monotone(lower, upper):
    """Pick a non-decreasing sequence inside ``[lower_a, upper_a]``.

    Feasible iff the running maximum of ``lower`` never exceeds the
    reverse running minimum of ``upper``. The choice takes the reverse
    running minimum of ``upper`` where it is finite (the largest admissible
    schedule) and otherwise the smallest value keeping the sequence
    non-decreasing. Returns ``(values or None, first_bad_action or None)``.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    L = np.maximum.accumulate(lo)
    U = np.minimum.accumulate(hi[::-1])[::-1]
    bad = np.flatnonzero(~_le(L, U))
    if bad.size:
        return None, int(bad[0]) + 1
    vals = np.empty_like(lo)
    prev = ALPHA_FLOOR
    for a in range(len(lo)):
        vals[a] = U[a] if np.isfinite(U[a]) else max(L[a], prev)
        prev = vals[a]
    return vals, None


def find_common_schedule(beta, alpha, mode="uniform"):
    """Common ``gamma`` inside both the reward and transition intervals."""
    gamma = beta.intersect(alpha)
    if mode == "uniform":
        lo, hi, ok = gamma.uniform()
        if not ok.all():
            a = int(np.flatnonzero(~ok)[0])
            return CoefficientSchedule(mode, False, None, lo, hi, witness={
                "action": a + 1, "lower": lo[a], "upper": hi[a],
                "pair": gamma.witness,
                "reason": "no coefficient common to all state pairs"})
        vals, bad = choose_monotone(lo, hi)
        if vals is None:
            return CoefficientSchedule(mode, False, None, lo, hi, witness={
                "action": bad, "reason": "no non-decreasing choice in a"})
        return CoefficientSchedule(mode, True, vals, lo, hi)
    if mode != "pairwise":
        raise ValueError("mode must be 'uniform' or 'pairwise'")
    X = gamma.lower.shape[0]
    vals = np.full(gamma.lower.shape, np.nan)
    for x in range(X):
        for xb in range(x + 1, X):
            if not gamma.feasible[x, xb].all():
                a = int(np.flatnonzero(~gamma.feasible[x, xb])[0])
                return CoefficientSchedule(mode, False, None, gamma.lower,
                                           gamma.upper, witness={
                    "x": x + 1, "xbar": xb + 1, "action": a + 1,
                    "lower": gamma.lower[x, xb, a],
                    "upper": gamma.upper[x, xb, a],
                    "reason": "empty coefficient interval"})
            v, bad = choose_monotone(gamma.lower[x, xb], gamma.upper[x, xb])
            if v is None:
                return CoefficientSchedule(mode, False, None, gamma.lower,
                                           gamma.upper, witness={
                    "x": x + 1, "xbar": xb + 1, "action": bad,
                    "reason": "no non-decreasing choice in a"})
            vals[x, xb] = v
    return CoefficientSchedule(mode, True, vals, gamma.lower, gamma.upper)


def _schedule_with_fallback(beta, alpha, mode):
    sched = find_common_schedule(beta, alpha, mode)
    if not sched.feasible and mode == "uniform":
        fallback = find_common_schedule(beta, alpha, "pairwise")
        if fallback.feasible:
            return fallback
    return sched


def _interval_result(name, iv):
    if iv.all_feasible:
        return ConditionResult(name, PASS)
    return ConditionResult(name, FAIL, iv.witness)


def _schedule_result(name, sched):
    if sched.feasible:
        return ConditionResult(name, PASS, detail=f"{sched.mode} schedule")
    return ConditionResult(name, FAIL, sched.witness)


# --- sign changes ------------------------------------------------------------

@dataclass(frozen=True)
class SignChanges:
    count: int
    positions: tuple
    single_crossing: bool


def check_single_crossing(values, tol=0.0):
    """Sign changes of ``values`` along the state, ignoring entries within ``tol`` of zero.

    ``positions`` are the 1-based states at which a new sign starts.
    ``single_crossing`` holds when there is at most one change and it goes
    from negative to positive.
    """
    v = np.asarray(values, dtype=float)
    idx = np.flatnonzero(np.abs(v) > tol)
    s = np.sign(v[idx])
    flips = np.flatnonzero(s[1:] != s[:-1])
    positions = tuple(int(idx[i + 1]) + 1 for i in flips)
    single = len(flips) == 0 or (len(flips) == 1 and s[0] < 0)
    return SignChanges(len(flips), positions, single)


# --- theorem-level reports ---------------------------------------------------

def check_theorem1(mdp, mode="uniform", tol=ATOL):
    """First-order ID conditions for a monotone (increasing) policy."""
    rep = ConditionReport("theorem1", direction="increasing")
    rep.conditions += [check_a1(mdp, tol), check_a2(mdp, tol)]
    if mdp.terminal is not None:
        rep.conditions.append(check_a5(mdp, tol))
    beta = reward_id_intervals(mdp)
    alpha = transition_id_intervals(mdp, "first")
    rep.conditions.append(_interval_result("A6", beta))
    rep.conditions.append(_interval_result("A7", alpha))
    sched = _schedule_with_fallback(beta, alpha, mode)
    rep.schedule = sched
    rep.conditions.append(_schedule_result("A8", sched))
    for extra in (check_a3(mdp, tol), check_a4(mdp, tol)):
        extra.informational = True
        rep.conditions.append(extra)
    rep.extra["beta_uniform"] = _uniform_dict(beta)
    rep.extra["alpha_uniform"] = _uniform_dict(alpha)
    return rep


def _uniform_dict(iv):
    lo, hi, ok = iv.uniform()
    return {"lower": lo, "upper": hi, "feasible": ok}


@dataclass(frozen=True)
class CrossingSplit:
    action: int
    crossing_state: Optional[int]
    valid_splits: tuple


def _crossing_split(mdp, a, tol):
    """Valid splits s: states <= s have action a+1 dominated, states > s dominating."""
    u = mdp.utility()
    X = mdp.num_states
    dr = u[:, a + 1] - u[:, a]
    P = mdp.transitions
    below = np.array([dr[x] <= tol and dominates(P[a, x], P[a + 1, x], "first", tol)
                      for x in range(X)])
    above = np.array([dr[x] >= -tol and dominates(P[a + 1, x], P[a, x], "first", tol)
                      for x in range(X)])
    # prefix of "below" up to s, suffix of "above" from s+1
    pre = np.concatenate([[True], np.logical_and.accumulate(below)])
    suf = np.concatenate([np.logical_and.accumulate(above[::-1])[::-1], [True]])
    return [s for s in range(X + 1) if pre[s] and suf[s]]


def check_corollary1(mdp, tol=ATOL):
    """Crossing-state structure between adjacent actions plus A1 and A2.

    For each ``a`` a state ``x*_a`` must exist with action ``a+1`` worse in
    reward and first-order dominated below it, and better and dominating
    from it on. The reported crossing state is the first state of the upper
    region. When every action pair is uniformly ordered (no interior
    crossing) the corollary adds nothing and the verdict is
    not-applicable.
    """
    rep = ConditionReport("corollary1", direction="increasing")
    rep.conditions += [check_a1(mdp, tol), check_a2(mdp, tol)]
    splits = []
    failed = None
    for a in range(mdp.num_actions - 1):
        valid = _crossing_split(mdp, a, tol)
        if not valid:
            if failed is None:
                failed = a
            splits.append(CrossingSplit(a + 1, None, ()))
            continue
        interior = [s for s in valid if 0 < s < mdp.num_states]
        s = interior[0] if interior else valid[0]
        splits.append(CrossingSplit(a + 1, s + 1 if s < mdp.num_states else None,
                                    tuple(v + 1 for v in valid)))
    rep.extra["crossings"] = [
        {"action": c.action, "crossing_state": c.crossing_state,
         "valid_upper_starts": list(c.valid_splits)} for c in splits]
    if failed is not None:
        rep.conditions.append(ConditionResult("Ex1.1", FAIL, {
            "action": failed + 1,
            "reason": "no state separates dominated and dominating regions"}))
    elif all(all(v in (1, mdp.num_states + 1) for v in c.valid_splits)
             for c in splits):
        rep.conditions.append(ConditionResult(
            "Ex1.1", NA, detail="adjacent actions are uniformly ordered"))
    else:
        rep.conditions.append(ConditionResult("Ex1.1", PASS))
    return rep


def check_theorem2(mdp, variant="theorem2", mode="uniform", tol=ATOL,
                   size_guard=10**9, sample=None, seed=None):
    """Concave-value conditions (costs are the stored table of a min model).

    ``variant="theorem2"`` checks costs increasing and concave, TP3 rows
    with increasing concave conditional mean, the cost ID inequality as
    written, second-order mixture dominance and an increasing concave
    terminal cost; the certified policy is non-increasing.
    ``variant="corollary5"`` flips to decreasing costs, convex mean, the
    reversed cost inequality, convex-order dominance and a decreasing
    terminal; the certified policy is non-decreasing.
    """
    if variant not in ("theorem2", "corollary5"):
        raise ValueError("variant must be 'theorem2' or 'corollary5'")
    mirror = variant == "corollary5"
    c = mdp.rewards if mdp.is_min else -mdp.rewards
    rep = ConditionReport(variant,
                          direction="increasing" if mirror else "decreasing")

    mono = is_nonincreasing if mirror else is_nondecreasing
    word = "decreasing" if mirror else "increasing"
    bad = [a for a in range(mdp.num_actions)
           if not (mono(c[:, a], tol) and is_concave(c[:, a], tol))]
    rep.conditions.append(ConditionResult(
        "C1", FAIL if bad else PASS,
        {"action": bad[0] + 1, "reason": f"cost not {word} and concave"} if bad else None))

    c2_witness = None
    tp_info = []
    for a in range(mdp.num_actions):
        tp = is_totally_positive(mdp.transitions[a], 3, tol, size_guard,
                                 sample=sample, seed=seed)
        prof = conditional_mean_profile(mdp.transitions[a], tol)
        shape_ok = prof.increasing and (prof.convex if mirror else prof.concave)
        tp_info.append({"action": a + 1, "tp3": tp.holds,
                        "minors_checked": tp.minors_checked,
                        "sampled": tp.sampled})
        if c2_witness is None and not tp.holds:
            c2_witness = {"action": a + 1, "rows": tp.rows, "cols": tp.cols,
                          "minor": tp.minor}
        elif c2_witness is None and not shape_ok:
            c2_witness = {"action": a + 1, "mean": prof.mean,
                          "reason": "conditional mean shape"}
    rep.extra["tp3"] = tp_info
    rep.conditions.append(ConditionResult("C2", FAIL if c2_witness else PASS,
                                          c2_witness))

    beta = reward_id_intervals(mdp, table=-c if mirror else c)
    alpha = transition_id_intervals(mdp, "convex" if mirror else "second")
    rep.conditions.append(_interval_result("C3", beta))
    rep.conditions.append(_interval_result("C4", alpha))

    if mdp.terminal is not None:
        t = mdp.terminal if mdp.is_min else -mdp.terminal
        ok = mono(t, tol) and is_concave(t, tol)
        rep.conditions.append(ConditionResult(
            "C5", PASS if ok else FAIL,
            None if ok else {"terminal": t, "reason": f"not {word} and concave"}))

    sched = _schedule_with_fallback(beta, alpha, mode)
    rep.schedule = sched
    rep.conditions.append(_schedule_result("A8", sched))
    sup = check_supermodular(c, tol, "cost-supermodular")
    sub = check_submodular(c, tol, "cost-submodular")
    for extra in (sup, sub):
        extra.informational = True
        rep.conditions.append(extra)
    rep.extra["beta_uniform"] = _uniform_dict(beta)
    rep.extra["alpha_uniform"] = _uniform_dict(alpha)
    return rep


# --- Q diagnostics -----------------------------------------------------------

@dataclass
class QDiffDiagnostics:
    """Differences ``Q(x, a) - Q(x, 1)`` for ``a = 2..A`` and shape verdicts.

    ``diffs`` has shape ``(X, A - 1)``. ``adjacent_supermodular[a-1]`` says
    whether ``Q(x, a+1) - Q(x, a)`` is non-decreasing in x (and
    ``adjacent_submodular`` non-increasing).
    """

    diffs: np.ndarray
    adjacent_supermodular: list
    adjacent_submodular: list
    sign_changes: list

    @property
    def supermodular(self):
        return all(self.adjacent_supermodular)

    @property
    def submodular(self):
        return all(self.adjacent_submodular)

    def column_monotone(self, j):
        d = self.diffs[:, j]
        return is_nondecreasing(d) or is_nonincreasing(d)


def q_diff_diagnostics(q, tol=ATOL):
    q = np.asarray(q, dtype=float)
    diffs = q[:, 1:] - q[:, :1]
    adj = np.diff(q, axis=1)
    sup = [is_nondecreasing(adj[:, a], tol) for a in range(adj.shape[1])]
    sub = [is_nonincreasing(adj[:, a], tol) for a in range(adj.shape[1])]
    signs = [check_single_crossing(diffs[:, j]) for j in range(diffs.shape[1])]
    return QDiffDiagnostics(diffs, sup, sub, signs)
