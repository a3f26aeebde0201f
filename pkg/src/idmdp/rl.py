"""Simulation-based learning that exploits monotone structure.

A monotone policy over ``A`` actions is fully described by at most
``A - 1`` jump positions. :class:`ThresholdPolicy` is that
parameterization and :func:`threshold_search` searches over it. Tabular
Q-learning is provided as a baseline with an optional heuristic
projection of its greedy policy onto monotone policies.

All randomness flows from a single integer seed through
:class:`numpy.random.SeedSequence`, so identical arguments give identical
results bit for bit.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numba import njit

from .mdp import ATOL, extract_monotone_selection, greedy_policy, is_monotone

Schedule = Union[float, Callable, None]


# --- penalty and threshold parameterization ---------------------------------

def rectified_l1_penalty(policy):
    """``sum_x max(mu(x) - mu(x+1), 0)``; zero exactly on non-decreasing policies.

    A 2-d input is treated as a stack of stages and the penalties are summed.
    """
    p = np.atleast_2d(np.asarray(policy, dtype=float))
    return float(np.clip(-np.diff(p, axis=1), 0.0, None).sum())


@dataclass(frozen=True)
class ThresholdPolicy:
    """Monotone policy ``mu(x) = 1 + #{j : t_j <= x}``.

    ``thresholds`` are 1-based states in ``1..X+1``; ``X + 1`` means the
    corresponding action is never reached.
    """

    thresholds: tuple
    num_states: int

    def __post_init__(self):
        t = tuple(int(v) for v in self.thresholds)
        if any(b < a for a, b in zip(t, t[1:])):
            raise ValueError(f"thresholds must be sorted, got {t}")
        if any(v < 1 or v > self.num_states + 1 for v in t):
            raise ValueError(f"thresholds must lie in 1..{self.num_states + 1}")
        object.__setattr__(self, "thresholds", t)

    @property
    def num_actions(self):
        return len(self.thresholds) + 1

    def to_policy(self):
        x = np.arange(1, self.num_states + 1)
        t = np.asarray(self.thresholds, dtype=int)
        return 1 + (t[None, :] <= x[:, None]).sum(axis=1)

    @classmethod
    def from_policy(cls, policy, num_actions=None):
        """Jump positions of a non-decreasing policy."""
        mu = np.asarray(policy, dtype=int)
        if not is_monotone(mu):
            raise ValueError("policy is not non-decreasing")
        A = int(mu.max()) if num_actions is None else int(num_actions)
        X = mu.size
        t = []
        for j in range(1, A):
            above = np.flatnonzero(mu > j)
            t.append(int(above[0]) + 1 if above.size else X + 1)
        return cls(tuple(t), X)


# --- simulation --------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """A batch of episodes; arrays are 1-based in states and actions.

    ``states`` has shape ``(E, H + 1)``, ``actions`` and ``rewards``
    ``(E, H)``.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    seed: int
    horizon: int


@dataclass(frozen=True)
class SimulationResult:
    """Per-episode discounted returns and their summary statistics."""

    returns: np.ndarray
    starts: np.ndarray
    trajectories: list = field(default_factory=list)

    @property
    def mean(self):
        return float(self.returns.mean()) if self.returns.size else 0.0

    @property
    def stderr(self):
        n = self.returns.size
        return float(self.returns.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def _policy_table(policy, X, H):
    mu = np.asarray(policy, dtype=int)
    if mu.ndim == 1:
        if mu.shape != (X,):
            raise ValueError(f"policy must have length {X}")
        return np.broadcast_to(mu - 1, (max(H, 1), X))
    if mu.shape != (H, X):
        raise ValueError(f"per-stage policy must have shape ({H}, {X})")
    return mu - 1


def _starts(start, n, X, rng):
    if start is None:
        return rng.integers(0, X, size=n)
    if np.ndim(start) == 0:
        return np.full(n, int(start) - 1)
    s = np.asarray(start, dtype=int) - 1
    if s.shape != (n,):
        raise ValueError("start must be a scalar or one state per episode")
    return s


def _stream(mdp, mu, cum, rho, starts, H, rng, keep):
    E = starts.size
    s = starts.copy()
    ret = np.zeros(E)
    disc = 1.0
    if keep:
        S = np.empty((E, H + 1), dtype=int)
        Acts = np.empty((E, H), dtype=int)
        R = np.empty((E, H))
        S[:, 0] = s + 1
    for t in range(H):
        a = mu[t, s]
        r = mdp.rewards[s, a]
        ret += disc * r
        u = rng.random(E)
        nxt = (cum[a, s] < u[:, None]).sum(axis=1)
        nxt = np.minimum(nxt, mdp.num_states - 1)
        if keep:
            Acts[:, t] = a + 1
            R[:, t] = r
            S[:, t + 1] = nxt + 1
        s = nxt
        disc *= rho
    traj = Trajectory(S, Acts, R, 0, H) if keep else None
    return ret, traj


def simulate(mdp, policy, seed, episodes, horizon, start=None, streams=1,
             keep_trajectories=False):
    """Discounted returns ``sum_{t<H} rho^t r(x_t, mu(x_t))`` over episodes.

    Each return is an unbiased estimate of the ``H``-stage discounted value
    of the policy, which differs from its infinite-horizon value by at most
    ``rho^H max|r| / (1 - rho)``. Episodes are split across ``streams``
    with independent child seeds; results are concatenated in stream order.
    ``start`` is a 1-based state, one state per episode, or ``None`` for a
    uniformly random start.
    """
    X = mdp.num_states
    H = int(horizon)
    if H < 0 or episodes < 0:
        raise ValueError("horizon and episodes must be non-negative")
    rho = 1.0 if mdp.discount is None else mdp.discount
    mu = _policy_table(policy, X, H)
    cum = np.cumsum(mdp.transitions, axis=2)
    children = np.random.SeedSequence(seed).spawn(max(int(streams), 1))
    sizes = np.array_split(np.arange(int(episodes)), len(children))
    rets, starts_all, trajs = [], [], []
    for child, idx in zip(children, sizes):
        rng = np.random.default_rng(child)
        st = _starts(start if np.ndim(start) == 0 else np.asarray(start)[idx],
                     idx.size, X, rng)
        ret, traj = _stream(mdp, mu, cum, rho, st, H, rng, keep_trajectories)
        rets.append(ret)
        starts_all.append(st + 1)
        if traj is not None:
            trajs.append(Trajectory(traj.states, traj.actions, traj.rewards,
                                    int(child.generate_state(1)[0]), H))
    return SimulationResult(np.concatenate(rets) if rets else np.empty(0),
                            np.concatenate(starts_all) if starts_all else np.empty(0, int),
                            trajs)


# --- Q-learning --------------------------------------------------------------

def default_learning_rate(n):
    """``1 / (1 + n)^0.6`` for the ``n``-th visit of a state-action pair."""
    return 1.0 / (1.0 + np.asarray(n, dtype=float)) ** 0.6


def default_exploration(steps, floor=0.05):
    """Linear decay from 1 to ``floor`` over the first half of the run."""
    def schedule(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(floor, 1.0 - (1.0 - floor) * t / max(steps / 2.0, 1.0))
    return schedule


def _table(schedule, n, name):
    idx = np.arange(n)
    if callable(schedule):
        vals = np.asarray(schedule(idx), dtype=float)
        if vals.shape != (n,):
            vals = np.array([float(schedule(i)) for i in idx])
    else:
        vals = np.full(n, float(schedule))
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{name} schedule produced non-finite values")
    return vals


@njit(cache=True)
def _q_kernel(q, visits, cum, rewards, rho, sign, lr, eps, u_explore,
              u_action, u_next, state, t0, t1):
    A = q.shape[1]
    X = q.shape[0]
    for t in range(t0, t1):
        s = state
        if u_explore[t] < eps[t]:
            a = int(u_action[t] * A)
            if a >= A:
                a = A - 1
        else:
            a = 0
            best = sign * q[s, 0]
            for b in range(1, A):
                v = sign * q[s, b]
                if v > best + 1e-12:
                    best = v
                    a = b
        row = cum[a, s]
        nxt = 0
        while nxt < X - 1 and row[nxt] < u_next[t]:
            nxt += 1
        target = sign * q[nxt, 0]
        for b in range(1, A):
            if sign * q[nxt, b] > target:
                target = sign * q[nxt, b]
        target = rewards[s, a] + rho * sign * target
        alpha = lr[visits[s, a]]
        q[s, a] += alpha * (target - q[s, a])
        visits[s, a] += 1
        state = nxt
    return state


@dataclass
class QLearningResult:
    q: np.ndarray
    policy: np.ndarray
    visits: np.ndarray
    curve: list
    projected: Optional[np.ndarray] = None
    projection_failed: bool = False


def q_learning(mdp, seed, steps, learning_rate: Schedule = None,
               exploration: Schedule = None, q0=None, start=None,
               project=False, record_every=None, tie_tol=ATOL):
    """Tabular Q-learning on a single simulated trajectory.

    Parameters
    ----------
    learning_rate : float or callable, optional
        Step size as a function of the visit count ``n = 0, 1, ...`` of the
        updated pair; default ``1 / (1 + n)^0.6``.
    exploration : float or callable, optional
        Epsilon-greedy probability as a function of the step index;
        default decays linearly to 0.05 over the first half of the run.
    project : bool
        Also report a monotone selection of the learned Q (heuristic).
    record_every : int, optional
        Interval of the learning curve rows ``(step, value, penalty)``,
        where value is the mean of ``max_a Q`` over states.
    """
    if mdp.discount is None:
        raise ValueError("Q-learning needs a discounted model")
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    X, A = mdp.num_states, mdp.num_actions
    lr = _table(default_learning_rate if learning_rate is None else learning_rate,
                steps + 1, "learning-rate")
    expl = _table(default_exploration(steps) if exploration is None else exploration,
                  steps, "exploration")
    if np.any(lr < 0) or np.any(expl < 0) or np.any(expl > 1):
        raise ValueError("schedules must be non-negative and exploration <= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    state = int(rng.integers(0, X)) if start is None else int(start) - 1
    u = rng.random((3, steps))
    q = np.zeros((X, A)) if q0 is None else np.array(q0, dtype=float)
    if q.shape != (X, A):
        raise ValueError(f"q0 must have shape ({X}, {A})")
    visits = np.zeros((X, A), dtype=np.int64)
    cum = np.ascontiguousarray(np.cumsum(mdp.transitions, axis=2))
    rewards = np.ascontiguousarray(mdp.rewards)
    sign = -1.0 if mdp.is_min else 1.0
    every = steps if not record_every else int(record_every)
    curve = []

    def record(t):
        pol = greedy_policy(q, mdp.objective, tie_tol)
        curve.append((t, float(np.mean(sign * (sign * q).max(axis=1))),
                      rectified_l1_penalty(pol)))

    record(0)
    t = 0
    while t < steps:
        t1 = min(t + max(every, 1), steps)
        state = _q_kernel(q, visits, cum, rewards, mdp.discount, sign, lr, expl,
                          u[0], u[1], u[2], state, t, t1)
        t = t1
        record(t)
    policy = greedy_policy(q, mdp.objective, tie_tol)
    res = QLearningResult(q, policy, visits, curve)
    if project:
        sel = extract_monotone_selection(q, tie_tol, mdp.objective)
        res.projected = policy if sel is None else sel
        res.projection_failed = sel is None
    return res


def curve_to_csv(curve, header=("step", "value", "penalty")):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in curve:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# --- threshold search --------------------------------------------------------

@dataclass
class ThresholdSearchResult:
    """Best monotone policy found and the unconstrained comparison.

    ``value`` is the mean discounted utility (reward, or negated cost) over
    start states drawn uniformly; ``objective`` subtracts ``lam *
    penalty`` (zero for threshold policies).
    """

    policy: ThresholdPolicy
    value: float
    stderr: float
    evaluations: int
    samples_used: int
    budget_exhausted: bool
    method: str
    history: list = field(default_factory=list)
    baseline: Optional[dict] = None


def _default_horizon(mdp):
    if mdp.discount is None:
        raise ValueError("threshold search needs a discounted model")
    return int(min(math.ceil(math.log(1e-3) / math.log(mdp.discount)), 500))


class _Evaluator:
    """Common-random-number estimates of the mean utility of a policy."""

    def __init__(self, mdp, seed, episodes, horizon):
        self.mdp = mdp
        self.seed = seed
        self.episodes = episodes
        self.horizon = horizon
        X = mdp.num_states
        self.starts = np.resize(np.arange(1, X + 1), episodes)
        self.sign = -1.0 if mdp.is_min else 1.0
        self.cache = {}
        self.samples = 0

    @property
    def cost(self):
        return self.episodes * self.horizon

    def __call__(self, policy):
        key = tuple(int(v) for v in policy)
        if key not in self.cache:
            sim = simulate(self.mdp, np.array(key), self.seed, self.episodes,
                           self.horizon, start=self.starts)
            self.samples += self.cost
            r = self.sign * sim.returns
            self.cache[key] = (float(r.mean()),
                               float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0)
        return self.cache[key]


def _lattice(X, A):
    return [t for t in itertools.combinations_with_replacement(range(1, X + 2), A - 1)]


def threshold_search(mdp, lam=0.0, seed=0, budget=100_000, horizon=None,
                     episodes=None, baseline=True):
    """Search monotone threshold policies by simulation.

    ``budget`` bounds the number of simulated transitions. When the
    threshold lattice fits, every point is evaluated with common random
    numbers; otherwise a seeded hill climb over single-threshold moves is
    run until no move improves or the budget runs out.

    With ``baseline=True`` an unconstrained coordinate search over
    arbitrary policies, scored by ``value - lam * rectified_l1_penalty``,
    is run from the best threshold policy with a further ``budget`` and
    reported in ``result.baseline``.
    """
    X, A = mdp.num_states, mdp.num_actions
    H = _default_horizon(mdp) if horizon is None else int(horizon)
    if A == 1:
        tp = ThresholdPolicy((), X)
        ev = _Evaluator(mdp, seed, max(X, 1), H)
        v, se = ev(tp.to_policy())
        return ThresholdSearchResult(tp, v, se, 1, ev.samples, False, "trivial")
    lattice_size = math.comb(X + A - 1, A - 1)
    if episodes is None:
        per_eval = budget // lattice_size if lattice_size * H * X <= budget else budget // 50
        episodes = max(X, (per_eval // max(H, 1)) // X * X)
    ev = _Evaluator(mdp, seed, int(episodes), H)
    history = []
    exhausted = False

    def score(t):
        v, se = ev(ThresholdPolicy(t, X).to_policy())
        history.append((t, v))
        return v, se

    if lattice_size * ev.cost <= budget:
        method = "lattice"
        best = None
        for t in _lattice(X, A):
            v, se = score(t)
            if best is None or v > best[1]:
                best = (t, v, se)
    else:
        method = "local"
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        t = tuple(sorted(int(v) for v in rng.integers(1, X + 2, size=A - 1)))
        best = (t, *score(t))
        improved = True
        while improved:
            improved = False
            for j in range(A - 1):
                for step in (-1, 1):
                    if ev.samples + ev.cost > budget:
                        exhausted = True
                        break
                    cand = list(best[0])
                    cand[j] += step
                    if not 1 <= cand[j] <= X + 1 or cand != sorted(cand):
                        continue
                    v, se = score(tuple(cand))
                    if v > best[1]:
                        best = (tuple(cand), v, se)
                        improved = True
                if exhausted:
                    break
            if exhausted:
                break
    result = ThresholdSearchResult(ThresholdPolicy(best[0], X), best[1], best[2],
                                   len(ev.cache), ev.samples, exhausted, method,
                                   history)
    if baseline:
        result.baseline = _unconstrained(ev, result.policy.to_policy(), lam,
                                         ev.samples + budget)
    return result


def _unconstrained(ev, start, lam, limit):
    """One coordinate sweep over all actions per state, penalized objective."""
    mdp = ev.mdp
    pol = np.array(start, dtype=int)

    def obj(p):
        v, _ = ev(p)
        return v - lam * rectified_l1_penalty(p)

    cur = obj(pol)
    exhausted = False
    for x in range(mdp.num_states):
        for a in range(1, mdp.num_actions + 1):
            if a == pol[x]:
                continue
            if ev.samples + ev.cost > limit:
                exhausted = True
                break
            cand = pol.copy()
            cand[x] = a
            val = obj(cand)
            if val > cur:
                pol, cur = cand, val
        if exhausted:
            break
    v, se = ev(pol)
    return {"policy": pol.tolist(), "value": v, "stderr": se,
            "penalty": rectified_l1_penalty(pol), "objective": cur,
            "budget_exhausted": exhausted}
