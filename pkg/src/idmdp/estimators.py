"""Estimator-style wrappers around the solvers.

``fit(mdp)`` solves or learns on a model and stores fitted attributes with
a trailing underscore; ``predict(states)`` maps 1-based states to 1-based
actions. Hyperparameters are handled by :class:`sklearn.base.BaseEstimator`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .mdp import ATOL, finite_horizon_dp, value_iteration
from .rl import q_learning, threshold_search


class _PolicyEstimator(BaseEstimator):
    def _check_fitted(self):
        if not hasattr(self, "policy_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted")

    def predict(self, states=None):
        """Actions for 1-based ``states`` (all states when omitted)."""
        self._check_fitted()
        policy = np.asarray(self.policy_)
        if policy.ndim == 2:
            policy = policy[0]
        if states is None:
            return policy.copy()
        idx = np.asarray(states, dtype=int) - 1
        if np.any(idx < 0) or np.any(idx >= policy.size):
            raise IndexError("states must lie in 1..X")
        return policy[idx]


class ValueIterationSolver(_PolicyEstimator):
    """Discounted infinite-horizon solution by value iteration."""

    def __init__(self, tol=1e-8, max_iter=100_000, tie_tol=ATOL):
        self.tol = tol
        self.max_iter = max_iter
        self.tie_tol = tie_tol

    def fit(self, mdp):
        sol = value_iteration(mdp, self.tol, self.max_iter, self.tie_tol)
        self.q_ = sol.q
        self.values_ = sol.values
        self.policy_ = sol.policy
        self.n_iter_ = sol.iterations
        return self


class FiniteHorizonSolver(_PolicyEstimator):
    """Backward induction; ``predict`` uses the stage-0 policy."""

    def __init__(self, horizon=None, discounted=None, tie_tol=ATOL):
        self.horizon = horizon
        self.discounted = discounted
        self.tie_tol = tie_tol

    def fit(self, mdp):
        N = self.horizon if self.horizon is not None else mdp.meta.get("horizon")
        if N is None:
            raise ValueError("no horizon given and none recorded on the model")
        sol = finite_horizon_dp(mdp, N, self.discounted, self.tie_tol)
        self.q_ = sol.q
        self.values_ = sol.values
        self.policy_ = sol.policy
        return self


class QLearner(_PolicyEstimator):
    """Tabular Q-learning on simulated transitions."""

    def __init__(self, steps=100_000, seed=0, learning_rate=None,
                 exploration=None, project=False, record_every=None):
        self.steps = steps
        self.seed = seed
        self.learning_rate = learning_rate
        self.exploration = exploration
        self.project = project
        self.record_every = record_every

    def fit(self, mdp):
        res = q_learning(mdp, self.seed, self.steps, self.learning_rate,
                         self.exploration, project=self.project,
                         record_every=self.record_every)
        self.q_ = res.q
        self.visits_ = res.visits
        self.curve_ = res.curve
        self.policy_ = res.projected if self.project else res.policy
        self.greedy_policy_ = res.policy
        return self


class ThresholdSearcher(_PolicyEstimator):
    """Simulation search over monotone threshold policies."""

    def __init__(self, lam=0.0, seed=0, budget=100_000, horizon=None,
                 baseline=False):
        self.lam = lam
        self.seed = seed
        self.budget = budget
        self.horizon = horizon
        self.baseline = baseline

    def fit(self, mdp):
        res = threshold_search(mdp, self.lam, self.seed, self.budget,
                               self.horizon, baseline=self.baseline)
        self.thresholds_ = res.policy.thresholds
        self.policy_ = res.policy.to_policy()
        self.value_ = res.value
        self.result_ = res
        return self
