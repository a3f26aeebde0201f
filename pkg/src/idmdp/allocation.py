"""Finite-horizon allocation MDP with terminal penalty costs.

State ``i`` counts how many components are still missing (state 1 means
none). Action ``a`` succeeds with probability ``theta(a)``, moving the
state down by one, and with probability ``(A - a) eps`` the chain jumps to
the worst state ``X``. The stage cost is ``eps * c(i, a)`` and the terminal
penalty ``kappa(i)``.

Working with ``W_k = V_k - kappa`` gives a recursion with zero terminal
condition, on which the monotonicity conditions are stated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidModelError
from .examples import perturbed_bidiagonal
from .mdp import ATOL, FiniteMdp, greedy_policy, is_monotone
from .structural import FAIL, NA, PASS, supermodularity_violation

ROSS_KAPPA = (0, 1, 2, 4, 8, 15, 25, 40, 60, 90, 200)


@dataclass(frozen=True)
class AllocationModel:
    """Allocation problem before conversion to a :class:`FiniteMdp`.

    ``costs`` has shape ``(X, A)`` and excludes the ``eps`` factor;
    ``gamma`` has length ``A - 1`` with ``theta(a+1) - theta(a) = eps *
    gamma[a]``.
    """

    costs: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray
    eps: float
    theta1: float = 0.3
    horizon: int = 20
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.costs, dtype=float)
        k = np.array(self.kappa, dtype=float)
        g = np.atleast_1d(np.array(self.gamma, dtype=float))
        if c.ndim != 2:
            raise InvalidModelError("costs must be an (X, A) table")
        X, A = c.shape
        if k.shape != (X,):
            raise InvalidModelError(f"kappa must have length {X}")
        if g.shape != (A - 1,):
            raise InvalidModelError(f"gamma must have length {A - 1}")
        if np.any(g <= 0):
            raise InvalidModelError("gamma entries must be positive")
        if not self.eps > 0:
            raise InvalidModelError("eps must be positive")
        if k[0] != 0:
            raise InvalidModelError("kappa(1) must be 0")
        if np.any(np.diff(k) < 0):
            raise InvalidModelError("kappa must be non-decreasing")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise InvalidModelError("horizon must be a non-negative integer")
        for name, arr in (("costs", c), ("kappa", k), ("gamma", g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        th = self.theta
        if np.any(th < 0) or np.any(th > 1):
            raise InvalidModelError(f"theta(a) outside [0, 1]: {th}")
        jump = (A - 1 - np.arange(A)) * self.eps
        if np.any(th + jump > 1 + 1e-12):
            raise InvalidModelError("theta(a) + (A - a) eps exceeds 1")

    @property
    def num_states(self):
        return self.costs.shape[0]

    @property
    def num_actions(self):
        return self.costs.shape[1]

    @property
    def theta(self):
        return self.theta1 + self.eps * np.concatenate([[0.0], np.cumsum(self.gamma)])

    def to_dict(self):
        return {"kind": "allocation", "num_states": self.num_states,
                "num_actions": self.num_actions, "objective": "min",
                "horizon": int(self.horizon), "epsilon": self.eps,
                "gamma": self.gamma.tolist(), "kappa": self.kappa.tolist(),
                "costs": self.costs.tolist(), "theta1": self.theta1,
                "name": self.name}

    @classmethod
    def from_dict(cls, doc):
        return cls(costs=doc["costs"], kappa=doc["kappa"], gamma=doc["gamma"],
                   eps=doc["epsilon"], theta1=doc.get("theta1", 0.3),
                   horizon=doc.get("horizon", 20), name=doc.get("name", ""))


def to_mdp(model):
    """Perturbed bi-diagonal min-cost MDP with stage cost ``eps * c``."""
    P = perturbed_bidiagonal(model.num_states, model.theta, model.eps)
    return FiniteMdp(transitions=P, rewards=model.eps * model.costs,
                     terminal=model.kappa, objective="min", name=model.name,
                     meta={"builder": "allocation", "horizon": int(model.horizon)})


def transformed_cost(model):
    """Stage cost ``cbar(i, a)`` of the recursion in ``W``.

    Row 1 has no success term since state 1 cannot move down.
    """
    X, A = model.num_states, model.num_actions
    k, th, eps = model.kappa, model.theta, model.eps
    jump = (A - 1 - np.arange(A)) * eps
    cbar = eps * model.costs.copy()
    down = np.zeros(X)
    down[1:] = k[:-1] - k[1:]                  # kappa(i-1) - kappa(i)
    cbar[1:] += down[1:, None] * th[None, :]
    cbar[:-1] += jump[None, :] * (k[-1] - k[:-1])[:, None]
    return cbar


@dataclass(frozen=True)
class ModifiedDpSolution:
    """``w[k]`` for ``k = 0..N`` with ``w[N] = 0``; ``qbar`` and ``policy`` per stage."""

    w: np.ndarray
    qbar: np.ndarray
    policy: np.ndarray
    cbar: np.ndarray

    @property
    def horizon(self):
        return self.qbar.shape[0]


def modified_dp(model, horizon=None, literal=False, tie_tol=ATOL):
    """Backward induction on ``W_k = V_k - kappa``.

    By default the recursion is the exact image of the original DP, which
    keeps the jump term ``(A - a) eps W_{k+1}(X)`` in rows ``1..X-1``.
    ``literal=True`` drops that term, matching the compact printed form;
    the identity ``V_k = W_k + kappa`` then holds only up to ``O(eps)``.
    """
    N = int(model.horizon if horizon is None else horizon)
    X, A = model.num_states, model.num_actions
    th, eps = model.theta, model.eps
    jump = (A - 1 - np.arange(A)) * eps
    cbar = transformed_cost(model)
    w = np.zeros((N + 1, X))
    qbar = np.empty((N, X, A))
    for k in range(N - 1, -1, -1):
        nxt = w[k + 1]
        q = cbar.copy()
        far = 0.0 if literal else nxt[-1]
        # row 1: stay unless the chain jumps to X
        q[0] += (1.0 - jump) * nxt[0] + jump * far
        # rows 2..X-1
        q[1:-1] += ((1.0 - th - jump)[None, :] * nxt[1:-1, None]
                    + th[None, :] * nxt[:-2, None] + jump[None, :] * far)
        # row X
        q[-1] += th * nxt[-2] + (1.0 - th) * nxt[-1]
        qbar[k] = q
        w[k] = q.min(axis=1)
    policy = (np.stack([greedy_policy(qbar[k], "min", tie_tol) for k in range(N)])
              if N else np.empty((0, X), dtype=int))
    return ModifiedDpSolution(w, qbar, policy, cbar)


@dataclass
class InequalityCheck:
    """Verdict of a per-``(i, a)`` inequality with its margins.

    ``margins[j, a-1]`` is ``lhs - rhs`` at state ``states[j]``; negative
    entries are violations.
    """

    name: str
    verdict: str
    margins: Optional[np.ndarray] = None
    states: tuple = ()
    witness: Optional[dict] = None
    detail: str = ""

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        out = {"name": self.name, "verdict": self.verdict}
        if self.detail:
            out["detail"] = self.detail
        if self.margins is not None:
            out["states"] = list(self.states)
            out["margins"] = self.margins.tolist()
        if self.witness is not None:
            out["witness"] = {k: (float(v) if isinstance(v, np.floating) else v)
                              for k, v in self.witness.items()}
        return out


def _cost_increments(model):
    return np.diff(model.costs, axis=1)        # Delta(i, a), shape (X, A-1)


def _verdict(name, margins, states, tol):
    bad = np.argwhere(margins < -tol)
    if bad.size == 0:
        return InequalityCheck(name, PASS, margins, states)
    j, a = bad[0]
    return InequalityCheck(name, FAIL, margins, states, witness={
        "i": int(states[j]), "action": int(a) + 1,
        "margin": float(margins[j, a])})


def _condition_rows(model, gbar=None):
    """Both sides of the per-(i, a) condition for ``i = 2..X-1``."""
    k = model.kappa
    X = model.num_states
    g = model.gamma[None, :]
    gb = g if gbar is None else gbar
    D = _cost_increments(model)
    i = np.arange(1, X - 1)                    # 0-based index of states 2..X-1
    lhs = np.broadcast_to(k[i + 1][:, None], (i.size, g.shape[1]))
    rhs = (k[-1] * (gb - 1) / (g - 1)
           + gb * g * (k[i] - k[i - 1])[:, None] / (g - 1)
           + (D[i + 1] - gb * D[i]) / (g - 1)
           + (g - gb) * k[i][:, None] / (g - 1))
    return lhs - rhs, tuple(int(s) + 1 for s in i)


def check_maincost(model, tol=ATOL):
    """Main cost inequality, one margin per state ``i = 2..X-1`` and action.

    Not applicable unless every ``gamma_a > 1``; use :func:`check_stronger`
    when ``gamma`` is not monotone.
    """
    if np.min(model.gamma) <= 1:
        return InequalityCheck("maincost", NA,
                               detail="needs min gamma > 1; see check_stronger")
    margins, states = _condition_rows(model)
    return _verdict("maincost", margins, states, tol)


def check_stronger(model, tol=ATOL):
    """Uniform-coefficient variant with ``gbar = max gamma``.

    Needs only ``gamma_a > 1`` (no monotonicity in ``a``); it coincides
    with :func:`check_maincost` when all ``gamma_a`` are equal.
    """
    if np.min(model.gamma) <= 1:
        return InequalityCheck("stronger", NA, detail="needs every gamma > 1")
    gbar = float(np.max(model.gamma))
    margins, states = _condition_rows(model, gbar)
    return _verdict("stronger", margins, states, tol)


def check_assumptions(model, tol=ATOL):
    """Side assumptions: gamma >= 1 and non-decreasing; kappa convex
    increasing with kappa(1) = 0; costs non-increasing in the state.
    """
    g, k, c = model.gamma, model.kappa, model.costs
    out = {
        "gamma_monotone": bool(np.all(g >= 1) and np.all(np.diff(g) >= -tol)),
        "kappa_convex_increasing": bool(np.all(np.diff(k) >= -tol)
                                        and np.all(np.diff(k, 2) >= -tol)),
        "cost_decreasing": bool(np.all(np.diff(c, axis=0) <= tol)),
        "cbar_decreasing": bool(np.all(np.diff(transformed_cost(model), axis=0) <= tol)),
    }
    return out


def stagewise_submodular(qbar, tol=ATOL):
    """True iff every stage of ``qbar`` has non-increasing adjacent differences."""
    return all(supermodularity_violation(-q, tol) is None for q in qbar)


def policies_monotone(policy, first=1, last=None):
    """Whether stages ``first..last`` (default ``N - 1``) are non-decreasing."""
    last = policy.shape[0] - 1 if last is None else last
    return all(is_monotone(policy[k]) for k in range(first, last + 1))


def build_ross_case(which="i", eps=1e-6, gamma=1.2, f=1e3, theta1=0.3,
                    horizon=20, kappa=ROSS_KAPPA):
    """The two two-action instances with zero cost for action 1.

    Case ``"i"``: ``c(x, 2) = f - (x + 2)^3``. Case ``"ii"`` adds
    ``2.5 x^4`` for ``x <= 3``. Costs are stored without the ``eps`` factor.
    """
    if which not in ("i", "ii"):
        raise ValueError("which must be 'i' or 'ii'")
    X = len(kappa)
    x = np.arange(1, X + 1)
    c2 = f - (x + 2.0) ** 3
    if which == "ii":
        c2 = c2 + np.where(x <= 3, 2.5 * x.astype(float) ** 4, 0.0)
    costs = np.column_stack([np.zeros(X), c2])
    return AllocationModel(costs=costs, kappa=np.asarray(kappa, float),
                           gamma=[gamma], eps=eps, theta1=theta1,
                           horizon=horizon, name=f"ross-{which}")
