"""Constructors for the worked MDP instances.

Every builder returns a :class:`~idmdp.mdp.FiniteMdp` whose ``meta`` dict
records the builder name, its parameters and the horizon used for the
finite-horizon runs. All parameters can be overridden by keyword.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidModelError
from .mdp import FiniteMdp
from .structural import choose_monotone, id_intervals

SIGMOIDAL_THETA = (2.0, None, 20.0, 5.0, 80.0, -2.0, 5.0, 80.0, -3.5, 0.01)

# Increasing sigmoid centred mid-range with a steeper slope, and transition
# splits placed at the two reward crossings. With these values the
# crossing-state conditions hold and Q(., 3) - Q(., 1) changes sign three
# times; the printed parameters above give a decreasing r(., 1).
SIGMOIDAL_ALT = {"theta": (2.0, 100.0, -10.0, 5.0, 80.0, -2.0, 5.0, 80.0, -3.5, 0.01),
                 "split": (41, 150)}

TOY_REWARDS = [[12, 4, 0], [16, 22, 18], [22, 23, 20], [24, 28, 30]]
TOY_TRANSITIONS = [
    [[0.3, 0.4, 0.2, 0.1], [0.2, 0.4, 0.2, 0.2],
     [0.2, 0.4, 0.1, 0.3], [0.2, 0.3, 0.1, 0.4]],
    [[0.3, 0.3, 0.2, 0.2], [0.2, 0.3, 0.2, 0.3],
     [0.2, 0.3, 0.1, 0.4], [0.2, 0.2, 0.1, 0.5]],
    [[0.3, 0.3, 0.1, 0.3], [0.2, 0.3, 0.1, 0.4],
     [0.2, 0.2, 0.1, 0.5], [0.1, 0.2, 0.1, 0.6]],
]

# reward table of the perturbed bi-diagonal example, one row per action
BIDIAG_REWARDS = [[1, 3.5, 6, 6, 11, 43], [0, 2, 3, 6, 12, 63]]


def _unit_shift(X):
    """Row vector ``e_X - e_1``."""
    v = np.zeros(X)
    v[0], v[-1] = -1.0, 1.0
    return v


def _check_rows(P, what):
    bad = np.argwhere(P < -1e-12)
    if bad.size:
        a, i, j = bad[0]
        raise InvalidModelError(
            f"{what}: row {i + 1} of P({a + 1}) has negative entry "
            f"{P[a, i, j]:.3g} at column {j + 1}")
    return np.clip(P, 0.0, None)


def build_toy(discount=0.9, horizon=100):
    """Four states, three actions; rewards violate single crossing."""
    return FiniteMdp(
        transitions=np.array(TOY_TRANSITIONS), rewards=np.array(TOY_REWARDS),
        discount=discount, terminal=np.zeros(4), name="toy",
        meta={"builder": "toy", "horizon": horizon})


def sigmoidal_rewards(X, theta=None):
    """Sigmoidal, concave and concave-plus-linear reward curves, shape (X, 3)."""
    th = list(SIGMOIDAL_THETA if theta is None else theta)
    if th[1] is None:
        th[1] = X - 1
    x = np.arange(1, X + 1, dtype=float)
    r1 = th[0] / (1.0 + np.exp((x - th[1]) / th[2]))
    r2 = th[3] * (1.0 - np.exp(-x / th[4])) + th[5]
    r3 = th[6] * (1.0 - np.exp(-x / th[7])) + th[8] + th[9] * x
    return np.column_stack([r1, r2, r3])


def shift_family(X, A, drift, eps, split, base_row=None):
    """Rows drifting by ``drift (e_X - e_1)`` per state, actions shifted by eps.

    ``P_i(1) = P_{i-1}(1) + drift (e_X - e_1)`` and
    ``P_i(a+1) = P_i(a) -/+ eps (e_X - e_1)`` with the minus sign for
    ``i <= split`` and plus above it. ``split`` may also be a sequence with
    one entry per adjacent action pair.
    """
    base = np.full(X, 1.0 / X) if base_row is None else np.asarray(base_row, float)
    if base.shape != (X,) or abs(base.sum() - 1.0) > 1e-9:
        raise InvalidModelError("base row must be a length-X probability vector")
    splits = np.broadcast_to(np.asarray(split), (A - 1,))
    e = _unit_shift(X)
    i = np.arange(1, X + 1)
    P = np.empty((A, X, X))
    P[0] = base[None, :] + ((i - 1) * drift)[:, None] * e[None, :]
    for a in range(A - 1):
        sign = np.where(i <= splits[a], -1.0, 1.0)
        P[a + 1] = P[a] + (sign * eps)[:, None] * e[None, :]
    return _check_rows(P, "shift family")


def build_sigmoidal(X=201, discount=0.9, horizon=100, drift=None, eps=None,
                    theta=None, split=50, base_row=None):
    """Sigmoidal/concave rewards with the eps-shift transition family."""
    drift = 0.004 / X if drift is None else drift
    eps = 0.05 / X if eps is None else eps
    P = shift_family(X, 3, drift, eps, split, base_row)
    return FiniteMdp(
        transitions=P, rewards=sigmoidal_rewards(X, theta), discount=discount,
        terminal=np.zeros(X), name="sigmoidal",
        meta={"builder": "sigmoidal", "horizon": horizon, "X": X,
              "drift": drift, "eps": eps, "split": np.asarray(split).tolist()})


def prospect_rewards(X, theta):
    mu = 2.0 / (X - 2)
    y = (mu * (np.arange(1, X + 1) - 1.0))[:, None] ** np.asarray(theta)[None, :]
    return 2.0 * y / (1.0 + y) - 1.0


def build_prospect(X=100, theta=(1.2, 1.6, 2.0), discount=0.9, horizon=100,
                   drift=None, eps=None, base_row=None):
    """Prospect-theory rewards; transitions flip dominance at ``X / 2``."""
    if X % 2:
        raise InvalidModelError("X must be even")
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 1) or np.any(np.diff(th) <= 0):
        raise InvalidModelError("theta must exceed 1 and increase in the action")
    drift = 0.004 / X if drift is None else drift
    eps = 0.05 / X if eps is None else eps
    # states below X/2 get the dominated shift, X/2 and above the dominating one
    P = shift_family(X, len(th), drift, eps, X // 2 - 1, base_row)
    return FiniteMdp(
        transitions=P, rewards=prospect_rewards(X, th), discount=discount,
        terminal=np.zeros(X), name="prospect",
        meta={"builder": "prospect", "horizon": horizon, "X": X,
              "theta": th.tolist()})


def build_delta_perturbation(p, delta, phi, discount=0.9, horizon=100, tol=1e-12):
    """Rows ``p + delta[i, a] (e_X - e_1)`` with state-only rewards ``phi``."""
    p = np.asarray(p, dtype=float)
    D = np.asarray(delta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    X = p.size
    if D.ndim != 2 or D.shape[0] != X:
        raise InvalidModelError(f"delta must have shape ({X}, A)")
    if phi.shape != (X,):
        raise InvalidModelError("phi must have length X")
    if np.any(phi < -tol) or np.any(np.diff(phi) < -tol):
        raise InvalidModelError("phi must be non-negative and non-decreasing")
    if np.any(np.abs(D[0]) > tol):
        raise InvalidModelError("delta must vanish in state 1")
    cap = min(p[0], 1.0 - p[-1])
    if np.any(D < -tol) or np.any(D > cap + tol):
        raise InvalidModelError(f"delta must lie in [0, {cap}]")
    if np.any(np.diff(D, axis=0) < -tol):
        raise InvalidModelError("delta must be non-decreasing in the state")
    iv = id_intervals(D, kind="delta")
    lo, hi, ok = iv.uniform()
    vals, _ = choose_monotone(lo, hi) if ok.all() else (None, None)
    if vals is None and not _pairwise_ok(iv):
        raise InvalidModelError("delta does not satisfy interval dominance")
    A = D.shape[1]
    e = _unit_shift(X)
    P = p[None, None, :] + D.T[:, :, None] * e[None, None, :]
    return FiniteMdp(
        transitions=_check_rows(P, "delta perturbation"),
        rewards=np.repeat(phi[:, None], A, axis=1), discount=discount,
        terminal=np.zeros(X), name="delta",
        meta={"builder": "delta", "horizon": horizon})


def _pairwise_ok(iv):
    X = iv.lower.shape[0]
    for x in range(X):
        for xb in range(x + 1, X):
            if not iv.feasible[x, xb].all():
                return False
            if choose_monotone(iv.lower[x, xb], iv.upper[x, xb])[0] is None:
                return False
    return True


def rescaled_delta(curves, p):
    """Shift each column of ``curves`` to start at 0 and scale into the cap.

    A single scale is shared by all columns so the interval-dominance
    ratios of the curves are preserved.
    """
    c = np.asarray(curves, dtype=float)
    shifted = c - c[:1]
    cap = min(p[0], 1.0 - p[-1])
    top = shifted.max()
    return shifted * (cap / top) if top > 0 else shifted


def perturbed_bidiagonal(X, theta, eps):
    """Bi-diagonal matrices with a jump of size ``(A - a) eps`` to state X.

    Action ``a`` moves one state down with probability ``theta[a]``.
    """
    th = np.asarray(theta, dtype=float)
    A = th.size
    P = np.zeros((A, X, X))
    for a in range(A):
        jump = (A - 1 - a) * eps
        P[a, 0, 0] = 1.0 - jump
        P[a, 0, X - 1] += jump
        for i in range(1, X - 1):
            P[a, i, i] = 1.0 - th[a] - jump
            P[a, i, i - 1] = th[a]
            P[a, i, X - 1] += jump
        P[a, X - 1, X - 2] = th[a]
        P[a, X - 1, X - 1] = 1.0 - th[a]
    return _check_rows(P, "perturbed bi-diagonal")


def build_perturbed_bidiagonal(theta=None, eps=1e-3, rewards=None,
                               discount=0.9, horizon=200,
                               allow_supermodular=False):
    """Perturbed bi-diagonal transitions with eps below every theta gap."""
    th = np.array([0.3, 0.3 + 20 * eps] if theta is None else theta, dtype=float)
    r = np.asarray(BIDIAG_REWARDS if rewards is None else rewards, dtype=float).T
    X = r.shape[0]
    if r.shape[1] != th.size:
        raise InvalidModelError("rewards need one column per theta entry")
    gaps = np.diff(th)
    if np.any(gaps <= 0):
        raise InvalidModelError("theta must increase in the action")
    if not allow_supermodular and eps >= gaps.min():
        raise InvalidModelError(
            f"eps={eps} >= min theta gap {gaps.min()} restores supermodularity; "
            "pass allow_supermodular=True to build it anyway")
    return FiniteMdp(
        transitions=perturbed_bidiagonal(X, th, eps), rewards=r,
        discount=discount, terminal=np.zeros(X), name="bidiagonal-perturbed",
        meta={"builder": "ex3", "horizon": horizon, "theta": th.tolist(),
              "eps": eps})


def bidiagonal(X, theta):
    """Upward bi-diagonal matrices: stay with ``1 - theta``, step up with ``theta``."""
    th = np.asarray(theta, dtype=float)
    P = np.zeros((th.size, X, X))
    for a, t in enumerate(th):
        idx = np.arange(X - 1)
        P[a, idx, idx] = 1.0 - t
        P[a, idx, idx + 1] = t
        P[a, X - 1, X - 1] = 1.0
    return P


def build_concave_bidiagonal(X=50, theta=(0.8, 0.7),
                             cost_theta=(-0.01, 1.0, 8.8, 25.0, -0.1, -0.4),
                             discount=0.95, horizon=200, swap_costs=True):
    """Min-cost model with bi-diagonal transitions and concave costs.

    The cost curves are a quadratic and a saturating exponential. By
    default the exponential is action 1 and the quadratic action 2, so the
    cheaper action at state 1 is action 2 and the curves cross once;
    ``swap_costs=False`` uses the opposite assignment, under which the
    solved policy is not monotone.
    """
    th = np.asarray(theta, dtype=float)
    if th.size != 2 or th[1] > th[0]:
        raise InvalidModelError("theta must be a decreasing pair")
    c = cost_theta
    x = np.arange(1, X + 1, dtype=float)
    quad = c[0] * x**2 + c[1] * x + c[2]
    sat = c[3] * (1.0 - np.exp(c[4] * x + c[5]))
    cost = np.column_stack([sat, quad] if swap_costs else [quad, sat])
    return FiniteMdp(
        transitions=bidiagonal(X, th), rewards=cost, discount=discount,
        terminal=np.zeros(X), objective="min", name="bidiagonal-concave",
        meta={"builder": "bidiag", "horizon": horizon, "X": X,
              "swap_costs": swap_costs})


def tridiagonal(X, down, up, stay_top):
    """Tri-diagonal rows: down with ``down[a]``, up with ``up[a]``.

    State 1 is absorbing; state X stays with ``stay_top[a]`` and steps
    down otherwise.
    """
    A = len(down)
    P = np.zeros((A, X, X))
    for a in range(A):
        P[a, 0, 0] = 1.0
        for i in range(1, X - 1):
            P[a, i, i - 1] = down[a]
            P[a, i, i + 1] = up[a]
            P[a, i, i] = 1.0 - down[a] - up[a]
        P[a, X - 1, X - 1] = stay_top[a]
        P[a, X - 1, X - 2] = 1.0 - stay_top[a]
    return _check_rows(P, "tri-diagonal")


def build_tridiagonal(X=35, p=(0.2, 0.1), q=(0.05, 0.1), s=(0.95, 1.0),
                      cost_theta=(15.0, 0.3 / 4**3, 1.0, 3.0 / 4**3),
                      discount=0.95, horizon=200, tol=1e-12):
    """Min-cost model with tri-diagonal transitions and cubic costs."""
    p, q, s = (np.asarray(v, dtype=float) for v in (p, q, s))
    # the defaults sit on the boundary for action 2, so compare weakly
    if np.any(q > p + tol) or np.any(s < 1 + q - p - tol):
        raise InvalidModelError("need q_a <= p_a and s_a >= 1 + q_a - p_a")
    if np.any(np.diff(q) < -tol) or np.any(np.diff(p) > tol):
        raise InvalidModelError("need q increasing and p decreasing in the action")
    c = cost_theta
    x = np.arange(1, X + 1, dtype=float)
    cost = np.column_stack([-(c[0] + c[1] * x**3), -(c[2] + c[3] * x**3)])
    return FiniteMdp(
        transitions=tridiagonal(X, p, q, s), rewards=cost, discount=discount,
        terminal=np.zeros(X), objective="min", name="tridiagonal",
        meta={"builder": "tridiag", "horizon": horizon, "X": X})


def build_sigmoidal_alt(X=201, discount=0.9, horizon=100, drift=None, eps=None,
                        theta=SIGMOIDAL_ALT["theta"],
                        split=SIGMOIDAL_ALT["split"], base_row=None):
    """:func:`build_sigmoidal` with the increasing-sigmoid preset."""
    mdp = build_sigmoidal(X, discount, horizon, drift, eps, theta, split, base_row)
    return mdp.replace(name="sigmoidal-alt")


BUILDERS = {
    "toy": build_toy,
    "sigmoidal": build_sigmoidal,
    "ex1": build_sigmoidal,
    "sigmoidal-alt": build_sigmoidal_alt,
    "prospect": build_prospect,
    "ex3": build_perturbed_bidiagonal,
    "bidiag": build_concave_bidiagonal,
    "tridiag": build_tridiagonal,
}


def _builder(name):
    try:
        return BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(BUILDERS)}") from None


def build_example(name, **overrides):
    return _builder(name)(**overrides)


def example_defaults(name):
    """Keyword defaults of the named builder."""
    sig = inspect.signature(_builder(name))
    return {k: p.default for k, p in sig.parameters.items()
            if p.default is not inspect.Parameter.empty}


@dataclass(frozen=True)
class ExampleSpec:
    """A named example plus parameter overrides."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _builder(self.name)
        unknown = set(self.params) - set(example_defaults(self.name))
        if unknown:
            raise TypeError(f"unknown parameters for {self.name}: {sorted(unknown)}")

    def with_params(self, **params):
        return ExampleSpec(self.name, {**self.params, **params})

    def build(self):
        return build_example(self.name, **self.params)
