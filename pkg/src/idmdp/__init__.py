"""Monotone-policy analysis for finite Markov decision processes."""

from .exceptions import (
    ConvergenceError,
    GuardExceededError,
    InvalidModelError,
    NumericalError,
)
from .mdp import (
    FiniteMdp,
    bellman_backup,
    brute_force_optimal,
    extract_monotone_selection,
    finite_horizon_dp,
    greedy_policy,
    is_monotone,
    policy_evaluation,
    value_iteration,
)
from .structural import (
    CERTIFIED,
    check_corollary1,
    check_theorem1,
    check_theorem2,
    find_common_schedule,
    q_diff_diagnostics,
    reward_id_intervals,
    transition_id_intervals,
)

__version__ = "0.1.0"
