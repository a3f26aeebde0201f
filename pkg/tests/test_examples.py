import numpy as np
import pytest

from idmdp.dominance import conditional_mean_profile
from idmdp.examples import (
    BUILDERS,
    SIGMOIDAL_ALT,
    ExampleSpec,
    build_concave_bidiagonal,
    build_delta_perturbation,
    build_example,
    build_perturbed_bidiagonal,
    build_prospect,
    build_tridiagonal,
    example_defaults,
    rescaled_delta,
    shift_family,
    sigmoidal_rewards,
)
from idmdp.exceptions import InvalidModelError
from idmdp.mdp import finite_horizon_dp, is_monotone, value_iteration
from idmdp.structural import (
    check_corollary1,
    check_single_crossing,
    check_theorem1,
    q_diff_diagnostics,
)


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_registry_builds(name):
    m = build_example(name)
    assert m.transitions.shape == (m.num_actions, m.num_states, m.num_states)
    np.testing.assert_allclose(m.transitions.sum(axis=2), 1.0, atol=1e-12)
    assert "horizon" in m.meta


def test_unknown_example():
    with pytest.raises(KeyError):
        build_example("nope")


def test_example_spec():
    spec = ExampleSpec("toy").with_params(discount=0.5)
    assert spec.build().discount == 0.5
    with pytest.raises(TypeError):
        ExampleSpec("toy", {"colour": 1})
    assert example_defaults("toy") == {"discount": 0.9, "horizon": 100}


class TestShiftFamily:
    def test_rows_shift(self):
        P = shift_family(5, 2, drift=0.01, eps=0.02, split=2)
        e = np.zeros(5)
        e[0], e[-1] = -1.0, 1.0
        np.testing.assert_allclose(P[0, 1] - P[0, 0], 0.01 * e)
        np.testing.assert_allclose(P[1, 0] - P[0, 0], -0.02 * e)
        np.testing.assert_allclose(P[1, 4] - P[0, 4], 0.02 * e)

    def test_infeasible_rows(self):
        with pytest.raises(InvalidModelError, match="row"):
            shift_family(3, 2, drift=0.5, eps=0.0, split=1)

    def test_bad_base_row(self):
        with pytest.raises(InvalidModelError):
            shift_family(3, 2, 0.0, 0.0, 1, base_row=[0.5, 0.5, 0.5])


class TestSigmoidal:
    def test_reward_formula(self):
        r = sigmoidal_rewards(201)
        x = 10.0
        assert r[9, 0] == pytest.approx(2.0 / (1 + np.exp((x - 200) / 20)))
        assert r[9, 2] == pytest.approx(5 * (1 - np.exp(-x / 80)) - 3.5 + 0.01 * x)

    def test_alt_preset_properties(self):
        m = build_example("sigmoidal-alt")
        rep = check_corollary1(m)
        assert rep.certified
        crossings = [c["crossing_state"] for c in rep.extra["crossings"]]
        assert crossings == [42, 151]
        sol = finite_horizon_dp(m, m.meta["horizon"])
        diag = q_diff_diagnostics(sol.q[0])
        assert diag.sign_changes[1].count == 3
        assert not diag.column_monotone(0)
        assert is_monotone(sol.policy)

    def test_alt_theta_increasing_sigmoid(self):
        r = sigmoidal_rewards(201, SIGMOIDAL_ALT["theta"])
        assert np.all(np.diff(r, axis=0) > 0)


class TestProspect:
    def test_rewards(self):
        m = build_prospect()
        assert m.rewards[0] == pytest.approx([-1.0] * 3)
        np.testing.assert_allclose(m.rewards[49], 0.0, atol=1e-12)

    def test_odd_x(self):
        with pytest.raises(InvalidModelError):
            build_prospect(X=11)

    def test_policy_monotone(self):
        m = build_prospect()
        sol = value_iteration(m)
        assert is_monotone(sol.policy)


class TestDelta:
    def test_common_scale_certifies(self):
        X = 60
        p = np.full(X, 1.0 / X)
        curves = sigmoidal_rewards(X, SIGMOIDAL_ALT["theta"])
        D = rescaled_delta(curves, p)
        m = build_delta_perturbation(p, D, phi=np.linspace(0, 1, X))
        assert check_theorem1(m).certified

    def test_rejects_bad_delta(self):
        p = np.full(4, 0.25)
        with pytest.raises(InvalidModelError, match="state 1"):
            build_delta_perturbation(p, np.full((4, 2), 0.1), np.arange(4.0))
        D = np.array([[0, 0], [0.1, 0.0], [0.1, 0.1], [0.1, 0.2]])
        with pytest.raises(InvalidModelError):
            build_delta_perturbation(p, D[:, ::-1] * [1, -1], np.arange(4.0))


class TestBidiagonal:
    def test_ex3_first_row(self, ex3):
        np.testing.assert_allclose(ex3.transitions[0, 0],
                                   [0.999, 0, 0, 0, 0, 0.001], atol=1e-15)

    def test_eps_guard(self):
        with pytest.raises(InvalidModelError, match="supermodularity"):
            build_perturbed_bidiagonal(theta=(0.3, 0.32), eps=0.05)
        m = build_perturbed_bidiagonal(theta=(0.3, 0.32), eps=0.05,
                                       allow_supermodular=True)
        assert m.num_states == 6

    def test_concave_swap(self):
        m = build_concave_bidiagonal()
        assert m.rewards[0, 1] < m.rewards[0, 0]
        sol = finite_horizon_dp(m, 200)
        assert is_monotone(sol.policy, decreasing=True)
        lit = build_concave_bidiagonal(swap_costs=False)
        assert not is_monotone(finite_horizon_dp(lit, 200).policy[0], decreasing=True)

    def test_theta_pair(self):
        with pytest.raises(InvalidModelError):
            build_concave_bidiagonal(theta=(0.6, 0.7))


class TestTridiagonal:
    def test_rows(self):
        m = build_tridiagonal()
        P = m.transitions
        assert P[0, 0, 0] == 1.0
        assert P[0, 5, 4] == pytest.approx(0.2) and P[0, 5, 6] == pytest.approx(0.05)
        assert P[1, -1, -1] == 1.0

    def test_mean_convex_increasing(self):
        for P in build_tridiagonal().transitions:
            prof = conditional_mean_profile(P)
            assert prof.increasing and prof.convex

    def test_rejects(self):
        with pytest.raises(InvalidModelError):
            build_tridiagonal(q=(0.3, 0.1))
