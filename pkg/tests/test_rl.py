import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idmdp.mdp import FiniteMdp, is_monotone, policy_evaluation, value_iteration
from idmdp.rl import (
    ThresholdPolicy,
    curve_to_csv,
    default_exploration,
    default_learning_rate,
    q_learning,
    rectified_l1_penalty,
    simulate,
    threshold_search,
)


class TestPenalty:
    def test_values(self):
        assert rectified_l1_penalty([1, 2, 2, 3]) == 0.0
        assert rectified_l1_penalty([3, 1, 2, 1]) == 3.0
        assert rectified_l1_penalty([[2, 1], [2, 1]]) == 2.0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=10))
    def test_zero_iff_monotone(self, mu):
        assert (rectified_l1_penalty(mu) == 0) == is_monotone(mu)


class TestThresholdPolicy:
    def test_to_policy(self):
        np.testing.assert_array_equal(ThresholdPolicy((2, 4), 4).to_policy(),
                                      [1, 2, 2, 3])
        np.testing.assert_array_equal(ThresholdPolicy((5,), 4).to_policy(),
                                      [1, 1, 1, 1])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 3), min_size=1, max_size=8))
    def test_round_trip(self, mu):
        mu = sorted(mu)
        tp = ThresholdPolicy.from_policy(mu, num_actions=3)
        np.testing.assert_array_equal(tp.to_policy(), mu)

    def test_rejects(self):
        with pytest.raises(ValueError):
            ThresholdPolicy((3, 2), 4)
        with pytest.raises(ValueError):
            ThresholdPolicy((0,), 4)
        with pytest.raises(ValueError):
            ThresholdPolicy.from_policy([2, 1])


class TestSimulate:
    def test_reproducible(self, toy):
        a = simulate(toy, [1, 2, 2, 3], seed=3, episodes=50, horizon=20)
        b = simulate(toy, [1, 2, 2, 3], seed=3, episodes=50, horizon=20)
        np.testing.assert_array_equal(a.returns, b.returns)

    def test_trajectories(self, toy):
        res = simulate(toy, [1, 2, 2, 3], seed=1, episodes=6, horizon=5,
                       start=2, streams=2, keep_trajectories=True)
        assert len(res.trajectories) == 2
        tr = res.trajectories[0]
        assert tr.states.shape == (3, 6) and tr.actions.shape == (3, 5)
        assert np.all(tr.states[:, 0] == 2)
        mu = np.array([1, 2, 2, 3])
        np.testing.assert_array_equal(tr.actions, mu[tr.states[:, :-1] - 1])

    def test_deterministic_chain(self):
        P = np.zeros((1, 2, 2))
        P[0, :, 1] = 1.0
        m = FiniteMdp(transitions=P, rewards=np.array([[1.0], [2.0]]), discount=0.5)
        res = simulate(m, [1, 1], seed=0, episodes=3, horizon=3, start=1)
        np.testing.assert_allclose(res.returns, 1 + 0.5 * 2 + 0.25 * 2)

    def test_unbiased(self, toy):
        res = simulate(toy, [1, 2, 2, 3], seed=11, episodes=4000, horizon=150,
                       start=1)
        v = policy_evaluation(toy, np.array([1, 2, 2, 3]))[0]
        assert abs(res.mean - v) < 4 * res.stderr + 0.9**150 * 30 / 0.1

    def test_bad_policy(self, toy):
        with pytest.raises(ValueError):
            simulate(toy, [1, 2], seed=0, episodes=1, horizon=2)


class TestQLearning:
    def test_schedules(self):
        assert default_learning_rate(0) == 1.0
        e = default_exploration(100)
        assert e(0) == 1.0 and e(50) == pytest.approx(0.05) and e(99) == 0.05

    def test_reproducible_and_curve(self, toy):
        a = q_learning(toy, seed=4, steps=2000, record_every=500)
        b = q_learning(toy, seed=4, steps=2000, record_every=500)
        np.testing.assert_array_equal(a.q, b.q)
        assert [row[0] for row in a.curve] == [0, 500, 1000, 1500, 2000]
        assert a.visits.sum() == 2000
        text = curve_to_csv(a.curve)
        assert text.splitlines()[0] == "step,value,penalty"

    def test_recovers_toy_policy(self, toy):
        res = q_learning(toy, seed=1, steps=200_000)
        np.testing.assert_array_equal(res.policy, value_iteration(toy).policy)

    def test_projection(self, toy):
        res = q_learning(toy, seed=2, steps=5000, project=True)
        assert is_monotone(res.projected) or res.projection_failed

    def test_constant_schedules(self, toy):
        res = q_learning(toy, seed=0, steps=100, learning_rate=0.1, exploration=1.0)
        assert np.all(res.visits.sum(axis=1) >= 0)

    def test_errors(self, toy):
        with pytest.raises(ValueError):
            q_learning(toy, seed=0, steps=10, exploration=1.5)
        with pytest.raises(ValueError):
            q_learning(toy.replace(discount=None), seed=0, steps=10)
        with pytest.raises(ValueError):
            q_learning(toy, seed=0, steps=10, q0=np.zeros((2, 2)))


class TestThresholdSearch:
    def test_toy(self, toy):
        res = threshold_search(toy, seed=1, budget=200_000)
        assert res.method == "lattice"
        assert res.policy.thresholds == (2, 4)
        assert res.baseline["penalty"] >= 0

    def test_local_search_budget(self):
        from idmdp.examples import build_example
        m = build_example("prospect")
        res = threshold_search(m, seed=0, budget=20_000, baseline=False)
        assert res.method == "local"
        assert res.samples_used <= 20_000
        assert is_monotone(res.policy.to_policy())

    def test_penalty_reported(self, ex3):
        res = threshold_search(ex3, lam=10.0, seed=1, budget=50_000)
        assert res.baseline["objective"] == pytest.approx(
            res.baseline["value"] - 10.0 * res.baseline["penalty"])
