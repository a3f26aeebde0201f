from fractions import Fraction

import numpy as np
import pytest

from idmdp.examples import TOY_REWARDS, build_example
from idmdp.mdp import FiniteMdp
from idmdp.structural import (
    CERTIFIED,
    FAIL,
    NA,
    NOT_CERTIFIED,
    PASS,
    check_a1,
    check_a2,
    check_a3,
    check_a4,
    check_a5,
    check_corollary1,
    check_single_crossing,
    check_submodular,
    check_supermodular,
    check_theorem1,
    check_theorem2,
    choose_monotone,
    find_common_schedule,
    id_intervals,
    q_diff_diagnostics,
    reward_id_intervals,
    transition_id_intervals,
)


def interval_by_hand(table, a):
    """Uniform interval for action pair (a, a+1) with exact fractions."""
    t = [[Fraction(v) for v in row] for row in table]
    lo, hi = Fraction(0), None
    for x in range(len(t)):
        for xb in range(x + 1, len(t)):
            lhs = t[xb][a + 1] - t[xb][a]
            rhs = t[x][a + 1] - t[x][a]
            if rhs > 0:
                hi = lhs / rhs if hi is None else min(hi, lhs / rhs)
            elif rhs < 0:
                lo = max(lo, lhs / rhs)
    return lo, hi


class TestIntervals:
    def test_toy_beta_exact(self, toy):
        lo, hi, ok = reward_id_intervals(toy).uniform()
        assert ok.all()
        for a in range(2):
            elo, ehi = interval_by_hand(TOY_REWARDS, a)
            assert lo[a] == pytest.approx(max(float(elo), 1e-12), abs=1e-12)
            if ehi is None:
                assert np.isinf(hi[a])
            else:
                assert hi[a] == pytest.approx(float(ehi), abs=1e-12)
        assert hi[0] == pytest.approx(1 / 6, abs=1e-12)

    def test_zero_rhs_negative_lhs_is_infeasible(self):
        table = np.array([[0.0, 0.0], [0.0, -1.0]])
        iv = id_intervals(table)
        assert not iv.all_feasible
        assert iv.witness["x"] == 1 and iv.witness["xbar"] == 2
        assert "zero increment" in iv.witness["reason"]

    def test_pairwise_interval_accessor(self):
        iv = id_intervals(np.array(TOY_REWARDS, float))
        lo, hi = iv.interval(2, 3, 1)
        assert hi == pytest.approx(1 / 6)

    def test_transition_orders(self, toy):
        for order in ("first", "second", "convex"):
            iv = transition_id_intervals(toy, order)
            assert iv.kind == f"alpha[{order}]"
        lo, hi, ok = transition_id_intervals(toy).uniform()
        assert ok.all()
        np.testing.assert_allclose(hi, [1.0, 1.0], atol=1e-12)


class TestSchedules:
    def test_choose_monotone(self):
        vals, bad = choose_monotone([0.1, 0.2], [0.5, np.inf])
        np.testing.assert_allclose(vals, [0.5, 0.5])
        assert bad is None

    def test_choose_monotone_infeasible(self):
        vals, bad = choose_monotone([0.6, 0.1], [1.0, 0.5])
        assert vals is None and bad == 1

    def test_toy_schedule(self, toy):
        sched = find_common_schedule(reward_id_intervals(toy),
                                     transition_id_intervals(toy))
        assert sched.feasible
        np.testing.assert_allclose(sched.values, [1 / 6, 1.0], atol=1e-12)

    def test_pairwise_mode(self, toy):
        sched = find_common_schedule(reward_id_intervals(toy),
                                     transition_id_intervals(toy), "pairwise")
        assert sched.feasible and sched.values.shape == (4, 4, 2)
        d = sched.to_dict()
        assert "1,2" in d["gamma"]

    def test_bad_mode(self, toy):
        with pytest.raises(ValueError):
            find_common_schedule(reward_id_intervals(toy),
                                 transition_id_intervals(toy), "global")


class TestTextbookConditions:
    def test_toy(self, toy):
        assert check_a1(toy).verdict == PASS
        assert check_a2(toy).verdict == PASS
        assert check_a5(toy).verdict == PASS
        assert check_a3(toy).verdict == FAIL

    def test_ex3_a4_fails_with_witness(self, ex3):
        r = check_a4(ex3)
        assert r.verdict == FAIL
        assert set(r.witness) >= {"action", "x", "xbar", "l"}

    def test_a1_witness(self):
        m = FiniteMdp(transitions=np.full((1, 2, 2), 0.5),
                      rewards=np.array([[1.0], [0.0]]), discount=0.5)
        r = check_a1(m)
        assert r.verdict == FAIL and r.witness["x"] == 1

    def test_a5_without_terminal(self):
        m = FiniteMdp(transitions=np.full((1, 2, 2), 0.5),
                      rewards=np.zeros((2, 1)), discount=0.5)
        assert check_a5(m).verdict == NA

    def test_super_and_submodular(self):
        t = np.array([[0.0, 0.0], [0.0, 1.0]])
        assert check_supermodular(t).passed
        assert not check_submodular(t).passed
        assert check_submodular(-t).passed


class TestReports:
    def test_toy_certified(self, toy):
        rep = check_theorem1(toy)
        assert rep.verdict == CERTIFIED
        assert rep["A3"].informational
        assert rep.to_dict()["schedule"]["mode"] == "uniform"

    def test_ex3(self, ex3):
        rep = check_theorem1(ex3)
        assert rep.certified
        assert rep["A4"].verdict == FAIL
        assert rep.schedule.values[0] == pytest.approx(20.0)

    def test_first_failure(self):
        m = FiniteMdp(transitions=np.full((2, 2, 2), 0.5),
                      rewards=np.array([[1.0, 0.0], [0.0, 1.0]]), discount=0.5)
        rep = check_theorem1(m)
        assert rep.verdict == NOT_CERTIFIED
        assert rep.first_failure().name == "A1"

    def test_corollary1_prospect(self):
        rep = check_corollary1(build_example("prospect"))
        assert rep.certified
        assert {c["crossing_state"] for c in rep.extra["crossings"]} == {50}

    def test_corollary1_na_when_ordered(self, toy):
        m = toy.restrict([2, 3]).replace(rewards=np.array(
            [[1.0, 2.0], [2.0, 3.0], [3.0, 4.0], [4.0, 5.0]]))
        rep = check_corollary1(m)
        assert rep["Ex1.1"].verdict in (NA, FAIL)

    def test_theorem2_variant_error(self, toy):
        with pytest.raises(ValueError):
            check_theorem2(toy, variant="theorem3")

    def test_bidiag(self):
        rep = check_theorem2(build_example("bidiag"))
        assert rep.certified and rep.direction == "decreasing"
        assert rep.schedule.mode == "pairwise"
        assert not rep["cost-supermodular"].passed

    def test_tridiag_corollary5(self):
        rep = check_theorem2(build_example("tridiag"), variant="corollary5")
        assert rep.certified and rep.direction == "increasing"


class TestDiagnostics:
    def test_sign_changes(self):
        sc = check_single_crossing([-1, -0.5, 0.0, 2, 3])
        assert sc.count == 1 and sc.single_crossing and sc.positions == (4,)
        sc = check_single_crossing([1, -1, 1])
        assert sc.count == 2 and not sc.single_crossing
        assert not check_single_crossing([1, -1]).single_crossing

    def test_q_diff(self):
        q = np.array([[0.0, -1.0, -2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
        d = q_diff_diagnostics(q)
        np.testing.assert_allclose(d.diffs[:, 0], [-1.0, 1.0, 0.0])
        assert d.sign_changes[1].count == 1
        assert not d.column_monotone(0)
        assert not d.supermodular
