import math

import numpy as np
import pytest

from myopic_rmab.instance import Instance
from myopic_rmab.planner import (
    NodeCapExceeded, VerificationFailure, lemma4_bound_check, lemma5_check, myopic_value,
    optimal_value, policy_value, pseudo_value, symmetry_check, tree_node_count,
)
from myopic_rmab.policy import FixedPolicy, MyopicPolicy


@pytest.fixture
def two_step():
    return Instance.create([(0.2, 0.8), (0.3, 0.7)], epsilon=0.0, delta=0.0, k=1, T=2, beta=1.0,
                           initial_belief=(0.5, 0.6))


def test_hand_enumerated_optimum(two_step):
    rep = optimal_value(two_step)
    assert rep.value == pytest.approx(1.22, abs=1e-12)
    assert rep.first_actions == [(1,)]
    np.testing.assert_allclose([rep.q_values[(0,)], rep.q_values[(1,)]], [1.17, 1.22], atol=1e-12)


def test_pseudo_values(two_step):
    assert pseudo_value(two_step, 1, two_step.belief0, (1,)) == pytest.approx(1.22, abs=1e-12)
    assert pseudo_value(two_step, 1, two_step.belief0, (0,)) == pytest.approx(1.17, abs=1e-12)
    # last slot: W_T is F of the chosen set
    assert pseudo_value(two_step, 2, [0.3, 0.4], (1,)) == pytest.approx(0.4)


def test_fixed_policy_value(two_step):
    # always sense channel 0: 0.5 + (0.5*0.8 + 0.5*0.2)
    assert policy_value(two_step, FixedPolicy([0])) == pytest.approx(1.0, abs=1e-12)


def test_myopic_policy_value_is_w1(two_step):
    pol = MyopicPolicy(two_step.channels, 1)
    assert policy_value(two_step, pol) == pytest.approx(myopic_value(two_step), abs=1e-15)


def test_single_slot():
    inst = Instance.create([(0.2, 0.8), (0.1, 0.9), (0.3, 0.6)], k=1, T=1, initial_belief=(0.3, 0.7, 0.5))
    assert optimal_value(inst).value == pytest.approx(0.7)


def test_zero_discount_matches_single_slot():
    base = Instance.create([(0.2, 0.8), (0.1, 0.9), (0.3, 0.6)], epsilon=0.1, k=2, T=4, beta=0.0,
                           reward="power", reward_param=2.0, initial_belief=(0.3, 0.7, 0.5))
    assert optimal_value(base).value == pytest.approx(optimal_value(base.with_(T=1)).value, abs=1e-15)


def test_node_count_and_cap(two_step, monkeypatch):
    assert optimal_value(two_step).node_count == tree_node_count(two_step) == 5
    with pytest.raises(NodeCapExceeded):
        optimal_value(two_step.with_(T=6), cap=100)
    monkeypatch.setenv("RMAB_NODE_CAP", "50")
    with pytest.raises(NodeCapExceeded):
        optimal_value(two_step.with_(T=6))


def test_optimum_dominates_myopic():
    rng = np.random.default_rng(21)
    for _ in range(30):
        pairs = [tuple(np.sort(rng.random(2))) for _ in range(3)]
        inst = Instance.create(pairs, epsilon=rng.uniform(0, 0.3), k=int(rng.integers(1, 3)),
                               T=3, beta=rng.random(), initial_belief=tuple(rng.random(3)))
        assert optimal_value(inst).value >= myopic_value(inst) - 1e-12


def test_myopic_violations_found_on_known_counterexample():
    inst = Instance.create(
        [(0.5939724774630539, 0.685405227519041), (0.3742161738422164, 0.4001894705009488),
         (0.21877469878040479, 0.842165465892481)],
        epsilon=0.16103114451231007, delta=0.22508713678040007, k=1, T=2, beta=0.814919511240928,
        initial_belief=(0.6749783184812574, 0.7866923856394351, 0.7463074957784237))
    rep = optimal_value(inst, check_myopic=True)
    assert rep.first_actions == [(2,)]
    assert rep.myopic_violations >= 1
    assert rep.value - myopic_value(inst) == pytest.approx(0.026577808948685444, rel=1e-9)


def test_lemma4_examples(two_step):
    rep = lemma4_bound_check(two_step, 1, 0, 0.4, 0.4, [0.4, 0.6])
    assert rep.value == 0.0 and rep.holds
    # l outside both sets at t = T: difference is exactly 0
    three = Instance.create([(0.2, 0.8)] * 3, epsilon=0.1, k=1, T=3, beta=0.9)
    rep = lemma4_bound_check(three, 3, 2, 0.1, 0.3, [0.7, 0.5, 0.0])
    assert rep.case == "l outside A' and A" and rep.value == 0.0 and rep.holds


def test_lemma5_with_zero_discount():
    inst = Instance.create([(0.2, 0.8), (0.1, 0.5), (0.3, 0.9)], epsilon=0.1, k=1, T=3, beta=0.0)
    rep = lemma5_check(inst, 1, [0.6, 0.4, 0.5], 0, 1)
    assert rep.holds and rep.value == pytest.approx(0.9 * 0.2)
    with pytest.raises(ValueError):
        lemma5_check(inst, 1, [0.4, 0.4, 0.5], 0, 1)


def test_symmetry_examples():
    inst = Instance.create([(0.2, 0.8)] * 3, epsilon=0.1, k=2, T=3, beta=0.9)
    b = [0.3, 0.6, 0.5]
    assert symmetry_check(inst, 1, b, (0, 1), 0, 1).holds
    assert symmetry_check(inst, 1, b, (0, 1), 0, 0).value == 0.0
    het = Instance.create([(0.2, 0.8), (0.1, 0.6), (0.3, 0.7), (0.05, 0.9)], epsilon=0.2, k=2, T=3, beta=0.7)
    assert symmetry_check(het, 1, [0.3, 0.6, 0.5, 0.2], (0, 1), 2, 3).holds
    with pytest.raises(ValueError):
        symmetry_check(het, 1, [0.3, 0.6, 0.5, 0.2], (0, 1), 0, 3)


def test_require_raises_with_context():
    inst = Instance.create([(0.59, 0.69), (0.37, 0.40), (0.22, 0.84)], epsilon=0.16, k=1, T=2, beta=0.81)
    rep = lemma5_check(inst, 1, [0.675, 0.787, 0.746], 1, 2)
    assert not rep.holds
    with pytest.raises(VerificationFailure) as info:
        rep.require()
    assert info.value.context["l"] == 1 and math.isfinite(rep.value)
