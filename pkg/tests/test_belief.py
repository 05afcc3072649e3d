import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from myopic_rmab.belief import (
    ChannelModel, SensingModel, enumerate_actions, enumerate_outcomes, outcome_probability, phi,
    stationary_belief, tau, update_belief,
)

probs = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("p01,p11,w,expected", [
    (0.2, 0.8, 0.5, 0.5),
    (0.2, 0.8, 0.0, 0.2),
    (0.3, 0.9, 0.4, 0.54),
])
def test_tau_examples(p01, p11, w, expected):
    assert tau(ChannelModel(p01, p11), w) == pytest.approx(expected, abs=1e-15)


def test_tau_vectorised():
    ch = ChannelModel(0.2, 0.8)
    np.testing.assert_allclose(tau(ch, [0.0, 0.5, 1.0]), [0.2, 0.5, 0.8])


@pytest.mark.parametrize("eps,w,expected", [(0.3, 0.0, 0.0), (0.5, 1.0, 1.0), (0.1, 0.5, 0.1 / 1.1)])
def test_phi_examples(eps, w, expected):
    assert phi(SensingModel(eps, 0.0), w) == pytest.approx(expected, rel=1e-15)


def test_phi_perfect_sensing_at_certainty():
    # 0/0 point: a NACK cannot happen, the value is defined as 1
    assert phi(0.0, 1.0) == 1.0
    assert phi(0.0, 0.7) == 0.0


@pytest.mark.parametrize("p01,p11,expected", [(0.2, 0.8, 0.5), (0.1, 0.9, 0.5)])
def test_stationary_examples(p01, p11, expected):
    ch = ChannelModel(p01, p11)
    w = stationary_belief(ch)
    assert w == pytest.approx(expected)
    assert tau(ch, w) == pytest.approx(w, abs=1e-15)


def test_stationary_near_iid_limit():
    assert stationary_belief(ChannelModel(0.3, 0.3 + 1e-9)) == pytest.approx(0.3, abs=1e-8)


def test_update_examples():
    chans = [ChannelModel(0.2, 0.8), ChannelModel(0.3, 0.7)]
    b = update_belief([0.6, 0.4], chans, SensingModel(0.1, 0.0), [0], [0])
    np.testing.assert_allclose(b, [0.8, tau(chans[1], 0.4)])
    b = update_belief([0.6, 0.4], chans, SensingModel(0.0, 0.0), [0], [])
    assert b[0] == pytest.approx(0.2)
    b = update_belief([0.5, 0.4], chans, SensingModel(0.1, 0.0), [0], [])
    assert b[0] == pytest.approx(0.2545454545454545, abs=1e-15)


@pytest.mark.parametrize("bad", [dict(p01=0.5, p11=0.5), dict(p01=-0.1, p11=0.5), dict(p01=0.1, p11=1.2)])
def test_channel_validation(bad):
    with pytest.raises(ValueError):
        ChannelModel(**bad)


def test_sensing_validation():
    with pytest.raises(ValueError):
        SensingModel(1.2, 0.0)
    with pytest.raises(ValueError):
        SensingModel(0.1, -0.1)


def test_update_rejects_ack_outside_action():
    chans = [ChannelModel(0.2, 0.8)] * 3
    with pytest.raises(ValueError):
        update_belief([0.5] * 3, chans, SensingModel(0.1, 0.0), [0], [1])


def test_outcome_examples():
    s0 = SensingModel(0.0, 0.0)
    assert outcome_probability([0.5, 0.5], s0, [0, 1], [0, 1]) == pytest.approx(0.25)
    # epsilon -> 1 limit (epsilon = 1 itself is outside the model)
    near_one = SensingModel(float(np.nextafter(1.0, 0.0)), 0.0)
    assert outcome_probability([0.3, 0.9], near_one, [0, 1], []) == pytest.approx(1.0, abs=1e-15)


def test_enumerate_outcomes():
    assert enumerate_outcomes([2]) == [(), (2,)]
    assert enumerate_outcomes([0, 3]) == [(), (0,), (3,), (0, 3)]
    with pytest.raises(ValueError):
        enumerate_outcomes([])


def test_enumerate_actions_count():
    assert len(enumerate_actions(5, 2)) == 10
    assert enumerate_actions(3, 2)[0] == (0, 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(probs, min_size=1, max_size=4), st.floats(0.0, 0.99))
def test_outcome_law_sums_to_one(w, eps):
    action = list(range(len(w)))
    total = sum(outcome_probability(w, SensingModel(eps, 0.0), action, e) for e in enumerate_outcomes(action))
    assert total == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 0.49), st.floats(0.51, 0.999), probs, st.floats(0.0, 0.99))
def test_updates_stay_between_p01_and_p11(p01, p11, w, eps):
    ch = ChannelModel(p01, p11)
    s = SensingModel(eps, 0.0)
    for outcome in ([], [0]):
        b = update_belief([w], [ch], s, [0], outcome)[0]
        assert p01 - 1e-15 <= b <= p11 + 1e-15
    assert p01 - 1e-15 <= tau(ch, w) <= p11 + 1e-15
    # nack never raises a belief above its passive prediction
    assert update_belief([w], [ch], s, [0], [])[0] <= tau(ch, w) + 1e-15
