import json

import numpy as np
import pytest

from myopic_rmab import simulator
from myopic_rmab.instance import Instance
from myopic_rmab.planner import policy_value
from myopic_rmab.policy import FixedPolicy, MyopicPolicy, RandomPolicy
from myopic_rmab.simulator import (
    agreement_z, episode_uniforms, simulate, simulate_belief_level, simulate_channel_level,
    write_jsonl,
)


def small():
    return Instance.create([(0.2, 0.8), (0.1, 0.6), (0.3, 0.9)], epsilon=0.1, delta=0.2, k=1, T=3,
                           beta=0.9, initial_belief=(0.5, 0.4, 0.6))


def myopic(inst):
    return MyopicPolicy(inst.channels, inst.k)


def test_certainty_start():
    inst = Instance.create([(0.2, 0.8), (0.3, 0.7)], k=2, T=2, beta=0.5, initial_belief=(1.0, 1.0))
    for fid in ("belief", "channel"):
        stats, _ = simulate(inst, myopic(inst), 200, 0, fid)
        assert stats.mean_reward == pytest.approx(2.0 + 0.5 * 1.5, abs=1e-14)
        assert stats.std_error == pytest.approx(0.0, abs=1e-14)


def test_miss_detection_always_collides():
    inst = Instance.create([(0.2, 0.8)], epsilon=0.0, delta=1.0, k=1, T=1, initial_belief=(0.0,))
    stats, logs = simulate(inst, myopic(inst), 100, 3, "channel", log_episodes=1)
    assert stats.collision_rate == 1.0 and stats.mean_success == 0.0
    rec = logs[0]
    assert rec["state"] == [0] and rec["sensed_good"] == [1]
    assert rec["collision"] == [1] and rec["ack"] == [0]


def test_no_acks_in_epsilon_limit():
    inst = small().with_(sensing=small().sensing.__class__(float(np.nextafter(1.0, 0.0)), 0.2))
    for fid in ("belief", "channel"):
        stats, logs = simulate(inst, myopic(inst), 500, 1, fid, log_episodes=5)
        assert stats.mean_success == 0.0
        assert all(r["ack"] == [0] for r in logs)
    # without ACKs the belief path is the same in every episode
    paths = {tuple(r["belief_after"]) for r in logs if r["slot"] == 3}
    assert len(paths) == 1


def test_episode_logs_respect_invariants():
    inst = small().with_(k=2)
    _, logs = simulate(inst, myopic(inst), 50, 4, "channel", log_episodes=20)
    assert len(logs) == 20 * inst.T
    for r in logs:
        states = [r["state"][i] for i in r["action"]]
        for s, sg, ack, col in zip(states, r["sensed_good"], r["ack"], r["collision"]):
            assert ack == int(s == 1 and sg == 1)
            assert col == int(s == 0 and sg == 1)


def test_reproducible_and_chunk_independent(monkeypatch):
    inst = small()
    a = simulate_channel_level(inst, myopic(inst), 1000, 42)
    b = simulate_channel_level(inst, myopic(inst), 1000, 42)
    assert a == b
    monkeypatch.setattr(simulator, "CHUNK", 7)
    c = simulate_channel_level(inst, myopic(inst), 1000, 42)
    assert c.mean_reward == pytest.approx(a.mean_reward, rel=1e-14)
    assert c.mean_success == a.mean_success
    assert simulate_channel_level(inst, myopic(inst), 1000, 43) != a


def test_episode_streams_are_distinct():
    u0 = episode_uniforms(5, "channel", 0, 3, 2)
    assert u0.shape == (4, 3, 2)
    np.testing.assert_array_equal(u0, episode_uniforms(5, "channel", 0, 3, 2))
    assert not np.array_equal(u0, episode_uniforms(5, "channel", 1, 3, 2))
    assert not np.array_equal(u0, episode_uniforms(5, "belief", 0, 3, 2))


def test_agreement_with_planner_small_run():
    inst = small()
    exact = policy_value(inst, FixedPolicy([2]))
    for fid in ("belief", "channel"):
        stats, _ = simulate(inst, FixedPolicy([2]), 20_000, 9, fid)
        assert abs(agreement_z(stats, exact=exact)) < 4.0


def test_random_policy_is_reproducible():
    inst = small()
    a = simulate_belief_level(inst, RandomPolicy(1), 500, 0)
    assert a == simulate_belief_level(inst, RandomPolicy(1), 500, 0)


def test_validation():
    with pytest.raises(ValueError):
        simulate(small(), myopic(small()), 0, 0)
    with pytest.raises(ValueError):
        simulate(small(), myopic(small()), 10, 0, "state")
    with pytest.raises(TypeError):
        agreement_z(simulate_belief_level(small(), myopic(small()), 10, 0))


def test_jsonl(tmp_path):
    _, logs = simulate(small(), myopic(small()), 3, 0, "belief", log_episodes=2)
    path = tmp_path / "log.jsonl"
    write_jsonl(logs, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 6 and json.loads(lines[0])["slot"] == 1
