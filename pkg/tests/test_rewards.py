import math

import numpy as np
import pytest

from myopic_rmab.rewards import (
    AnalyticDeltaRequired, check_axioms, custom_reward, decomposition_residual, delta_bounds,
    g_derivative_bounds, immediate_reward, linear_reward, log_reward, make_reward, power_reward,
)


def test_examples():
    assert linear_reward(0.1)(np.array([0.5, 0.6])) == pytest.approx(0.99, abs=1e-15)
    assert power_reward(2)(np.array([0.0, 0.0])) == 0.0
    assert log_reward(2)(np.array([1.0])) == pytest.approx(1.0, abs=1e-15)
    assert immediate_reward(linear_reward(0.0), [0.1, 0.7, 0.3], (1, 2)) == pytest.approx(1.0)


def test_decomposition_residuals():
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = rng.random(3)
        assert decomposition_residual(linear_reward(0.2), w, 1) <= 1e-15
        assert decomposition_residual(power_reward(3), w, 0) <= 1e-12
    w = rng.random(3)
    w[0] = 0.3
    assert decomposition_residual(log_reward(2), w, 0) <= 1e-12


def test_g_derivative_bounds():
    assert g_derivative_bounds(linear_reward(0.3), 0.1, 0.9) == (1.0, 1.0)
    np.testing.assert_allclose(g_derivative_bounds(power_reward(2), 0.2, 0.8), (0.4, 1.6))
    ln2 = math.log(2.0)
    np.testing.assert_allclose(g_derivative_bounds(log_reward(2), 0.2, 0.8), (1 / (1.8 * ln2), 1 / (1.2 * ln2)))


def test_delta_bounds():
    assert delta_bounds(linear_reward(0.1), 3) == (0.9, 0.9)
    assert delta_bounds(power_reward(3), 2) == (1.0, 1.0)
    np.testing.assert_allclose(delta_bounds(log_reward(10), 2), (math.log10(2),) * 2)


def test_custom_reward_numerics_bracket_analytic():
    r = custom_reward(lambda w: np.sum(w**2, axis=-1), lambda x: x**2)
    lo, hi = g_derivative_bounds(r, 0.2, 0.8)
    assert lo <= 0.4 and hi >= 1.6
    assert lo == pytest.approx(0.4, rel=0.02) and hi == pytest.approx(1.6, rel=0.02)
    np.testing.assert_allclose(delta_bounds(r, 1), (1.0, 1.0))
    np.testing.assert_allclose(delta_bounds(r, 3), (1.0, 1.0), atol=1e-12)
    with pytest.raises(AnalyticDeltaRequired):
        delta_bounds(r, 6)


def test_custom_reward_batching_shim():
    r = custom_reward(lambda w: np.sum(w), lambda x: x)
    np.testing.assert_allclose(r(np.array([[0.1, 0.2], [0.3, 0.4]])), [0.3, 0.7])


@pytest.mark.parametrize("reward", [linear_reward(0.1), log_reward(2), log_reward(10),
                                    power_reward(2), power_reward(0.5)])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_builtin_axioms(reward, k):
    rep = check_axioms(reward, k, samples=2000, rng=np.random.default_rng(k))
    assert rep.ok, rep.counterexample


def test_axiom_falsification():
    rep = check_axioms(custom_reward(lambda w: -np.sum(w, axis=-1), lambda x: x), 2, samples=500)
    assert not rep.monotone and rep.counterexample["axiom"] == "monotonicity"
    rep = check_axioms(custom_reward(lambda w: w[..., 0] + 2 * w[..., 1], lambda x: x), 2, samples=500)
    assert not rep.symmetric


def test_symmetry_is_bit_exact():
    rng = np.random.default_rng(9)
    w = rng.random((1000, 4))
    for r in (linear_reward(0.05), log_reward(3), power_reward(2.5)):
        np.testing.assert_array_equal(r(w), r(w[:, ::-1]))


def test_make_reward_errors():
    with pytest.raises(ValueError):
        make_reward("quadratic")
    with pytest.raises(ValueError):
        log_reward(1.0)
    with pytest.raises(ValueError):
        power_reward(0.0)
