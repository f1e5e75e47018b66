"""Adam optimizer: closed-form first step, masking, and state handling."""

import numpy as np
import pytest

from anysr.errors import NumericError
from anysr.numerics import adam_step, init_adam_state


def test_zero_gradient_leaves_parameter_unchanged():
    p = {"w": np.array([1.0, -2.0, 3.0])}
    state = init_adam_state(p)
    adam_step(p, {"w": np.zeros(3)}, state, lr=0.1)
    np.testing.assert_array_equal(p["w"], [1.0, -2.0, 3.0])
    np.testing.assert_array_equal(state.first_moment["w"], np.zeros(3))
    np.testing.assert_array_equal(state.second_moment["w"], np.zeros(3))
    assert state.step_count == 1


def test_first_step_is_signlike():
    g = np.array([0.3, -4.0, 1e-3])
    p = {"w": np.zeros(3)}
    state = init_adam_state(p)
    adam_step(p, {"w": g}, state, lr=1e-2)
    # Bias-corrected m_hat/sqrt(v_hat) equals g/|g| on the first step, so the
    # update is -lr * g / (|g| + eps).
    expected = -1e-2 * g / (np.abs(g) + state.epsilon)
    np.testing.assert_allclose(p["w"], expected, rtol=1e-12)


def test_constant_gradient_moves_monotonically():
    g = np.array([2.0, -0.5])
    p = {"w": np.array([1.0, 1.0])}
    state = init_adam_state(p)
    before = p["w"].copy()
    adam_step(p, {"w": g}, state, lr=1e-3)
    mid = p["w"].copy()
    adam_step(p, {"w": g}, state, lr=1e-3)
    first, second = mid - before, p["w"] - mid
    assert np.all(np.sign(first) == -np.sign(g))
    assert np.all(np.sign(second) == -np.sign(g))
    assert state.step_count == 2


def test_none_gradient_skips_parameter_entirely():
    p = {"w": np.array([1.0]), "frozen": np.array([5.0])}
    state = init_adam_state(p)
    adam_step(p, {"w": np.array([1.0]), "frozen": None}, state, lr=0.1)
    assert p["frozen"][0] == 5.0
    np.testing.assert_array_equal(state.first_moment["frozen"], [0.0])


def test_masked_region_freezes_suffix_and_moments():
    rng = np.random.default_rng(5)
    p = {"k": rng.normal(size=(6, 4))}
    before = p["k"].copy()
    state = init_adam_state(p)
    g = rng.normal(size=(6, 4))
    g[3:] = 0.0  # inactive rows receive zero grad by construction upstream
    for _ in range(7):
        adam_step(p, {"k": g}, state, lr=1e-2, active={"k": (slice(0, 3),)})
    assert p["k"][3:].tobytes() == before[3:].tobytes()
    assert state.first_moment["k"][3:].tobytes() == np.zeros((3, 4)).tobytes()
    assert state.second_moment["k"][3:].tobytes() == np.zeros((3, 4)).tobytes()
    assert not np.array_equal(p["k"][:3], before[:3])


def test_nan_gradient_raises():
    p = {"w": np.zeros(2)}
    state = init_adam_state(p)
    with pytest.raises(NumericError):
        adam_step(p, {"w": np.array([np.nan, 0.0])}, state, lr=0.1)
