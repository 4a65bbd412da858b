import numpy as np
import pytest

from knockoff_rl.errors import ContractViolation, NonFiniteError
from knockoff_rl.nn.adam import AdamState, adam_step, clip_grad_norm, mse_regression_step
from knockoff_rl.nn.mlp import init_mlp, mlp_forward


def test_first_step_moves_by_lr_against_gradient_sign():
    params = [np.array([0.5, -1.0, 2.0])]
    grads = [np.array([0.3, -4.0, 1e-1])]
    state = AdamState(lr=1e-3)
    new = adam_step(state, params, grads)
    np.testing.assert_allclose(new[0] - params[0], -1e-3 * np.sign(grads[0]), rtol=0, atol=1e-9)
    assert state.step == 1


def test_zero_gradient_leaves_params_unchanged():
    params = [np.array([[1.0, 2.0], [3.0, 4.0]])]
    state = AdamState()
    new = adam_step(state, params, [np.zeros((2, 2))])
    np.testing.assert_array_equal(new[0], params[0])


def test_constant_gradient_moves_monotonically():
    p = [np.array([0.0])]
    state = AdamState(lr=1e-2)
    trajectory = []
    for _ in range(50):
        p = adam_step(state, p, [np.array([2.5])])
        trajectory.append(p[0][0])
    assert np.all(np.diff(trajectory) < 0)
    assert state.step == 50


def test_non_finite_gradient_is_rejected_without_side_effects():
    params = [np.ones(3)]
    state = AdamState.for_params(params)
    adam_step(state, params, [np.full(3, 0.1)])
    m_before = [m.copy() for m in state.m]

    with pytest.raises(NonFiniteError):
        adam_step(state, params, [np.array([0.1, np.nan, 0.1])])
    assert state.step == 1
    np.testing.assert_array_equal(state.m[0], m_before[0])


def test_overflowing_update_commits_nothing():
    # the first tensor updates cleanly, the second overflows to inf
    params = [np.zeros(2), np.array([1.7e308])]
    state = AdamState.for_params(params, lr=1e308)
    with np.errstate(over="ignore"), pytest.raises(NonFiniteError):
        adam_step(state, params, [np.ones(2), -np.ones(1)])
    assert state.step == 0
    for m, v in zip(state.m, state.v):
        assert not m.any() and not v.any()


def test_shape_mismatch_raises():
    state = AdamState()
    with pytest.raises(ContractViolation):
        adam_step(state, [np.ones(3)], [np.ones(4)])


def test_non_positive_hyperparameter_raises():
    with pytest.raises(ContractViolation):
        AdamState(lr=0.0)


def test_clip_grad_norm():
    grads = [np.array([3.0]), np.array([[4.0]])]
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_allclose(clipped[0], [0.6])
    np.testing.assert_allclose(clipped[1], [[0.8]])

    untouched, norm = clip_grad_norm(grads, 10.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_array_equal(untouched[0], grads[0])


def test_mse_regression_step_fits_a_line():
    rng = np.random.default_rng(0)
    net = init_mlp([1, 1], rng=rng)
    x = rng.uniform(-1, 1, size=(64, 1))
    y = 2.0 * x[:, 0] + 1.0
    state = AdamState.for_params(net.parameters(), lr=0.05)

    first = mse_regression_step(net, state, x, y)
    for _ in range(500):
        last = mse_regression_step(net, state, x, y)
    assert last < 0.05 * first
    np.testing.assert_allclose(mlp_forward(net, np.array([0.5])), [2.0], atol=0.1)
