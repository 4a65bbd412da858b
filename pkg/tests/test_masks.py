import logging

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from knockoff_rl.errors import ContractViolation
from knockoff_rl.nn.adam import AdamState
from knockoff_rl.nn.mlp import init_mlp
from knockoff_rl.policy.gaussian import log_prob_backward, log_prob_components, make_policy
from knockoff_rl.policy.masks import (
    MaskedPolicy,
    MaskedQ,
    SelectionMask,
    apply_mask,
    load_mask,
    mask_action_input,
    mask_covariance,
    mask_log_prob,
    masked_correlated_log_prob,
    sample_correlated,
    save_mask,
)


class TestMaskActionInput:
    def test_definition(self):
        np.testing.assert_array_equal(mask_action_input([1.0, -2.0, 3.0], [1, 0, 1]), [1.0, 0.0, 3.0])

    def test_all_ones_and_zeros(self, rng):
        a = rng.normal(size=6)
        np.testing.assert_array_equal(mask_action_input(a, np.ones(6)), a)
        np.testing.assert_array_equal(mask_action_input(a, np.zeros(6)), np.zeros(6))

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            mask_action_input(np.ones(3), np.ones(4))


class TestMaskLogProb:
    def test_matches_manual_sum(self, rng):
        for _ in range(50):
            lp = rng.normal(size=10)
            m = rng.integers(0, 2, size=10)
            assert mask_log_prob(lp, m) == pytest.approx(lp[m == 1].sum(), abs=1e-12)

    def test_unit_vector_picks_one_dimension(self):
        lp = np.array([-1.0, -2.0, -3.0])
        assert mask_log_prob(lp, [0, 1, 0]) == -2.0
        assert mask_log_prob(lp, [1, 1, 1]) == -6.0

    def test_batched(self, rng):
        lp = rng.normal(size=(5, 4))
        out = mask_log_prob(lp, [1, 0, 0, 1])
        np.testing.assert_allclose(out, lp[:, 0] + lp[:, 3])

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            mask_log_prob(np.zeros(3), [1, 1])


class TestMaskCovariance:
    @pytest.fixture
    def sigma(self):
        return np.array([[2.0, 0.5, 0.3], [0.5, 1.0, 0.2], [0.3, 0.2, 1.5]])

    def test_three_action_case(self, sigma):
        out = mask_covariance(sigma, [1, 1, 0])
        expected = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.5]])
        np.testing.assert_array_equal(out, expected)

    def test_all_ones_and_zeros(self, sigma):
        np.testing.assert_array_equal(mask_covariance(sigma, [1, 1, 1]), sigma)
        np.testing.assert_array_equal(mask_covariance(sigma, [0, 0, 0]), np.diag(np.diag(sigma)))

    def test_symmetry_and_selected_block_preserved(self, rng):
        L = rng.normal(size=(6, 6))
        sigma = L @ L.T
        sigma = 0.5 * (sigma + sigma.T)
        m = np.array([1, 0, 1, 1, 0, 0])
        out = mask_covariance(sigma, m)
        np.testing.assert_array_equal(out, out.T)
        sel = np.flatnonzero(m)
        np.testing.assert_array_equal(out[np.ix_(sel, sel)], sigma[np.ix_(sel, sel)])

    def test_asymmetric_rejected(self):
        with pytest.raises(ContractViolation):
            mask_covariance(np.array([[1.0, 0.2], [0.1, 1.0]]), [1, 1])


class TestCorrelatedPolicy:
    def test_masked_density_is_selected_block(self, rng):
        L = rng.normal(size=(4, 4))
        sigma = L @ L.T + np.eye(4)
        sigma = 0.5 * (sigma + sigma.T)
        mu = rng.normal(size=4)
        a = sample_correlated(mu, sigma, rng)
        m = np.array([1, 0, 1, 0])
        expected = multivariate_normal.logpdf(a[[0, 2]], mean=mu[[0, 2]], cov=sigma[np.ix_([0, 2], [0, 2])])
        assert masked_correlated_log_prob(a, mu, sigma, m) == pytest.approx(expected, abs=1e-12)

    def test_empty_selection_has_zero_log_density(self):
        assert masked_correlated_log_prob(np.zeros(2), np.zeros(2), np.eye(2), [0, 0]) == 0.0


class TestSelectionMask:
    def test_from_indices(self):
        mask = SelectionMask.from_indices({0, 1}, 4)
        np.testing.assert_array_equal(mask.m, [1, 1, 0, 0])
        assert mask.selected == frozenset({0, 1})
        assert not mask.is_empty

    def test_out_of_range_index(self):
        with pytest.raises(ContractViolation):
            SelectionMask.from_indices([4], 4)

    def test_non_binary_rejected(self):
        with pytest.raises(ContractViolation):
            SelectionMask(m=np.array([0, 2, 1]))

    def test_round_trip(self, tmp_path):
        mask = SelectionMask.from_indices(
            [1, 3], 5, votes=np.array([0, 5, 1, 4, 0]), w_stats=np.array([0.0, 0.4, -0.1, 0.2, 0.0]),
            tau=0.2, created_at_step=4000,
        )
        loaded = load_mask(save_mask(mask, tmp_path / "mask.yaml"))
        np.testing.assert_array_equal(loaded.m, mask.m)
        np.testing.assert_array_equal(loaded.votes, mask.votes)
        np.testing.assert_allclose(loaded.w_stats, mask.w_stats)
        assert loaded.tau == 0.2
        assert loaded.created_at_step == 4000


class TestApplyMask:
    def test_all_ones_policy_wrapper_matches_unmasked(self, rng):
        pol = make_policy(3, 5, rng=np.random.default_rng(0))
        wrapped = apply_mask(pol, SelectionMask.all_ones(5))
        assert isinstance(wrapped, MaskedPolicy)
        for _ in range(100):
            s = rng.normal(size=3)
            a = rng.normal(size=5)
            assert wrapped.log_prob(s, a) == pytest.approx(log_prob_components(pol, s, a).sum(), abs=1e-12)

    def test_masked_output_rows_get_zero_gradient(self, rng):
        pol = make_policy(3, 4, rng=np.random.default_rng(1))
        m = np.array([1, 1, 0, 0])
        states = rng.normal(size=(16, 3))
        actions = rng.normal(size=(16, 4))
        upstream = np.ones((16, 1)) * m[None, :]
        grads, log_std_grad = log_prob_backward(pol, states, actions, upstream)
        assert not np.any(grads.weights[-1][:, 2:])
        assert not np.any(grads.biases[-1][2:])
        assert not np.any(log_std_grad[2:])
        assert np.any(grads.weights[-1][:, :2])

    def test_empty_mask_falls_back_with_warning(self, caplog):
        pol = make_policy(2, 3)
        with caplog.at_level(logging.WARNING):
            wrapped = apply_mask(pol, SelectionMask(m=np.zeros(3, dtype=int)))
        np.testing.assert_array_equal(wrapped.m, [1, 1, 1])
        assert "empty selection" in caplog.text

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            apply_mask(make_policy(2, 3), SelectionMask.all_ones(4))

    def test_q_input_masking(self, rng):
        q_net = init_mlp([2 + 4, 8, 1], rng=np.random.default_rng(2))
        q = apply_mask(q_net, SelectionMask.from_indices([0, 2], 4))
        assert isinstance(q, MaskedQ)
        s = rng.normal(size=(10, 2))
        a = rng.normal(size=(10, 4))
        b = a.copy()
        b[:, [1, 3]] = rng.normal(size=(10, 2))
        np.testing.assert_array_equal(q.value(s, a), q.value(s, b))

    def test_masked_q_regression_ignores_masked_actions(self, rng):
        # target depends only on the selected action
        q_net = init_mlp([1 + 3, 16, 1], activation="tanh", rng=np.random.default_rng(3))
        q = MaskedQ(q_net, SelectionMask.from_indices([0], 3))
        state = AdamState.for_params(q_net.parameters(), lr=1e-2)
        s = rng.uniform(-1, 1, size=(256, 1))
        a = rng.uniform(-1, 1, size=(256, 3))
        target = s[:, 0] + 2.0 * a[:, 0]
        first = q.regression_step(state, s, a, target)
        for _ in range(400):
            last = q.regression_step(state, s, a, target)
        assert last < 0.1 * first
        # the masked coordinates never reach the network
        masked_inputs = q.inputs(s, a)[:, 2:]
        assert not np.any(masked_inputs)
