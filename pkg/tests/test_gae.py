from dataclasses import replace

import numpy as np
import pytest

from knockoff_rl.errors import ContractViolation
from knockoff_rl.envs.synthetic import SyntheticActionEnv
from knockoff_rl.nn.mlp import init_mlp
from knockoff_rl.policy.gaussian import make_policy
from knockoff_rl.ppo.gae import compute_gae, gae_advantages, normalize_advantages
from knockoff_rl.ppo.rollout import collect_rollout


def _brute_force_gae(rewards, values, next_values, ends, gamma, lam):
    n = len(rewards)
    deltas = rewards + gamma * next_values - values
    adv = np.zeros(n)
    for t in range(n):
        total, weight = 0.0, 1.0
        for k in range(t, n):
            total += weight * deltas[k]
            if ends[k]:
                break
            weight *= gamma * lam
        adv[t] = total
    return adv


def test_lambda_zero_is_one_step_td(rng):
    r = rng.normal(size=12)
    v = rng.normal(size=12)
    nv = rng.normal(size=12)
    ends = np.zeros(12, dtype=bool)
    adv, ret = gae_advantages(r, v, nv, ends, gamma=0.9, lam=0.0)
    np.testing.assert_allclose(adv, r + 0.9 * nv - v, atol=1e-12)
    np.testing.assert_allclose(ret, adv + v)


def test_lambda_one_zero_values_gives_reward_suffix_sums():
    r = np.array([1.0, 2.0, 3.0, 4.0])
    zeros = np.zeros(4)
    ends = np.array([False, False, False, True])
    adv, _ = gae_advantages(r, zeros, zeros, ends, gamma=1.0, lam=1.0)
    np.testing.assert_allclose(adv, [10.0, 9.0, 7.0, 4.0])


def test_chain_is_cut_at_episode_end():
    r = np.array([1.0, 1.0, 1.0, 1.0])
    zeros = np.zeros(4)
    ends = np.array([False, True, False, True])
    adv, _ = gae_advantages(r, zeros, zeros, ends, gamma=1.0, lam=1.0)
    np.testing.assert_allclose(adv, [2.0, 1.0, 2.0, 1.0])


def test_matches_brute_force_on_random_batches():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        r = rng.normal(size=n)
        v = rng.normal(size=n)
        nv = rng.normal(size=n)
        ends = rng.random(n) < 0.15
        gamma, lam = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)
        adv, _ = gae_advantages(r, v, nv, ends, gamma, lam)
        np.testing.assert_allclose(adv, _brute_force_gae(r, v, nv, ends, gamma, lam), atol=1e-10)


def test_length_mismatch_raises():
    with pytest.raises(ContractViolation):
        gae_advantages(np.zeros(3), np.zeros(3), np.zeros(2), np.zeros(3, dtype=bool), 0.99, 0.95)


def test_normalize_advantages(rng):
    adv = normalize_advantages(rng.normal(loc=3.0, scale=5.0, size=500))
    assert adv.mean() == pytest.approx(0.0, abs=1e-12)
    assert adv.std() == pytest.approx(1.0, abs=1e-6)


def test_normalize_constant_advantages_is_finite():
    adv = normalize_advantages(np.full(8, 2.0))
    np.testing.assert_allclose(adv, 0.0, atol=1e-12)


def test_compute_gae_fills_rollout_batch(small_spec, rng):
    policy = make_policy(small_spec.state_dim, small_spec.action_dim, hidden_sizes=[8], rng=rng)
    v_net = init_mlp([small_spec.state_dim, 8, 1], rng=rng)
    batch = collect_rollout(SyntheticActionEnv(small_spec), policy, v_net, 50, False, rng)
    adv, ret = compute_gae(batch, gamma=0.99, lam=0.95)
    expected = _brute_force_gae(batch.rewards, batch.values, batch.next_values, batch.episode_ends, 0.99, 0.95)
    np.testing.assert_allclose(adv, expected, atol=1e-10)
    np.testing.assert_allclose(batch.returns, batch.values + adv)
    assert batch.advantages is adv and batch.returns is ret


def test_compute_gae_needs_values(small_spec, rng):
    policy = make_policy(small_spec.state_dim, small_spec.action_dim, hidden_sizes=[8], rng=rng)
    v_net = init_mlp([small_spec.state_dim, 8, 1], rng=rng)
    batch = collect_rollout(SyntheticActionEnv(small_spec), policy, v_net, 10, False, rng)
    with pytest.raises(ContractViolation):
        compute_gae(replace(batch, values=None), gamma=0.99, lam=0.95)
