# knockoff_rl/ppo/gae.py

from typing import Tuple

import numpy as np

from knockoff_rl.errors import ContractViolation
from knockoff_rl.ppo.rollout import RolloutBatch


def gae_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    next_values: np.ndarray,
    episode_ends: np.ndarray,
    gamma: float,
    lam: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    delta_t = r_t + gamma * V(s_{t+1}) - V(s_t)
    A_t     = delta_t + gamma * lam * A_{t+1}, cut at episode ends

    next_values must already be zero on terminal steps.  The last step of
    the batch closes its chain with the bootstrapped next value.
    Returns (advantages, returns = advantages + values).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    next_values = np.asarray(next_values, dtype=float)
    episode_ends = np.asarray(episode_ends, dtype=bool)
    n = rewards.shape[0]
    if not (values.shape == next_values.shape == episode_ends.shape == (n,)):
        raise ContractViolation("gae_advantages: rewards, values, next_values and episode_ends must share length")

    deltas = rewards + gamma * next_values - values
    advantages = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        if episode_ends[t]:
            running = 0.0
        running = deltas[t] + gamma * lam * running
        advantages[t] = running
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    adv = np.asarray(advantages, dtype=float)
    if adv.size < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def compute_gae(batch: RolloutBatch, gamma: float, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fill batch.advantages / batch.returns from its stored rewards and values."""
    if batch.values is None or batch.next_values is None:
        raise ContractViolation("compute_gae: batch has no value estimates")
    advantages, returns = gae_advantages(
        batch.rewards, batch.values, batch.next_values, batch.episode_ends, gamma, lam
    )
    batch.advantages = advantages
    batch.returns = returns
    return advantages, returns
