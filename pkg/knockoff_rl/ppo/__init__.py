# knockoff_rl/ppo/__init__.py

from knockoff_rl.ppo.gae import compute_gae, gae_advantages, normalize_advantages
from knockoff_rl.ppo.rollout import RolloutBatch, collect_rollout, state_values
from knockoff_rl.ppo.trainer import (
    METHODS,
    TrainConfig,
    TrainResult,
    clipped_surrogate,
    evaluate_policy,
    ppo_update,
    train,
)

__all__ = [
    "METHODS",
    "RolloutBatch",
    "TrainConfig",
    "TrainResult",
    "clipped_surrogate",
    "collect_rollout",
    "compute_gae",
    "evaluate_policy",
    "gae_advantages",
    "normalize_advantages",
    "ppo_update",
    "state_values",
    "train",
]
