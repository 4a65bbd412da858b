# knockoff_rl/envs/__init__.py

from knockoff_rl.envs.registry import ENV_ALIASES, ENV_REGISTRY, env_spec_from_config, get_env_spec
from knockoff_rl.envs.spec_io import load_env_spec, save_env_spec
from knockoff_rl.envs.synthetic import (
    EnvSpec,
    SyntheticActionEnv,
    Transition,
    env_reset,
    env_step,
    ground_truth_set,
    make_augmented_spec,
    make_env_spec,
)

__all__ = [
    "ENV_ALIASES",
    "ENV_REGISTRY",
    "EnvSpec",
    "SyntheticActionEnv",
    "Transition",
    "env_reset",
    "env_spec_from_config",
    "env_step",
    "get_env_spec",
    "ground_truth_set",
    "load_env_spec",
    "make_augmented_spec",
    "make_env_spec",
    "save_env_spec",
]
