# knockoff_rl/envs/registry.py

from knockoff_rl.envs.synthetic import EnvSpec, make_env_spec
from knockoff_rl.errors import ConfigError

# name -> make_env_spec keyword arguments
ENV_REGISTRY = {
    # 54 actions, 4 of which drive states and rewards
    "lq-default": {"state_dim": 4, "n_true": 4, "action_dim": 54},

    # raw action space plus appended dummy actions
    "lq-raw4-extra20": {"state_dim": 4, "n_true": 4, "action_dim": 24},
    "lq-raw6-extra20": {"state_dim": 6, "n_true": 6, "action_dim": 26},
    "lq-raw6-extra50": {"state_dim": 6, "n_true": 6, "action_dim": 56},

    # no action matters
    "lq-null": {"state_dim": 4, "n_true": 0, "action_dim": 20},

    # no redundancy, for plain PPO checks
    "lq-dense": {"state_dim": 4, "n_true": 4, "action_dim": 4},
}

# alternate names for registry entries
ENV_ALIASES = {
    # 4 raw actions + 50 dummies is the default sizing
    "lq-raw4-extra50": "lq-default",
}


def get_env_spec(name: str, seed: int = 0, **overrides) -> EnvSpec:
    base = ENV_ALIASES.get(name, name)
    if base not in ENV_REGISTRY:
        raise ConfigError(f"get_env_spec: unknown env {name!r}; known: {sorted([*ENV_REGISTRY, *ENV_ALIASES])}")
    kwargs = {**ENV_REGISTRY[base], **overrides}
    return make_env_spec(seed=seed, name=name, **kwargs)


def env_spec_from_config(config: dict) -> EnvSpec:
    env_cfg = config.get("env", {})
    return get_env_spec(
        env_cfg.get("name", "lq-default"),
        seed=int(env_cfg.get("seed", 0)),
        **(env_cfg.get("overrides") or {}),
    )
