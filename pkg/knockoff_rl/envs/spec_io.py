# knockoff_rl/envs/spec_io.py

from pathlib import Path
from typing import Union

import numpy as np
import yaml

from knockoff_rl.envs.synthetic import EnvSpec
from knockoff_rl.errors import ContractViolation

SPEC_FORMAT = "knockoff_rl.env_spec"
SPEC_VERSION = 1


def save_env_spec(spec: EnvSpec, path: Union[str, Path]) -> Path:
    """Write every field needed to replay an experiment exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": SPEC_FORMAT,
        "version": SPEC_VERSION,
        "name": spec.name,
        "seed": spec.seed,
        "state_dim": spec.state_dim,
        "action_dim": spec.action_dim,
        "true_set": list(spec.true_set),
        "noise_scale": float(spec.noise_scale),
        "action_cost": float(spec.action_cost),
        "horizon": int(spec.horizon),
        "action_bound": float(spec.action_bound),
        "A": spec.A.tolist(),
        "B": spec.B.tolist(),
    }
    with path.open("w") as f:
        yaml.safe_dump(payload, f, sort_keys=False)
    return path


def load_env_spec(path: Union[str, Path]) -> EnvSpec:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"env spec not found at {path}")
    with path.open("r") as f:
        payload = yaml.safe_load(f)

    if payload.get("format") != SPEC_FORMAT or payload.get("version") != SPEC_VERSION:
        raise ContractViolation(f"load_env_spec: unsupported header in {path}")

    return EnvSpec(
        state_dim=payload["state_dim"],
        action_dim=payload["action_dim"],
        true_set=tuple(payload["true_set"]),
        A=np.asarray(payload["A"], dtype=float),
        B=np.asarray(payload["B"], dtype=float).reshape(payload["state_dim"], len(payload["true_set"])),
        noise_scale=payload["noise_scale"],
        action_cost=payload["action_cost"],
        horizon=payload["horizon"],
        action_bound=payload["action_bound"],
        seed=payload.get("seed"),
        name=payload.get("name", "custom"),
    )
