from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from knockoff_rl.errors import ConfigError


def _package_config_path() -> Path:
    # config_loader.py is in knockoff_rl/config/
    # so parent of parent is knockoff_rl/
    package_root = Path(__file__).resolve().parents[1]
    return package_root / "config.yaml"


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


def load_config(path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """
    Load config.yaml from the knockoff_rl package directory
    (the directory that contains main.py).

    If `path` is given, that file is read and merged over the package
    defaults, so a user file only needs the keys it changes.

    Layout:
        knockoff_rl/
            main.py
            config.yaml
            config/
                config_loader.py
            ...
    """
    cfg_path = _package_config_path()

    if not cfg_path.exists():
        raise FileNotFoundError(f"config.yaml not found at {cfg_path}")

    with cfg_path.open("r") as f:
        defaults = yaml.safe_load(f) or {}

    if path is None:
        return defaults

    user_path = Path(path)
    if not user_path.exists():
        raise FileNotFoundError(f"config file not found at {user_path}")

    with user_path.open("r") as f:
        try:
            user_cfg = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"load_config: {user_path} is not valid YAML: {exc}") from exc
    if not isinstance(user_cfg, dict):
        raise ConfigError(f"load_config: {user_path} must hold a mapping, got {type(user_cfg).__name__}")

    return _deep_merge(defaults, user_cfg)


def apply_overrides(config: Dict[str, Any], section: str, **values: Any) -> Dict[str, Any]:
    """Return a copy of `config` with non-None `values` written into `section`."""
    updated = deepcopy(config)
    target = updated.setdefault(section, {})
    for key, value in values.items():
        if value is not None:
            target[key] = value
    return updated
