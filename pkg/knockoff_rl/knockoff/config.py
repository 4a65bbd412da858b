# knockoff_rl/knockoff/config.py

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List

from knockoff_rl.errors import ConfigError

LAMBDA_POLICIES = ("noise_floor", "fraction", "universal", "cv")
IMPORTANCE_BACKENDS = ("lasso", "random_forest")
COMBINERS = ("difference", "signed_max")

# rows a fold needs before importance scores are meaningful
MIN_FOLD_ROWS = 20


@dataclass
class SelectionConfig:
    alpha: float = 0.1
    gamma_vote: float = 0.5
    k_folds: int = 5
    lambda_policy: str = "noise_floor"
    lambda_fraction: float = 0.1
    importance: str = "lasso"
    combiner: str = "difference"
    exclude_outcomes: List[int] = field(default_factory=list)
    n_jobs: int = 1
    random_state: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"SelectionConfig: alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.gamma_vote <= 1.0:
            raise ConfigError(f"SelectionConfig: gamma_vote must be in (0, 1], got {self.gamma_vote}")
        if int(self.k_folds) < 1:
            raise ConfigError(f"SelectionConfig: k_folds must be >= 1, got {self.k_folds}")
        if self.lambda_policy not in LAMBDA_POLICIES:
            raise ConfigError(f"SelectionConfig: lambda_policy must be one of {LAMBDA_POLICIES}")
        if not 0.0 < self.lambda_fraction <= 1.0:
            raise ConfigError(f"SelectionConfig: lambda_fraction must be in (0, 1], got {self.lambda_fraction}")
        if self.importance not in IMPORTANCE_BACKENDS:
            raise ConfigError(f"SelectionConfig: importance must be one of {IMPORTANCE_BACKENDS}")
        if self.combiner not in COMBINERS:
            raise ConfigError(f"SelectionConfig: combiner must be one of {COMBINERS}")
        self.k_folds = int(self.k_folds)
        self.exclude_outcomes = [int(i) for i in self.exclude_outcomes]

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "SelectionConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"SelectionConfig.from_dict: unknown keys {unknown}")
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
