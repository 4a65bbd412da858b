# knockoff_rl/nn/__init__.py

from knockoff_rl.nn.adam import AdamState, adam_step, clip_grad_norm, mse_regression_step
from knockoff_rl.nn.mlp import (
    Mlp,
    MlpGrads,
    check_finite,
    init_mlp,
    load_mlp,
    mlp_backward,
    mlp_forward,
    save_mlp,
)

__all__ = [
    "AdamState",
    "Mlp",
    "MlpGrads",
    "adam_step",
    "check_finite",
    "clip_grad_norm",
    "init_mlp",
    "load_mlp",
    "mlp_backward",
    "mlp_forward",
    "mse_regression_step",
    "save_mlp",
]
