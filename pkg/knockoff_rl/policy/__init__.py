# knockoff_rl/policy/__init__.py

from knockoff_rl.policy.gaussian import (
    GaussianPolicy,
    entropy,
    log_prob_backward,
    log_prob_components,
    make_policy,
    mean_action,
    resample_knockoff,
    sample_action,
    sample_action_raw,
)
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

__all__ = [
    "GaussianPolicy",
    "MaskedPolicy",
    "MaskedQ",
    "SelectionMask",
    "apply_mask",
    "entropy",
    "load_mask",
    "log_prob_backward",
    "log_prob_components",
    "make_policy",
    "mask_action_input",
    "mask_covariance",
    "mask_log_prob",
    "masked_correlated_log_prob",
    "mean_action",
    "resample_knockoff",
    "sample_action",
    "sample_action_raw",
    "sample_correlated",
    "save_mask",
]
