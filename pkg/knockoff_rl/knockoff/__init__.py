# knockoff_rl/knockoff/__init__.py

from knockoff_rl.knockoff.config import SelectionConfig
from knockoff_rl.knockoff.dataset import AugmentedDataset, build_augmented, sample_split
from knockoff_rl.knockoff.lasso import (
    LassoFit,
    cv_lambda,
    lambda_max,
    lasso_cd,
    lasso_kkt_violation,
    soft_threshold,
)
from knockoff_rl.knockoff.selection import (
    SelectionReport,
    majority_vote,
    select_actions,
    select_fold,
    select_from_dataset,
    vote_counts,
    write_selection_report,
)
from knockoff_rl.knockoff.statistics import (
    KnockoffStats,
    aggregate_w,
    fold_statistics,
    importance_scores,
    knockoff_threshold,
)

__all__ = [
    "AugmentedDataset",
    "KnockoffStats",
    "LassoFit",
    "SelectionConfig",
    "SelectionReport",
    "aggregate_w",
    "build_augmented",
    "cv_lambda",
    "fold_statistics",
    "importance_scores",
    "knockoff_threshold",
    "lambda_max",
    "lasso_cd",
    "lasso_kkt_violation",
    "majority_vote",
    "sample_split",
    "select_actions",
    "select_fold",
    "select_from_dataset",
    "soft_threshold",
    "vote_counts",
    "write_selection_report",
]
