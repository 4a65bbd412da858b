# knockoff_rl/knockoff/statistics.py

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from knockoff_rl.errors import ContractViolation, InsufficientDataError
from knockoff_rl.knockoff.config import MIN_FOLD_ROWS, SelectionConfig
from knockoff_rl.knockoff.dataset import AugmentedDataset
from knockoff_rl.knockoff.lasso import LassoFit, cv_lambda, lambda_max, lasso_cd

logger = logging.getLogger(__name__)


@dataclass
class KnockoffStats:
    Z: np.ndarray
    Z_knockoff: np.ndarray
    W: np.ndarray
    tau: float
    selected: FrozenSet[int]
    Z_matrix: Optional[np.ndarray] = field(default=None, repr=False)
    Z_knockoff_matrix: Optional[np.ndarray] = field(default=None, repr=False)


def _canonical_swap(A: np.ndarray, A_knockoff: np.ndarray) -> np.ndarray:
    """
    Content-determined order for each (A_j, A~_j) pair.

    The learner always sees the pair in the same order whichever column is
    labelled the original, so swapping a pair swaps its scores exactly.
    """
    return np.array([A[:, j].tobytes() > A_knockoff[:, j].tobytes() for j in range(A.shape[1])], dtype=bool)


def _universal_rate(n: int, q: int) -> float:
    return float(np.sqrt(2.0 * np.log(2.0 * q) / n))


def _select_lambda(X: np.ndarray, y: np.ndarray, config: SelectionConfig) -> float:
    if config.lambda_policy == "fraction":
        return config.lambda_fraction * lambda_max(X, y)
    if config.lambda_policy == "universal":
        return float(np.std(y)) * _universal_rate(*X.shape)
    return cv_lambda(X, y)


def _residual_scale(X: np.ndarray, y: np.ndarray, fit: LassoFit) -> float:
    """Residual standard deviation with the active-set size as degrees of freedom."""
    resid = y - X @ fit.coefficients - fit.intercept
    dof = max(X.shape[0] - int(np.count_nonzero(fit.coefficients)) - 1, 1)
    return float(np.sqrt(resid @ resid / dof))


def _fit_outcome(X: np.ndarray, y: np.ndarray, config: SelectionConfig) -> LassoFit:
    """
    LASSO fit of one standardized outcome under the configured lambda policy.

    noise_floor: lam = max(fraction * lam_max, sigma * sqrt(2 log(2q) / n)),
    sigma taken from the residuals of the fraction fit.  Outcomes the design
    explains well keep the fraction penalty; outcomes that are mostly noise
    to the design are penalized at the noise level, so actions unrelated to
    them score exactly zero.
    """
    if config.lambda_policy != "noise_floor":
        return lasso_cd(X, y, _select_lambda(X, y, config))
    fit = lasso_cd(X, y, config.lambda_fraction * lambda_max(X, y))
    floor = _residual_scale(X, y, fit) * _universal_rate(*X.shape)
    if floor > fit.lam:
        fit = lasso_cd(X, y, floor)
    return fit


def _outcome_columns(ds: AugmentedDataset, config: SelectionConfig) -> np.ndarray:
    excluded = set(config.exclude_outcomes)
    bad = [i for i in excluded if not 0 <= i < ds.state_dim]
    if bad:
        raise ContractViolation(f"importance_scores: exclude_outcomes {bad} out of range for state_dim={ds.state_dim}")
    # column 0 is the reward and is always kept
    return np.array([0] + [1 + i for i in range(ds.state_dim) if i not in excluded])


def importance_scores(fold: AugmentedDataset, config: Optional[SelectionConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-outcome importance of each action and of its knockoff copy.

    Every outcome column of Y is standardized and fitted on the
    column-standardized design [S, A, A~]; state columns are covariates but
    are never scored.  Returns (Z, Z~), each p x n_outcomes.
    """
    config = config or SelectionConfig()
    if fold.n < MIN_FOLD_ROWS:
        raise InsufficientDataError(
            f"importance_scores: fold has {fold.n} rows, need at least {MIN_FOLD_ROWS}; increase T_vs"
        )

    p, d_s = fold.action_dim, fold.state_dim
    swap = _canonical_swap(fold.A, fold.A_knockoff)
    first = np.where(swap, fold.A_knockoff, fold.A)
    second = np.where(swap, fold.A, fold.A_knockoff)
    X = np.hstack([fold.S, first, second])

    columns = _outcome_columns(fold, config)
    Z = np.zeros((p, len(columns)))
    Zk = np.zeros((p, len(columns)))

    for out_idx, col in enumerate(columns):
        y = fold.Y[:, col]
        sd = float(np.std(y))
        if sd == 0.0:
            logger.warning("importance_scores: outcome column %d is constant; its scores are set to zero", col)
            continue
        y = (y - y.mean()) / sd

        if config.importance == "lasso":
            fit = _fit_outcome(X, y, config)
            scores = np.abs(fit.standardized)
        else:
            forest = RandomForestRegressor(
                n_estimators=100,
                min_samples_leaf=5,
                random_state=config.random_state,
                n_jobs=1,
            )
            forest.fit(X, y)
            scores = forest.feature_importances_

        s_first = scores[d_s:d_s + p]
        s_second = scores[d_s + p:]
        Z[:, out_idx] = np.where(swap, s_second, s_first)
        Zk[:, out_idx] = np.where(swap, s_first, s_second)

    return Z, Zk


def aggregate_w(Z: np.ndarray, Z_knockoff: np.ndarray, combiner: str = "difference") -> np.ndarray:
    """W_j = f(max_i Z_ji, max_i Z~_ji) with an antisymmetric f."""
    Z = np.asarray(Z, dtype=float)
    Zk = np.asarray(Z_knockoff, dtype=float)
    if Z.shape != Zk.shape:
        raise ContractViolation(f"aggregate_w: shapes {Z.shape} and {Zk.shape} differ")
    if Z.ndim == 1:
        Z, Zk = Z[:, None], Zk[:, None]

    u = Z.max(axis=1)
    v = Zk.max(axis=1)
    if combiner == "difference":
        return u - v
    if combiner == "signed_max":
        return np.maximum(u, v) * np.sign(u - v)
    raise ContractViolation(f"aggregate_w: unknown combiner {combiner!r}")


def knockoff_threshold(W: np.ndarray, alpha: float) -> float:
    """
    Smallest tau in {|W_j| : W_j != 0} with #{W_j <= -tau} / #{W_j >= tau} <= alpha.

    A zero denominator counts as an infinite ratio; +inf when nothing qualifies.
    """
    if not 0.0 < alpha < 1.0:
        raise ContractViolation(f"knockoff_threshold: alpha must be in (0, 1), got {alpha}")
    W = np.asarray(W, dtype=float)
    for tau in np.unique(np.abs(W[W != 0.0])):
        negatives = int(np.sum(W <= -tau))
        positives = int(np.sum(W >= tau))
        if positives > 0 and negatives / positives <= alpha:
            return float(tau)
    return float("inf")


def fold_statistics(fold: AugmentedDataset, config: Optional[SelectionConfig] = None) -> KnockoffStats:
    config = config or SelectionConfig()
    Z_mat, Zk_mat = importance_scores(fold, config)
    W = aggregate_w(Z_mat, Zk_mat, config.combiner)
    tau = knockoff_threshold(W, config.alpha)
    selected = frozenset(int(j) for j in np.flatnonzero(W >= tau))
    return KnockoffStats(
        Z=Z_mat.max(axis=1),
        Z_knockoff=Zk_mat.max(axis=1),
        W=W,
        tau=tau,
        selected=selected,
        Z_matrix=Z_mat,
        Z_knockoff_matrix=Zk_mat,
    )
