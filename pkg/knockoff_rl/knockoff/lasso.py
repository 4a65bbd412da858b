# knockoff_rl/knockoff/lasso.py

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from knockoff_rl.errors import ContractViolation, NonFiniteError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 10_000


@dataclass
class LassoFit:
    """
    Solution of (1/2n)|y - X b|^2 + lam |b|_1 on the (optionally)
    standardized design.

    `coefficients` are on the original column scale; `standardized` gives
    them on the scale the penalty was applied to.
    """

    coefficients: np.ndarray
    intercept: float
    lam: float
    converged: bool
    n_iter: int
    x_mean: np.ndarray
    x_scale: np.ndarray

    @property
    def standardized(self) -> np.ndarray:
        return self.coefficients * self.x_scale


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0)


def _validate(X: np.ndarray, y: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ContractViolation(f"{name}: X has shape {X.shape} but y has {y.shape[0]} rows")
    if X.shape[0] < 2:
        raise ContractViolation(f"{name}: need at least 2 rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteError(f"{name}: inputs hold non-finite values")
    return X, y


def standardize_columns(X: np.ndarray, standardize: bool = True):
    """
    Center columns and, when `standardize`, scale them to mean square 1.

    Returns (Xs, mean, scale, live) where `live` flags non-constant columns;
    constant columns keep scale 1 and are never updated by the solver.
    """
    x_mean = X.mean(axis=0)
    xc = X - x_mean
    ms = np.mean(xc * xc, axis=0)
    live = ms > 0.0
    if standardize:
        scale = np.where(live, np.sqrt(np.where(live, ms, 1.0)), 1.0)
    else:
        scale = np.ones(X.shape[1])
    return xc / scale, x_mean, scale, live


def lambda_max(X: np.ndarray, y: np.ndarray, standardize: bool = True) -> float:
    """Smallest lam for which the solution is exactly zero: max_j |X_j' y| / n."""
    X, y = _validate(X, y, "lambda_max")
    Xs, _, _, live = standardize_columns(X, standardize)
    yc = y - y.mean()
    corr = np.abs(Xs.T @ yc) / X.shape[0]
    corr[~live] = 0.0
    return float(corr.max()) if corr.size else 0.0


def lasso_cd(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    standardize: bool = True,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> LassoFit:
    """
    Cyclic coordinate descent with soft-thresholding.

    Covariance updates on the Gram matrix; after each full sweep the active
    set is iterated to convergence, and the run stops when a full sweep
    moves no coefficient by more than `tol` (or after `max_sweeps`).
    Deterministic for fixed inputs.
    """
    X, y = _validate(X, y, "lasso_cd")
    if not np.isfinite(lam) or lam < 0:
        raise ContractViolation(f"lasso_cd: lambda must be a finite non-negative number, got {lam}")

    n, q = X.shape
    Xs, x_mean, scale, live = standardize_columns(X, standardize)
    y_mean = float(y.mean())
    yc = y - y_mean

    gram = Xs.T @ Xs / n
    grad = Xs.T @ yc / n
    diag = np.diag(gram).copy()
    beta = np.zeros(q)
    live_idx = np.flatnonzero(live & (diag > 0.0))
    lam = float(lam)

    def sweep(indices) -> float:
        max_change = 0.0
        for j in indices:
            old = beta[j]
            rho = grad[j] + diag[j] * old
            if rho > lam:
                new = (rho - lam) / diag[j]
            elif rho < -lam:
                new = (rho + lam) / diag[j]
            else:
                new = 0.0
            if new != old:
                delta = new - old
                np.subtract(grad, gram[:, j] * delta, out=grad)
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        return max_change

    n_sweeps = 0
    converged = False
    while n_sweeps < max_sweeps:
        change = sweep(live_idx)
        n_sweeps += 1
        if change < tol:
            converged = True
            break
        active = live_idx[beta[live_idx] != 0.0]
        while n_sweeps < max_sweeps:
            n_sweeps += 1
            if sweep(active) < tol:
                break

    coef = beta / scale
    intercept = y_mean - float(x_mean @ coef)
    return LassoFit(
        coefficients=coef,
        intercept=intercept,
        lam=lam,
        converged=converged,
        n_iter=n_sweeps,
        x_mean=x_mean,
        x_scale=scale,
    )


def lasso_kkt_violation(X: np.ndarray, y: np.ndarray, fit: LassoFit, standardize: bool = True) -> float:
    """
    Largest subgradient-optimality residual on the standardized problem.

    Zero coefficients need |g_j| <= lam, non-zero ones need g_j = lam * sign(b_j),
    with g = Xs'(y - Xs b) / n.
    """
    X, y = _validate(X, y, "lasso_kkt_violation")
    Xs, _, _, live = standardize_columns(X, standardize)
    b = fit.standardized
    g = Xs.T @ (y - y.mean() - Xs @ b) / X.shape[0]

    zero = b == 0.0
    viol = np.where(zero, np.maximum(np.abs(g) - fit.lam, 0.0), np.abs(g - fit.lam * np.sign(b)))
    viol[~live] = 0.0
    return float(viol.max()) if viol.size else 0.0


def cv_lambda(
    X: np.ndarray,
    y: np.ndarray,
    n_folds: int = 5,
    n_grid: int = 20,
    standardize: bool = True,
) -> float:
    """
    Cross-validated lambda with the one-standard-error rule.

    Folds are contiguous row blocks so neighbouring time steps stay on the
    same side of the split.  Grid: n_grid log-spaced values on
    [1e-3 * lam_max, lam_max].
    """
    X, y = _validate(X, y, "cv_lambda")
    lam_hi = lambda_max(X, y, standardize)
    if lam_hi == 0.0:
        return 0.0
    grid = np.geomspace(lam_hi, 1e-3 * lam_hi, n_grid)

    blocks = np.array_split(np.arange(X.shape[0]), n_folds)
    errors = np.zeros((n_grid, len(blocks)))
    for b, val_idx in enumerate(blocks):
        train_idx = np.setdiff1d(np.arange(X.shape[0]), val_idx)
        for g, lam in enumerate(grid):
            fit = lasso_cd(X[train_idx], y[train_idx], lam, standardize=standardize)
            pred = X[val_idx] @ fit.coefficients + fit.intercept
            errors[g, b] = np.mean((y[val_idx] - pred) ** 2)

    mean_err = errors.mean(axis=1)
    se = errors.std(axis=1, ddof=1) / np.sqrt(len(blocks)) if len(blocks) > 1 else np.zeros(n_grid)
    best = int(np.argmin(mean_err))
    ok = np.flatnonzero(mean_err <= mean_err[best] + se[best])
    # grid is descending, so the first admissible entry is the largest lambda
    return float(grid[ok.min()])
