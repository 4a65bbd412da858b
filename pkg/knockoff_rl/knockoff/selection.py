# knockoff_rl/knockoff/selection.py

import logging
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Union

import numpy as np
import yaml
from joblib import Parallel, delayed

from knockoff_rl.envs.synthetic import Transition
from knockoff_rl.errors import ContractViolation, InsufficientDataError, NonFiniteError, SelectionError
from knockoff_rl.knockoff.config import MIN_FOLD_ROWS, SelectionConfig
from knockoff_rl.knockoff.dataset import AugmentedDataset, build_augmented, sample_split
from knockoff_rl.knockoff.statistics import KnockoffStats, fold_statistics
from knockoff_rl.policy.masks import SelectionMask

logger = logging.getLogger(__name__)

REPORT_FORMAT = "knockoff_rl.selection_report"
REPORT_VERSION = 1


@dataclass
class SelectionReport:
    alpha: float
    gamma_vote: float
    k_folds: int
    lambda_policy: str
    importance: str
    combiner: str
    n_rows: int
    p: int
    fold_selections: List[List[int]] = field(default_factory=list)
    fold_tau: List[float] = field(default_factory=list)
    fold_w: List[List[float]] = field(default_factory=list)
    votes: List[int] = field(default_factory=list)
    vote_frequency: List[float] = field(default_factory=list)
    selected: List[int] = field(default_factory=list)
    wall_clock: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def select_fold(fold: AugmentedDataset, config: Optional[SelectionConfig] = None) -> FrozenSet[int]:
    """G_k = {j : W_j >= tau}; empty when tau is infinite."""
    return fold_statistics(fold, config).selected


def vote_counts(selections: Sequence[Iterable[int]], p: int) -> np.ndarray:
    counts = np.zeros(p, dtype=int)
    for sel in selections:
        for j in sel:
            if not 0 <= int(j) < p:
                raise ContractViolation(f"vote_counts: index {j} out of range for p={p}")
            counts[int(j)] += 1
    return counts


def majority_vote(selections: Sequence[Iterable[int]], k: int, gamma: float) -> FrozenSet[int]:
    """Keep j when the fraction of folds selecting it is at least gamma (inclusive)."""
    if len(selections) != k:
        raise ContractViolation(f"majority_vote: got {len(selections)} fold selections for K={k}")
    if not 0.0 < gamma <= 1.0:
        raise ContractViolation(f"majority_vote: gamma must be in (0, 1], got {gamma}")

    counts = Counter(int(j) for sel in selections for j in set(sel))
    return frozenset(j for j, c in counts.items() if c / k >= gamma)


def _run_folds(folds: List[AugmentedDataset], config: SelectionConfig) -> List[KnockoffStats]:
    if config.n_jobs == 1 or len(folds) == 1:
        return [fold_statistics(fold, config) for fold in folds]
    # each fit reads only its own fold; output order follows fold order
    return Parallel(n_jobs=config.n_jobs)(delayed(fold_statistics)(fold, config) for fold in folds)


def select_from_dataset(
    ds: AugmentedDataset,
    config: Optional[SelectionConfig] = None,
    created_at_step: int = 0,
) -> SelectionMask:
    """
    sample_split -> per-fold statistics -> majority vote, on an assembled dataset.

    The returned mask carries vote counts, the last fold's W and tau, and a
    SelectionReport with the full per-fold provenance.
    """
    config = config or SelectionConfig()
    k = config.k_folds
    if ds.n < MIN_FOLD_ROWS * k:
        raise InsufficientDataError(
            f"select_actions: {ds.n} transitions are too few for K={k} folds "
            f"(need at least {MIN_FOLD_ROWS * k}); increase T_vs"
        )

    start = time.perf_counter()
    folds = sample_split(ds, k)
    try:
        stats = _run_folds(folds, config)
    except NonFiniteError as exc:
        raise SelectionError(f"select_actions: importance fit failed: {exc}") from exc

    selections = [s.selected for s in stats]
    chosen = majority_vote(selections, k, config.gamma_vote)
    votes = vote_counts(selections, ds.action_dim)
    elapsed = time.perf_counter() - start

    report = SelectionReport(
        alpha=config.alpha,
        gamma_vote=config.gamma_vote,
        k_folds=k,
        lambda_policy=config.lambda_policy,
        importance=config.importance,
        combiner=config.combiner,
        n_rows=ds.n,
        p=ds.action_dim,
        fold_selections=[sorted(s) for s in selections],
        fold_tau=[float(s.tau) for s in stats],
        fold_w=[[float(w) for w in s.W] for s in stats],
        votes=[int(v) for v in votes],
        vote_frequency=[float(v) / k for v in votes],
        selected=sorted(chosen),
        wall_clock=elapsed,
    )
    logger.info(
        "select_actions: %d rows, K=%d, selected %d of %d actions in %.2fs",
        ds.n, k, len(chosen), ds.action_dim, elapsed,
    )

    return SelectionMask.from_indices(
        chosen,
        ds.action_dim,
        votes=votes,
        w_stats=stats[-1].W,
        tau=stats[-1].tau,
        created_at_step=created_at_step,
        report=report,
    )


def select_actions(
    buffer: Sequence[Transition],
    alpha: Optional[float] = None,
    gamma: Optional[float] = None,
    k: Optional[int] = None,
    config: Optional[SelectionConfig] = None,
    created_at_step: int = 0,
) -> SelectionMask:
    """
    Knockoff-sampling selection over a buffer of transitions with knockoff copies.

    Explicit alpha / gamma / k override the matching SelectionConfig fields.
    """
    config = config or SelectionConfig()
    overrides = {
        name: value
        for name, value in (("alpha", alpha), ("gamma_vote", gamma), ("k_folds", k))
        if value is not None
    }
    if overrides:
        config = replace(config, **overrides)

    if len(buffer) < MIN_FOLD_ROWS * config.k_folds:
        raise InsufficientDataError(
            f"select_actions: {len(buffer)} transitions are too few for K={config.k_folds} folds "
            f"(need at least {MIN_FOLD_ROWS * config.k_folds}); increase T_vs"
        )
    return select_from_dataset(build_augmented(buffer), config, created_at_step)


def write_selection_report(report: SelectionReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format": REPORT_FORMAT, "version": REPORT_VERSION, **report.to_dict()}
    with path.open("w") as f:
        yaml.safe_dump(payload, f, sort_keys=False)
    return path
