# knockoff_rl/reporting/metrics.py

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional

from knockoff_rl.errors import ContractViolation


@dataclass(frozen=True)
class SelectionMetrics:
    tpr: float
    fdr: float
    fpr: float
    mfdr_estimate: float
    selected: FrozenSet[int]
    truth: FrozenSet[int]


def score_selection(
    selected: Iterable[int],
    truth: Iterable[int],
    p: int,
    alpha: Optional[float] = 0.1,
) -> SelectionMetrics:
    """
    TPR = |S & G| / |G|, FDR = |S - G| / max(1, |S|), FPR = |S - G| / |G^c|.

    An empty G gives TPR 1 (nothing to find); an empty complement gives
    FPR 0.  mfdr_estimate = |S - G| / (1 / alpha + |S|).
    """
    selected = frozenset(int(j) for j in selected)
    truth = frozenset(int(j) for j in truth)
    bad = [j for j in selected | truth if not 0 <= j < p]
    if bad:
        raise ContractViolation(f"score_selection: indices {sorted(bad)} out of range for p={p}")

    n_false = len(selected - truth)
    n_null = p - len(truth)
    tpr = len(selected & truth) / len(truth) if truth else 1.0
    fdr = n_false / max(1, len(selected))
    fpr = n_false / n_null if n_null > 0 else 0.0
    q = alpha if alpha else 0.1
    mfdr = n_false / (1.0 / q + len(selected))

    return SelectionMetrics(tpr=tpr, fdr=fdr, fpr=fpr, mfdr_estimate=mfdr, selected=selected, truth=truth)
