# knockoff_rl/knockoff/dataset.py

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from knockoff_rl.envs.synthetic import Transition
from knockoff_rl.errors import ContractViolation, InsufficientDataError


@dataclass
class AugmentedDataset:
    """
    Buffered (s, a, a_knockoff, y) rows with y = (r, s_next).

    `t` is the row's position in the original buffer; fold membership is
    t mod K.
    """

    S: np.ndarray
    A: np.ndarray
    A_knockoff: np.ndarray
    Y: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        n = self.S.shape[0]
        for name in ("A", "A_knockoff", "Y", "t"):
            if getattr(self, name).shape[0] != n:
                raise ContractViolation(f"AugmentedDataset: {name} has {getattr(self, name).shape[0]} rows, expected {n}")
        if self.A.shape != self.A_knockoff.shape:
            raise ContractViolation("AugmentedDataset: A and A_knockoff shapes differ")
        if self.Y.shape[1] != self.S.shape[1] + 1:
            raise ContractViolation(
                f"AugmentedDataset: Y has {self.Y.shape[1]} columns, expected state_dim + 1 = {self.S.shape[1] + 1}"
            )

    @property
    def n(self) -> int:
        return int(self.S.shape[0])

    @property
    def state_dim(self) -> int:
        return int(self.S.shape[1])

    @property
    def action_dim(self) -> int:
        return int(self.A.shape[1])

    def subset(self, rows: np.ndarray) -> "AugmentedDataset":
        return AugmentedDataset(self.S[rows], self.A[rows], self.A_knockoff[rows], self.Y[rows], self.t[rows])

    def fold_ids(self, k: int) -> np.ndarray:
        return self.t % k


def build_augmented(buffer: Sequence[Transition]) -> AugmentedDataset:
    """Stack transitions in buffer order; every transition must carry a knockoff copy."""
    if len(buffer) == 0:
        raise InsufficientDataError("build_augmented: buffer is empty")
    missing = [i for i, tr in enumerate(buffer) if tr.a_knockoff is None]
    if missing:
        raise ContractViolation(
            f"build_augmented: {len(missing)} transitions lack a knockoff copy (first at position {missing[0]})"
        )

    S = np.array([tr.s for tr in buffer], dtype=float)
    A = np.array([tr.a for tr in buffer], dtype=float)
    A_knockoff = np.array([tr.a_knockoff for tr in buffer], dtype=float)
    r = np.array([tr.r for tr in buffer], dtype=float)
    S_next = np.array([tr.s_next for tr in buffer], dtype=float)
    Y = np.column_stack([r, S_next])
    return AugmentedDataset(S=S, A=A, A_knockoff=A_knockoff, Y=Y, t=np.arange(len(buffer)))


def sample_split(ds: AugmentedDataset, k: int) -> List[AugmentedDataset]:
    """Partition rows by t mod K; fold k (0-based) holds t with t mod K == k."""
    if k < 1:
        raise ContractViolation(f"sample_split: K must be >= 1, got {k}")
    if k > ds.n:
        raise ContractViolation(f"sample_split: K={k} exceeds the {ds.n} available rows")
    ids = ds.fold_ids(k)
    return [ds.subset(np.flatnonzero(ids == fold)) for fold in range(k)]
