# knockoff_rl/policy/masks.py

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, FrozenSet, Iterable, Optional, Union

import numpy as np
import yaml
from scipy.stats import multivariate_normal

from knockoff_rl.errors import ContractViolation
from knockoff_rl.nn.adam import AdamState, mse_regression_step
from knockoff_rl.nn.mlp import Mlp, mlp_forward
from knockoff_rl.policy.gaussian import (
    GaussianPolicy,
    log_prob_components,
    mean_action,
    sample_action,
)

logger = logging.getLogger(__name__)

MASK_FORMAT = "knockoff_rl.selection_mask"
MASK_VERSION = 1


@dataclass
class SelectionMask:
    """
    Binary selection vector m plus where it came from.

    votes: per-action fold vote counts; w_stats: W vector of the last fold;
    tau: threshold of the last fold; report: full selection provenance.
    """

    m: np.ndarray
    votes: Optional[np.ndarray] = None
    w_stats: Optional[np.ndarray] = None
    tau: Optional[float] = None
    created_at_step: int = 0
    report: Optional[Any] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.m = np.asarray(self.m).astype(int)
        if self.m.ndim != 1 or not np.all((self.m == 0) | (self.m == 1)):
            raise ContractViolation("SelectionMask: m must be a binary vector")

    @property
    def p(self) -> int:
        return int(self.m.shape[0])

    @property
    def selected(self) -> FrozenSet[int]:
        return frozenset(int(j) for j in np.flatnonzero(self.m))

    @property
    def is_empty(self) -> bool:
        return not self.m.any()

    @classmethod
    def from_indices(cls, indices: Iterable[int], p: int, **provenance) -> "SelectionMask":
        m = np.zeros(p, dtype=int)
        for j in indices:
            if not 0 <= int(j) < p:
                raise ContractViolation(f"SelectionMask.from_indices: index {j} out of range for p={p}")
            m[int(j)] = 1
        return cls(m=m, **provenance)

    @classmethod
    def all_ones(cls, p: int, created_at_step: int = 0) -> "SelectionMask":
        return cls(m=np.ones(p, dtype=int), created_at_step=created_at_step)


# ----------------------------------------------------------------------
# Mask algebra
# ----------------------------------------------------------------------

def _check_len(name: str, x: np.ndarray, m: np.ndarray) -> None:
    if x.shape[-1] != m.shape[0]:
        raise ContractViolation(f"{name}: length {x.shape[-1]} does not match mask length {m.shape[0]}")


def mask_action_input(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    """m * a, the action fed to a masked Q function."""
    a = np.asarray(a, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_len("mask_action_input", a, m)
    return a * m


def mask_log_prob(per_dim_log_probs: np.ndarray, m: np.ndarray) -> Union[float, np.ndarray]:
    """m . (log pi(a_1|s), ..., log pi(a_p|s)); batched over leading axis."""
    lp = np.asarray(per_dim_log_probs, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_len("mask_log_prob", lp, m)
    out = lp @ m
    return float(out) if np.ndim(out) == 0 else out


def mask_covariance(sigma: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Keep off-diagonal (i, j) only when both actions are selected; keep the diagonal."""
    sigma = np.asarray(sigma, dtype=float)
    m = np.asarray(m, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ContractViolation(f"mask_covariance: expected a square matrix, got {sigma.shape}")
    _check_len("mask_covariance", sigma, m)
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12):
        raise ContractViolation("mask_covariance: covariance matrix is not symmetric")

    keep = np.outer(m, m)
    np.fill_diagonal(keep, 1.0)
    return sigma * keep


def sample_correlated(mu: np.ndarray, sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.multivariate_normal(np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float))


def masked_correlated_log_prob(a: np.ndarray, mu: np.ndarray, sigma: np.ndarray, m: np.ndarray) -> float:
    """
    Masked log density for a correlated Gaussian policy.

    Under the masked covariance the non-selected actions are independent of
    the selected block, so their terms drop out and what remains is the
    joint density of the selected coordinates.
    """
    m = np.asarray(m)
    masked = mask_covariance(sigma, m)
    sel = np.flatnonzero(m)
    if sel.size == 0:
        return 0.0
    a = np.asarray(a, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(multivariate_normal.logpdf(a[sel], mean=mu[sel], cov=masked[np.ix_(sel, sel)]))


# ----------------------------------------------------------------------
# Masked wrappers
# ----------------------------------------------------------------------

class MaskedPolicy:
    """Policy view whose log-probability path is mask_log_prob; parameters are shared, not copied."""

    def __init__(self, policy: GaussianPolicy, mask: SelectionMask):
        self.policy = policy
        self.mask = mask

    @property
    def m(self) -> np.ndarray:
        return self.mask.m

    def log_prob(self, s: np.ndarray, a: np.ndarray):
        return mask_log_prob(log_prob_components(self.policy, s, a), self.mask.m)

    def sample(self, s: np.ndarray, rng: np.random.Generator):
        return sample_action(self.policy, s, rng)

    def mean(self, s: np.ndarray) -> np.ndarray:
        return mean_action(self.policy, s)


class MaskedQ:
    """Q^m(a, s) = Q(m * a, s) on a network taking [s, a] as input."""

    def __init__(self, q_net: Mlp, mask: SelectionMask):
        if q_net.output_dim != 1:
            raise ContractViolation("MaskedQ: Q network must have a single output")
        self.q_net = q_net
        self.mask = mask
        self.state_dim = q_net.input_dim - mask.p
        if self.state_dim <= 0:
            raise ContractViolation(
                f"MaskedQ: network input {q_net.input_dim} too small for {mask.p} actions plus a state"
            )

    def inputs(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(s, dtype=float), mask_action_input(a, self.mask.m)], axis=-1)

    def value(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        out = mlp_forward(self.q_net, self.inputs(s, a))
        return out[..., 0]

    def regression_step(self, state: AdamState, s: np.ndarray, a: np.ndarray, targets: np.ndarray) -> float:
        return mse_regression_step(self.q_net, state, self.inputs(s, a), np.asarray(targets).reshape(-1, 1))


def apply_mask(target: Union[GaussianPolicy, Mlp], mask: SelectionMask):
    """
    Wrap a policy (log-prob masking) or a Q network (input masking).

    An all-zero mask would make the policy degenerate, so it is replaced by
    the all-ones mask with a warning.
    """
    if mask.is_empty:
        logger.warning("apply_mask: empty selection; falling back to the all-ones mask")
        mask = SelectionMask(
            m=np.ones(mask.p, dtype=int),
            votes=mask.votes,
            w_stats=mask.w_stats,
            tau=mask.tau,
            created_at_step=mask.created_at_step,
            report=mask.report,
        )

    if isinstance(target, GaussianPolicy):
        if target.action_dim != mask.p:
            raise ContractViolation(f"apply_mask: mask length {mask.p} != action_dim {target.action_dim}")
        return MaskedPolicy(target, mask)
    if isinstance(target, Mlp):
        return MaskedQ(target, mask)
    raise ContractViolation(f"apply_mask: cannot mask object of type {type(target).__name__}")


# ----------------------------------------------------------------------
# Sidecar persistence
# ----------------------------------------------------------------------

def _floats(x):
    return None if x is None else [float(v) for v in np.asarray(x).ravel()]


def save_mask(mask: SelectionMask, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": MASK_FORMAT,
        "version": MASK_VERSION,
        "p": mask.p,
        "selected": sorted(mask.selected),
        "votes": None if mask.votes is None else [int(v) for v in mask.votes],
        "tau": None if mask.tau is None else float(mask.tau),
        "w_stats": _floats(mask.w_stats),
        "created_at_step": int(mask.created_at_step),
    }
    with path.open("w") as f:
        yaml.safe_dump(payload, f, sort_keys=False)
    return path


def load_mask(path: Union[str, Path]) -> SelectionMask:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"mask sidecar not found at {path}")
    with path.open("r") as f:
        payload = yaml.safe_load(f)
    if payload.get("format") != MASK_FORMAT or payload.get("version") != MASK_VERSION:
        raise ContractViolation(f"load_mask: unsupported header in {path}")

    return SelectionMask.from_indices(
        payload["selected"],
        payload["p"],
        votes=None if payload["votes"] is None else np.asarray(payload["votes"], dtype=int),
        w_stats=None if payload["w_stats"] is None else np.asarray(payload["w_stats"], dtype=float),
        tau=payload["tau"],
        created_at_step=payload["created_at_step"],
    )
