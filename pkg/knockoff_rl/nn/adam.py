# knockoff_rl/nn/adam.py

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from knockoff_rl.errors import ContractViolation, NonFiniteError
from knockoff_rl.nn.mlp import Mlp, check_finite, mlp_backward, mlp_forward


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        for name in ("lr", "beta1", "beta2", "eps"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"AdamState: {name} must be positive")

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **kwargs) -> "AdamState":
        state = cls(**kwargs)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def clip_grad_norm(grads: Sequence[np.ndarray], max_norm: float) -> Tuple[List[np.ndarray], float]:
    """Scale grads so their global L2 norm is at most max_norm; returns (grads, pre-clip norm)."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm is None or total <= max_norm or total == 0.0:
        return [np.asarray(g) for g in grads], total
    scale = max_norm / total
    return [g * scale for g in grads], total


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> List[np.ndarray]:
    """
    One bias-corrected Adam update.

    Nothing is committed until every new parameter is finite, so a rejected
    call (non-finite gradient or update) leaves state and params unchanged.
    """
    if len(params) != len(grads):
        raise ContractViolation(f"adam_step: {len(params)} parameter arrays but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]

    for k, (p, g, m) in enumerate(zip(params, grads, state.m)):
        if np.shape(p) != np.shape(g) or np.shape(p) != np.shape(m):
            raise ContractViolation(
                f"adam_step: shape mismatch at index {k}: param {np.shape(p)}, grad {np.shape(g)}, "
                f"moment {np.shape(m)}"
            )
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"adam_step: gradient {k} is non-finite; update rejected")

    t = state.step + 1
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t

    new_m, new_v, updated = [], [], []
    for k, (p, g) in enumerate(zip(params, grads)):
        m_k = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        v_k = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        new_p = p - state.lr * (m_k / bias1) / (np.sqrt(v_k / bias2) + state.eps)
        if not np.all(np.isfinite(new_p)):
            raise NonFiniteError(f"adam_step: parameter {k} became non-finite at step {t}; update rejected")
        new_m.append(m_k)
        new_v.append(v_k)
        updated.append(new_p)

    state.m, state.v, state.step = new_m, new_v, t
    return updated


def mse_regression_step(
    net: Mlp,
    state: AdamState,
    inputs: np.ndarray,
    targets: np.ndarray,
    max_grad_norm: float = 0.5,
) -> float:
    """
    One Adam step on 0.5 * mean squared error; returns the pre-step loss.

    Shared by the PPO value network and the masked Q regression.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float).reshape(len(inputs), net.output_dim)
    pred = mlp_forward(net, inputs)
    err = pred - targets
    loss = 0.5 * float(np.mean(np.sum(err * err, axis=1)))
    if not np.isfinite(loss):
        raise NonFiniteError("mse_regression_step: loss is non-finite")

    grads, _ = mlp_backward(net, inputs, err / len(inputs))
    clipped, _ = clip_grad_norm(grads.as_list(), max_grad_norm)
    net.set_parameters(adam_step(state, net.parameters(), clipped))
    check_finite(net)
    return loss
