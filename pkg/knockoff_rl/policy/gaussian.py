# knockoff_rl/policy/gaussian.py

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from knockoff_rl.errors import ContractViolation, NonFiniteError
from knockoff_rl.nn.mlp import Mlp, MlpGrads, init_mlp, mlp_backward, mlp_forward

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GaussianPolicy:
    """
    a ~ N(mu(s), diag(sigma)^2) with mu(s) = action_bound * tanh(mean_net(s))
    and a state-independent learnable log_std.
    """

    mean_net: Mlp
    log_std: np.ndarray
    action_bound: float = 1.0

    def __post_init__(self):
        self.log_std = np.asarray(self.log_std, dtype=float).copy()
        if self.log_std.shape != (self.mean_net.output_dim,):
            raise ContractViolation(
                f"GaussianPolicy: log_std has shape {self.log_std.shape}, "
                f"expected ({self.mean_net.output_dim},)"
            )
        self.clamp_log_std()

    @property
    def state_dim(self) -> int:
        return self.mean_net.input_dim

    @property
    def action_dim(self) -> int:
        return self.mean_net.output_dim

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def clamp_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.mean_net.copy(), self.log_std.copy(), self.action_bound)


def make_policy(
    state_dim: int,
    action_dim: int,
    hidden_sizes: Sequence[int] = (64, 32),
    activation: str = "tanh",
    init_log_std: float = -0.5,
    action_bound: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> GaussianPolicy:
    net = init_mlp([state_dim, *hidden_sizes, action_dim], activation=activation, rng=rng, final_scale=0.01)
    return GaussianPolicy(net, np.full(action_dim, float(init_log_std)), action_bound)


def _policy_mean(pol: GaussianPolicy, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = mlp_forward(pol.mean_net, s)
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("GaussianPolicy: mean network produced non-finite output")
    return pol.action_bound * np.tanh(z), z


def mean_action(pol: GaussianPolicy, s: np.ndarray) -> np.ndarray:
    """Deterministic action used for evaluation."""
    mu, _ = _policy_mean(pol, s)
    return mu


def log_prob_components(pol: GaussianPolicy, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Per-dimension Gaussian log densities log pi(a_i | s); batched over leading axis."""
    mu, _ = _policy_mean(pol, s)
    a = np.asarray(a, dtype=float)
    if a.shape != mu.shape:
        raise ContractViolation(f"log_prob_components: action shape {a.shape} does not match {mu.shape}")
    u = (a - mu) / pol.std
    return -0.5 * u * u - pol.log_std - 0.5 * LOG_2PI


def sample_action_raw(
    pol: GaussianPolicy, s: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (clamped action, per-dimension log densities of the raw draw, raw draw)."""
    mu, _ = _policy_mean(pol, s)
    raw = mu + pol.std * rng.standard_normal(mu.shape)
    u = (raw - mu) / pol.std
    log_probs = -0.5 * u * u - pol.log_std - 0.5 * LOG_2PI
    action = np.clip(raw, -pol.action_bound, pol.action_bound)
    return action, log_probs, raw


def sample_action(pol: GaussianPolicy, s: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """a = mu(s) + sigma * eps clamped to the action bounds, with per-dimension log densities."""
    action, log_probs, _ = sample_action_raw(pol, s, rng)
    return action, log_probs


def resample_knockoff(pol: GaussianPolicy, s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fresh independent draw from pi(.|s), clamped exactly like the real action."""
    action, _, _ = sample_action_raw(pol, s, rng)
    return action


def entropy(pol: GaussianPolicy, m: Optional[np.ndarray] = None) -> float:
    per_dim = pol.log_std + 0.5 * (1.0 + LOG_2PI)
    if m is None:
        return float(per_dim.sum())
    return float(per_dim @ np.asarray(m, dtype=float))


def log_prob_backward(
    pol: GaussianPolicy,
    states: np.ndarray,
    actions: np.ndarray,
    upstream: np.ndarray,
) -> Tuple[MlpGrads, np.ndarray]:
    """
    Gradients of sum(upstream * log_prob_components(states, actions)).

    Returns (mean-network grads, log_std grad).  A zero upstream column
    yields exactly zero gradient on the matching output row of the final
    layer.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=float))

    mu, z = _policy_mean(pol, states)
    sigma = pol.std
    diff = actions - mu

    # d logp / d mu = (a - mu) / sigma^2 ; d mu / d z = bound * (1 - tanh(z)^2)
    dz = upstream * (diff / (sigma * sigma)) * pol.action_bound * (1.0 - np.tanh(z) ** 2)
    grads, _ = mlp_backward(pol.mean_net, states, dz)

    u2 = (diff / sigma) ** 2
    log_std_grad = np.sum(upstream * (u2 - 1.0), axis=0)
    return grads, log_std_grad
