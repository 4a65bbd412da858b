# knockoff_rl/envs/synthetic.py

from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple, Union

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from knockoff_rl.errors import ContractViolation, NonFiniteError

SeedLike = Union[None, int, np.random.Generator]


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EnvSpec:
    """
    Linear-Gaussian MDP with quadratic reward.

    Only the action coordinates listed in `true_set` enter the dynamics
    (through the columns of B, in `true_set` order) and the action cost;
    every other coordinate is redundant by construction.
    """

    state_dim: int
    action_dim: int
    true_set: Tuple[int, ...]
    A: np.ndarray
    B: np.ndarray
    noise_scale: float = 0.05
    action_cost: float = 0.01
    horizon: int = 100
    action_bound: float = 1.0
    seed: Optional[int] = None
    name: str = "custom"

    def __post_init__(self):
        true_set = tuple(int(j) for j in self.true_set)
        object.__setattr__(self, "true_set", true_set)
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "B", _frozen(np.reshape(self.B, (self.state_dim, len(true_set)))))

        if self.state_dim <= 0 or self.action_dim <= 0:
            raise ContractViolation("EnvSpec: state_dim and action_dim must be positive")
        if len(true_set) > self.action_dim:
            raise ContractViolation(f"EnvSpec: |G|={len(true_set)} exceeds action_dim={self.action_dim}")
        if len(set(true_set)) != len(true_set):
            raise ContractViolation(f"EnvSpec: true_set has duplicate indices {true_set}")
        if any(j < 0 or j >= self.action_dim for j in true_set):
            raise ContractViolation(f"EnvSpec: true_set {true_set} out of range for action_dim={self.action_dim}")
        if self.A.shape != (self.state_dim, self.state_dim):
            raise ContractViolation(f"EnvSpec: A has shape {self.A.shape}, expected {(self.state_dim,) * 2}")
        radius = float(np.max(np.abs(np.linalg.eigvals(self.A))))
        if radius >= 1.0:
            raise ContractViolation(f"EnvSpec: spectral radius of A is {radius:.4f}, must be < 1")
        if self.noise_scale < 0 or self.action_cost < 0:
            raise ContractViolation("EnvSpec: noise_scale and action_cost must be non-negative")
        if self.horizon <= 0 or self.action_bound <= 0:
            raise ContractViolation("EnvSpec: horizon and action_bound must be positive")


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    a_knockoff: Optional[np.ndarray]
    r: float
    s_next: np.ndarray
    t: int
    episode_id: int


# ----------------------------------------------------------------------
# Spec construction
# ----------------------------------------------------------------------

def _random_orthonormal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def make_env_spec(
    state_dim: int = 4,
    n_true: int = 4,
    action_dim: int = 54,
    noise_scale: float = 0.05,
    action_cost: float = 0.01,
    horizon: int = 100,
    action_bound: float = 1.0,
    true_indices: Optional[Sequence[int]] = None,
    seed: int = 0,
    name: str = "custom",
) -> EnvSpec:
    """
    Build a reproducible EnvSpec.

    A is symmetric with eigenvalues in [0.3, 0.9]; B has singular values in
    [0.5, 1.5] so every true action carries signal.  G defaults to the
    first n_true coordinates.
    """
    rng = np.random.default_rng(seed)

    q = _random_orthonormal(rng, state_dim, state_dim)
    eig = rng.uniform(0.3, 0.9, size=state_dim)
    A = q @ np.diag(eig) @ q.T

    true_set = tuple(range(n_true)) if true_indices is None else tuple(int(j) for j in true_indices)
    if len(true_set) != n_true:
        raise ContractViolation(f"make_env_spec: got {len(true_set)} true indices for n_true={n_true}")

    if n_true == 0:
        B = np.zeros((state_dim, 0))
    else:
        rank = min(state_dim, n_true)
        u = _random_orthonormal(rng, state_dim, rank)
        v = _random_orthonormal(rng, n_true, rank)
        sv = rng.uniform(0.5, 1.5, size=rank)
        B = u @ np.diag(sv) @ v.T

    return EnvSpec(
        state_dim=state_dim,
        action_dim=action_dim,
        true_set=true_set,
        A=A,
        B=B,
        noise_scale=noise_scale,
        action_cost=action_cost,
        horizon=horizon,
        action_bound=action_bound,
        seed=seed,
        name=name,
    )


def make_augmented_spec(raw_action_dim: int, extra_dims: int, state_dim: Optional[int] = None, **kwargs) -> EnvSpec:
    """A raw action space with `extra_dims` dummy coordinates appended after it."""
    state_dim = raw_action_dim if state_dim is None else state_dim
    return make_env_spec(
        state_dim=state_dim,
        n_true=raw_action_dim,
        action_dim=raw_action_dim + extra_dims,
        **kwargs,
    )


# ----------------------------------------------------------------------
# Dynamics
# ----------------------------------------------------------------------

def env_reset(spec: EnvSpec, seed: SeedLike = None) -> np.ndarray:
    """Initial state uniform on [-1, 1]^d_s."""
    return _as_rng(seed).uniform(-1.0, 1.0, size=spec.state_dim)


def env_step(
    spec: EnvSpec,
    s: np.ndarray,
    a: np.ndarray,
    t: int = 0,
    rng: SeedLike = None,
    noise: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float, bool]:
    """
    s_next = A s + B a[G] + noise_scale * eps,  r = -|s|^2 - c |a[G]|^2.

    `t` is the step index of `s`; done is True when t + 1 reaches the
    horizon.  Pass `noise` to fix the standard-normal draw, otherwise it is
    drawn from `rng` (required when noise_scale > 0).
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if s.shape != (spec.state_dim,):
        raise ContractViolation(f"env_step: state shape {s.shape}, expected ({spec.state_dim},)")
    if a.shape != (spec.action_dim,):
        raise ContractViolation(f"env_step: action shape {a.shape}, expected ({spec.action_dim},)")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("env_step: action holds non-finite entries")

    a = np.clip(a, -spec.action_bound, spec.action_bound)
    a_true = a[list(spec.true_set)]

    if noise is None:
        if spec.noise_scale > 0:
            if rng is None:
                raise ContractViolation("env_step: rng or noise is required when noise_scale > 0")
            noise = _as_rng(rng).standard_normal(spec.state_dim)
        else:
            noise = np.zeros(spec.state_dim)

    s_next = spec.A @ s + spec.B @ a_true + spec.noise_scale * np.asarray(noise, dtype=float)
    r = -float(s @ s) - spec.action_cost * float(a_true @ a_true)
    done = t + 1 >= spec.horizon
    return s_next, r, done


def ground_truth_set(spec: EnvSpec) -> FrozenSet[int]:
    """G itself; scoring only, never visible to the agent."""
    return frozenset(spec.true_set)


# ----------------------------------------------------------------------
# gymnasium interface
# ----------------------------------------------------------------------

class SyntheticActionEnv(gym.Env):
    """
    gymnasium wrapper over an EnvSpec.

    Episodes end with truncated=True at the horizon so value bootstrapping
    sees a time limit rather than a terminal state.
    """

    metadata = {"render_modes": []}

    def __init__(self, spec: EnvSpec):
        super().__init__()
        self.env_spec = spec
        self.observation_space = spaces.Box(low=-np.inf, high=np.inf, shape=(spec.state_dim,), dtype=np.float64)
        self.action_space = spaces.Box(
            low=-spec.action_bound, high=spec.action_bound, shape=(spec.action_dim,), dtype=np.float64
        )
        self._state: Optional[np.ndarray] = None
        self._t = 0
        self._finished = False
        self.episode_id = -1

    @property
    def needs_reset(self) -> bool:
        return self._state is None or self._finished

    @property
    def state(self) -> Optional[np.ndarray]:
        return None if self._state is None else self._state.copy()

    @property
    def t(self) -> int:
        return self._t

    def reset(self, seed: Optional[int] = None, options: Optional[dict] = None):
        super().reset(seed=seed)
        self._state = env_reset(self.env_spec, self.np_random)
        self._t = 0
        self._finished = False
        self.episode_id += 1
        return self._state.copy(), {"t": 0, "episode_id": self.episode_id}

    def step(self, action):
        if self.needs_reset:
            raise ContractViolation("SyntheticActionEnv.step: episode is not running; call reset() first")
        s_next, r, done = env_step(self.env_spec, self._state, action, t=self._t, rng=self.np_random)
        self._state = s_next
        self._t += 1
        self._finished = done
        return s_next.copy(), r, False, done, {"t": self._t, "episode_id": self.episode_id}
