# knockoff_rl/ppo/rollout.py

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from knockoff_rl.envs.synthetic import SyntheticActionEnv, Transition
from knockoff_rl.errors import ContractViolation
from knockoff_rl.nn.mlp import Mlp, mlp_forward
from knockoff_rl.policy.gaussian import GaussianPolicy, resample_knockoff, sample_action_raw

SEED_BOUND = 2**31 - 1


@dataclass
class RolloutBatch:
    """
    One rollout of on-policy experience.

    `raw_actions` are the unclamped Gaussian draws the stored per-dimension
    `log_probs` belong to; the transitions hold the clamped actions the env
    received.  `episode_ends` marks the last step of an episode (terminal or
    time limit); `terminals` marks only true terminal states.
    """

    transitions: List[Transition]
    raw_actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    next_values: np.ndarray
    terminals: np.ndarray
    episode_ends: np.ndarray
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def states(self) -> np.ndarray:
        return np.array([tr.s for tr in self.transitions], dtype=float)

    @property
    def next_states(self) -> np.ndarray:
        return np.array([tr.s_next for tr in self.transitions], dtype=float)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([tr.r for tr in self.transitions], dtype=float)


def state_values(v_net: Mlp, states: np.ndarray) -> np.ndarray:
    return mlp_forward(v_net, np.atleast_2d(states))[:, 0]


def collect_rollout(
    env: SyntheticActionEnv,
    pol: GaussianPolicy,
    v_net: Mlp,
    n_steps: int,
    store_knockoffs: bool,
    rng: np.random.Generator,
) -> RolloutBatch:
    """
    Step `env` n_steps times under `pol`, continuing any running episode.

    With store_knockoffs each transition also carries a fresh independent
    draw from pi(.|s_t).  The first reset seeds the env from `rng`, so a
    fixed rng makes the batch reproducible.
    """
    if n_steps <= 0:
        raise ContractViolation(f"collect_rollout: n_steps must be positive, got {n_steps}")

    transitions: List[Transition] = []
    raw_actions, log_probs, terminals, ends = [], [], [], []

    for _ in range(n_steps):
        if env.needs_reset:
            seed = int(rng.integers(SEED_BOUND)) if env.episode_id < 0 else None
            env.reset(seed=seed)
        s = env.state
        t = env.t
        a, lp, raw = sample_action_raw(pol, s, rng)
        a_knockoff = resample_knockoff(pol, s, rng) if store_knockoffs else None

        s_next, r, terminated, truncated, _ = env.step(a)
        transitions.append(
            Transition(s=s, a=a, a_knockoff=a_knockoff, r=float(r), s_next=s_next, t=t, episode_id=env.episode_id)
        )
        raw_actions.append(raw)
        log_probs.append(lp)
        terminals.append(bool(terminated))
        ends.append(bool(terminated or truncated))

    terminals = np.array(terminals, dtype=bool)
    states = np.array([tr.s for tr in transitions])
    next_states = np.array([tr.s_next for tr in transitions])
    values = state_values(v_net, states)
    next_values = np.where(terminals, 0.0, state_values(v_net, next_states))

    return RolloutBatch(
        transitions=transitions,
        raw_actions=np.array(raw_actions),
        log_probs=np.array(log_probs),
        values=values,
        next_values=next_values,
        terminals=terminals,
        episode_ends=np.array(ends, dtype=bool),
    )
