# knockoff_rl/ppo/trainer.py

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from knockoff_rl.data.buffer_io import save_buffer as write_buffer
from knockoff_rl.envs.synthetic import (
    EnvSpec,
    SyntheticActionEnv,
    Transition,
    env_reset,
    env_step,
    ground_truth_set,
)
from knockoff_rl.errors import ConfigError, ContractViolation, KnockoffRLError, NonFiniteError
from knockoff_rl.knockoff.config import SelectionConfig
from knockoff_rl.knockoff.selection import select_actions
from knockoff_rl.nn.adam import AdamState, adam_step, clip_grad_norm, mse_regression_step
from knockoff_rl.nn.mlp import Mlp, init_mlp
from knockoff_rl.policy.gaussian import (
    GaussianPolicy,
    entropy,
    log_prob_backward,
    log_prob_components,
    make_policy,
    mean_action,
)
from knockoff_rl.policy.masks import SelectionMask, apply_mask, mask_log_prob
from knockoff_rl.ppo.gae import gae_advantages, normalize_advantages
from knockoff_rl.ppo.rollout import RolloutBatch, collect_rollout, state_values
from knockoff_rl.reporting.summaries import print_training_progress

logger = logging.getLogger(__name__)

METHODS = ("ks", "all", "true")
MASKED_FILLS = ("policy", "zero", "random")


@dataclass
class TrainConfig:
    lr_pi: float = 3e-4
    lr_v: float = 1e-3
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    update_epochs: int = 10
    minibatch: int = 256
    rollout_len: int = 1000
    total_steps: int = 200_000
    t_vs: int = 4000
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 32])
    activation: str = "tanh"
    init_log_std: float = -0.5
    max_grad_norm: float = 0.5
    eval_every: int = 2000
    eval_episodes: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"TrainConfig: gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError(f"TrainConfig: gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if not 0.0 < self.clip_eps < 1.0:
            raise ConfigError(f"TrainConfig: clip_eps must be in (0, 1), got {self.clip_eps}")
        for name in ("update_epochs", "minibatch", "rollout_len", "total_steps", "eval_every", "eval_episodes"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"TrainConfig: {name} must be >= 1, got {getattr(self, name)}")
            setattr(self, name, int(getattr(self, name)))
        if self.lr_pi <= 0 or self.lr_v <= 0:
            raise ConfigError("TrainConfig: learning rates must be positive")
        if int(self.t_vs) < 1 or int(self.t_vs) > self.total_steps:
            raise ConfigError(f"TrainConfig: t_vs must be in [1, total_steps={self.total_steps}], got {self.t_vs}")
        if self.activation not in ("tanh", "relu"):
            raise ConfigError(f"TrainConfig: activation must be tanh or relu, got {self.activation!r}")
        self.t_vs = int(self.t_vs)
        self.hidden_sizes = [int(h) for h in self.hidden_sizes]

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"TrainConfig.from_dict: unknown keys {unknown}")
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainResult:
    log: List[Dict[str, Any]]
    policy: GaussianPolicy
    value_net: Mlp
    mask: SelectionMask
    selection: Optional[SelectionMask]
    buffer: List[Transition]
    method: str

    @property
    def final_reward(self) -> float:
        return float(self.log[-1]["mean_return"]) if self.log else float("nan")


# ----------------------------------------------------------------------
# Update
# ----------------------------------------------------------------------

def policy_params(pol: GaussianPolicy) -> List[np.ndarray]:
    return pol.mean_net.parameters() + [pol.log_std]


def set_policy_params(pol: GaussianPolicy, params: List[np.ndarray]) -> None:
    pol.mean_net.set_parameters(params[:-1])
    pol.log_std = np.asarray(params[-1], dtype=float)
    pol.clamp_log_std()


def freeze_masked_moments(state: AdamState, m: np.ndarray) -> None:
    """Zero the Adam moments that drive masked action outputs so those parameters stop moving."""
    if not state.m:
        return
    masked = np.asarray(m) == 0
    # parameter order: ..., W_last, b_last, log_std
    for k in (-3, -2, -1):
        state.m[k][..., masked] = 0.0
        state.v[k][..., masked] = 0.0


def clipped_surrogate(
    new_log_prob: np.ndarray,
    old_log_prob: np.ndarray,
    advantages: np.ndarray,
    clip_eps: float,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Returns (loss, d loss / d new_log_prob, ratio) for
    loss = -mean(min(rho A, clip(rho, 1 - eps, 1 + eps) A)).
    """
    ratio = np.exp(new_log_prob - old_log_prob)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    loss = -float(np.mean(np.minimum(unclipped, clipped)))
    # the clipped branch is flat in theta wherever it is the strict minimum
    grad = np.where(unclipped <= clipped, -unclipped, 0.0) / len(advantages)
    return loss, grad, ratio


def ppo_update(
    pol: GaussianPolicy,
    v_net: Mlp,
    batch: RolloutBatch,
    mask: SelectionMask,
    config: TrainConfig,
    pi_state: AdamState,
    v_state: AdamState,
    rng: np.random.Generator,
) -> Dict[str, float]:
    """
    Clipped-surrogate epochs over shuffled minibatches.

    The log-ratio uses the masked log probability m . log pi, so masked
    dimensions feed no gradient to the policy.  Advantages are rebuilt from
    the stored rewards with the current value net before every epoch and
    normalized within the batch.
    """
    m = np.asarray(mask.m, dtype=float)
    if m.shape[0] != pol.action_dim:
        raise ContractViolation(f"ppo_update: mask length {m.shape[0]} != action_dim {pol.action_dim}")

    n = len(batch)
    states = batch.states
    next_states = batch.next_states
    rewards = batch.rewards
    raw = batch.raw_actions
    old_masked = mask_log_prob(batch.log_probs, m)

    stats = {
        "policy_loss": [], "value_loss": [], "approx_kl": [], "clip_fraction": [], "grad_norm": [], "entropy": [],
    }
    for epoch in range(config.update_epochs):
        values = state_values(v_net, states)
        next_values = np.where(batch.terminals, 0.0, state_values(v_net, next_states))
        advantages, returns = gae_advantages(
            rewards, values, next_values, batch.episode_ends, config.gamma, config.gae_lambda
        )
        batch.values, batch.next_values = values, next_values
        batch.advantages, batch.returns = advantages, returns
        adv = normalize_advantages(advantages)

        order = rng.permutation(n)
        for start in range(0, n, config.minibatch):
            idx = order[start:start + config.minibatch]
            new_masked = mask_log_prob(log_prob_components(pol, states[idx], raw[idx]), m)
            loss, d_logp, ratio = clipped_surrogate(new_masked, old_masked[idx], adv[idx], config.clip_eps)
            if not np.isfinite(loss):
                raise NonFiniteError(
                    f"ppo_update: non-finite policy loss at epoch {epoch}, minibatch offset {start}; "
                    f"max |log ratio| {np.max(np.abs(new_masked - old_masked[idx])):.3e}, "
                    f"log_std range [{pol.log_std.min():.3f}, {pol.log_std.max():.3f}]"
                )

            upstream = d_logp[:, None] * m[None, :]
            net_grads, log_std_grad = log_prob_backward(pol, states[idx], raw[idx], upstream)
            grads, grad_norm = clip_grad_norm(net_grads.as_list() + [log_std_grad], config.max_grad_norm)
            set_policy_params(pol, adam_step(pi_state, policy_params(pol), grads))

            v_loss = mse_regression_step(v_net, v_state, states[idx], returns[idx], config.max_grad_norm)

            stats["policy_loss"].append(loss)
            stats["value_loss"].append(v_loss)
            stats["approx_kl"].append(float(np.mean(old_masked[idx] - new_masked)))
            stats["clip_fraction"].append(float(np.mean(np.abs(ratio - 1.0) > config.clip_eps)))
            stats["grad_norm"].append(grad_norm)
            stats["entropy"].append(entropy(pol, m))

    return {k: float(np.mean(v)) for k, v in stats.items()}


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------

def evaluate_policy(
    spec: EnvSpec,
    pol: GaussianPolicy,
    mask: Optional[SelectionMask] = None,
    n_episodes: int = 10,
    seed: int = 0,
    masked_fill: str = "policy",
) -> Tuple[float, float]:
    """
    Mean and standard deviation of undiscounted returns of the mean-action policy.

    masked_fill decides what masked dimensions emit: the policy mean
    ("policy"), 0 ("zero") or uniform noise in the action box ("random").
    Env noise and fill noise come from separate streams, so the fill never
    changes the env's noise draws.
    """
    if n_episodes < 1:
        raise ContractViolation(f"evaluate_policy: n_episodes must be >= 1, got {n_episodes}")
    if masked_fill not in MASKED_FILLS:
        raise ContractViolation(f"evaluate_policy: masked_fill must be one of {MASKED_FILLS}")

    env_seq, fill_seq = np.random.SeedSequence(seed).spawn(2)
    env_rng = np.random.default_rng(env_seq)
    fill_rng = np.random.default_rng(fill_seq)
    keep = None if mask is None or masked_fill == "policy" else np.asarray(mask.m, dtype=bool)

    totals = []
    for _ in range(n_episodes):
        s = env_reset(spec, env_rng)
        total = 0.0
        for t in range(spec.horizon):
            a = mean_action(pol, s)
            if keep is not None:
                if masked_fill == "zero":
                    a = np.where(keep, a, 0.0)
                else:
                    a = np.where(keep, a, fill_rng.uniform(-spec.action_bound, spec.action_bound, size=a.shape))
            s, r, done = env_step(spec, s, a, t=t, rng=env_rng)
            total += r
            if done:
                break
        totals.append(total)

    totals = np.asarray(totals)
    return float(totals.mean()), float(totals.std())


# ----------------------------------------------------------------------
# Training loop
# ----------------------------------------------------------------------

def _initial_mask(spec: EnvSpec, method: str) -> SelectionMask:
    if method == "true":
        return SelectionMask.from_indices(ground_truth_set(spec), spec.action_dim)
    return SelectionMask.all_ones(spec.action_dim)


def _mask_state(method: str, selection_done: bool, selection_failed: bool) -> str:
    if method == "all":
        return "all"
    if method == "true":
        return "true"
    if not selection_done:
        return "pending"
    return "failed" if selection_failed else "selected"


def train(
    env_spec: EnvSpec,
    config: Optional[TrainConfig] = None,
    method: str = "ks",
    selection_config: Optional[SelectionConfig] = None,
    log_path: Optional[str] = None,
    save_buffer: Optional[str] = None,
    verbose: bool = False,
) -> TrainResult:
    """
    PPO with knockoff-sampling action selection.

    ks:   store (s, a, a_knockoff, r, s_next) until T_vs transitions, run
          select_actions once, then train under the selected mask.
    all:  never select; all-ones mask throughout.
    true: mask built from the env's ground-truth set from the start.

    One JSON-lines record per evaluation point goes to log_path.
    """
    config = config or TrainConfig()
    selection_config = selection_config or SelectionConfig()
    if method not in METHODS:
        raise ConfigError(f"train: method must be one of {METHODS}, got {method!r}")
    if method == "true" and len(ground_truth_set(env_spec)) == 0:
        raise ConfigError("train: method 'true' needs an env with a non-empty ground-truth set")

    init_seq, rollout_seq, update_seq = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(init_seq)
    rollout_rng = np.random.default_rng(rollout_seq)
    update_rng = np.random.default_rng(update_seq)

    pol = make_policy(
        env_spec.state_dim,
        env_spec.action_dim,
        hidden_sizes=config.hidden_sizes,
        activation=config.activation,
        init_log_std=config.init_log_std,
        action_bound=env_spec.action_bound,
        rng=init_rng,
    )
    v_net = init_mlp([env_spec.state_dim, *config.hidden_sizes, 1], config.activation, init_rng, final_scale=1.0)
    pi_state = AdamState.for_params(policy_params(pol), lr=config.lr_pi)
    v_state = AdamState.for_params(v_net.parameters(), lr=config.lr_v)

    env = SyntheticActionEnv(env_spec)
    mask = apply_mask(pol, _initial_mask(env_spec, method)).mask
    selection: Optional[SelectionMask] = None
    selection_done = method != "ks"
    selection_failed = False
    buffer: List[Transition] = []

    log: List[Dict[str, Any]] = []
    log_file = None
    if log_path:
        os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
        log_file = open(log_path, "w")

    start = time.perf_counter()
    step = 0
    next_eval = config.eval_every
    try:
        while step < config.total_steps:
            n = min(config.rollout_len, config.total_steps - step)
            store = not selection_done
            batch = collect_rollout(env, pol, v_net, n, store, rollout_rng)
            step += n

            if store:
                buffer.extend(batch.transitions[: config.t_vs - len(buffer)])
                if len(buffer) >= config.t_vs:
                    selection_done = True
                    try:
                        selection = select_actions(buffer, config=selection_config, created_at_step=step)
                        mask = apply_mask(pol, selection).mask
                        freeze_masked_moments(pi_state, mask.m)
                        logger.info("train: step %d selected %d of %d actions: %s",
                                    step, len(mask.selected), mask.p, sorted(mask.selected))
                    except KnockoffRLError as exc:
                        selection_failed = True
                        logger.warning("train: selection failed at step %d (%s); continuing unmasked", step, exc)

            losses = ppo_update(pol, v_net, batch, mask, config, pi_state, v_state, update_rng)

            if step >= next_eval or step >= config.total_steps:
                mean_ret, std_ret = evaluate_policy(
                    env_spec, pol, mask, config.eval_episodes, seed=config.seed + 10_000 + len(log)
                )
                record = {
                    "step": int(step),
                    "mean_return": mean_ret,
                    "std_return": std_ret,
                    "mask_state": _mask_state(method, selection_done, selection_failed),
                    "n_selected": len(mask.selected),
                    "policy_loss": losses["policy_loss"],
                    "value_loss": losses["value_loss"],
                    "entropy": losses["entropy"],
                    "wall_clock": time.perf_counter() - start,
                }
                log.append(record)
                if log_file is not None:
                    log_file.write(json.dumps(record) + "\n")
                    log_file.flush()
                if verbose:
                    print_training_progress(record)
                while next_eval <= step:
                    next_eval += config.eval_every
    finally:
        if log_file is not None:
            log_file.close()

    if save_buffer and buffer:
        write_buffer(buffer, save_buffer)

    return TrainResult(
        log=log,
        policy=pol,
        value_net=v_net,
        mask=mask,
        selection=selection,
        buffer=buffer,
        method=method,
    )
