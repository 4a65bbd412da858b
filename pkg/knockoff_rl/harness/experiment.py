# knockoff_rl/harness/experiment.py

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from knockoff_rl.envs.registry import get_env_spec
from knockoff_rl.envs.synthetic import EnvSpec, ground_truth_set
from knockoff_rl.errors import ConfigError, KnockoffRLError
from knockoff_rl.knockoff.config import SelectionConfig
from knockoff_rl.knockoff.selection import write_selection_report
from knockoff_rl.ppo.trainer import METHODS, TrainConfig, train
from knockoff_rl.reporting.curves import emit_curves
from knockoff_rl.reporting.metrics import score_selection

logger = logging.getLogger(__name__)

SELECTION_LABELS = {"ks": "KS", "all": "All", "true": "True"}
RL_ALGO = "PPO"

FINAL_METRIC_COLUMNS = ["env", "method", "seed", "p", "TPR", "FDR", "FPR", "mFDR", "final_reward", "error"]
SUMMARY_COLUMNS = ["Env", "RL Algo", "p", "Selection", "TPR", "FDR", "FPR", "Reward", "Reward Std", "n_failed"]


@dataclass
class ExperimentConfig:
    env_name: str = "lq-default"
    env_seed: int = 0
    env_overrides: Dict[str, Any] = field(default_factory=dict)
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    n_seeds: int = 10
    out_dir: str = "research"
    n_jobs: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"ExperimentConfig: unknown methods {bad}; known: {list(METHODS)}")
        if int(self.n_seeds) < 1:
            raise ConfigError(f"ExperimentConfig: n_seeds must be >= 1, got {self.n_seeds}")
        self.n_seeds = int(self.n_seeds)

    @classmethod
    def from_config(cls, config: dict) -> "ExperimentConfig":
        env_cfg = config.get("env", {}) or {}
        exp_cfg = config.get("experiment", {}) or {}
        known = {"methods", "n_seeds", "out_dir", "n_jobs"}
        unknown = sorted(set(exp_cfg) - known)
        if unknown:
            raise ConfigError(f"ExperimentConfig.from_config: unknown experiment keys {unknown}")
        return cls(
            env_name=env_cfg.get("name", "lq-default"),
            env_seed=int(env_cfg.get("seed", 0)),
            env_overrides=dict(env_cfg.get("overrides") or {}),
            methods=list(exp_cfg.get("methods", METHODS)),
            n_seeds=exp_cfg.get("n_seeds", 10),
            out_dir=exp_cfg.get("out_dir", "research"),
            n_jobs=int(exp_cfg.get("n_jobs", 1)),
            train=TrainConfig.from_dict(config.get("train", {}) or {}),
            selection=SelectionConfig.from_dict(config.get("selection", {}) or {}),
        )

    def env_spec(self) -> EnvSpec:
        return get_env_spec(self.env_name, seed=self.env_seed, **self.env_overrides)


@dataclass
class ExperimentResult:
    final_metrics: pd.DataFrame
    summary: pd.DataFrame
    curves: pd.DataFrame
    log_paths: Dict[str, List[str]]


def seed_log_path(out_dir: str, method: str, seed_idx: int) -> str:
    return os.path.join(out_dir, method, f"seed_{seed_idx}.jsonl")


def _run_one(
    spec: EnvSpec,
    exp: ExperimentConfig,
    method: str,
    seed_idx: int,
) -> Dict[str, Any]:
    """One train() call; any failure becomes a row with the error message instead of raising."""
    train_cfg = TrainConfig.from_dict({**exp.train.to_dict(), "seed": exp.train.seed + seed_idx})
    log_path = seed_log_path(exp.out_dir, method, seed_idx)
    truth = ground_truth_set(spec)
    row = {
        "env": spec.name,
        "method": method,
        "seed": train_cfg.seed,
        "p": spec.action_dim,
        "TPR": np.nan,
        "FDR": np.nan,
        "FPR": np.nan,
        "mFDR": np.nan,
        "final_reward": np.nan,
        "error": "",
    }
    try:
        result = train(spec, train_cfg, method=method, selection_config=exp.selection, log_path=log_path)

        if result.selection is not None:
            selected = result.selection.selected
            write_selection_report(
                result.selection.report,
                os.path.join(exp.out_dir, method, f"seed_{seed_idx}_selection.yaml"),
            )
        else:
            selected = result.mask.selected
        metrics = score_selection(selected, truth, spec.action_dim, exp.selection.alpha)
    except Exception as exc:
        # traceback only for errors raised outside the package
        logger.warning(
            "run_experiment: %s seed %d failed: %s", method, seed_idx, exc,
            exc_info=not isinstance(exc, KnockoffRLError),
        )
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    row.update({
        "TPR": metrics.tpr,
        "FDR": metrics.fdr,
        "FPR": metrics.fpr,
        "mFDR": metrics.mfdr_estimate,
        "final_reward": result.final_reward,
    })
    return row


def summarize_runs(final_metrics: pd.DataFrame) -> pd.DataFrame:
    """One row per (env, method): mean selection metrics and final-point reward over completed seeds."""
    rows = []
    for (env, method), grp in final_metrics.groupby(["env", "method"], sort=False):
        ok = grp[grp["error"] == ""]
        rewards = ok["final_reward"].astype(float)
        rows.append({
            "Env": env,
            "RL Algo": RL_ALGO,
            "p": int(grp["p"].iloc[0]),
            "Selection": SELECTION_LABELS.get(method, method),
            "TPR": float(ok["TPR"].mean()) if len(ok) else np.nan,
            "FDR": float(ok["FDR"].mean()) if len(ok) else np.nan,
            "FPR": float(ok["FPR"].mean()) if len(ok) else np.nan,
            "Reward": float(rewards.mean()) if len(ok) else np.nan,
            "Reward Std": float(rewards.std(ddof=1)) if len(ok) > 1 else 0.0,
            "n_failed": int(len(grp) - len(ok)),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def run_experiment(exp: ExperimentConfig) -> ExperimentResult:
    """
    n_seeds independent training runs per method on one env.

    Writes <out>/<method>/seed_<k>.jsonl, final_metrics.csv, summary.csv
    and curves.csv under exp.out_dir.  A failing seed is recorded in
    final_metrics.csv and the sweep carries on.
    """
    spec = exp.env_spec()
    if "true" in exp.methods and len(ground_truth_set(spec)) == 0:
        raise ConfigError(f"run_experiment: method 'true' needs ground truth, env {spec.name!r} has none")

    os.makedirs(exp.out_dir, exist_ok=True)
    jobs = [(method, k) for method in exp.methods for k in range(exp.n_seeds)]
    if exp.n_jobs == 1:
        rows = [_run_one(spec, exp, method, k) for method, k in jobs]
    else:
        rows = Parallel(n_jobs=exp.n_jobs)(delayed(_run_one)(spec, exp, method, k) for method, k in jobs)

    final_metrics = pd.DataFrame(rows, columns=FINAL_METRIC_COLUMNS)
    final_metrics.to_csv(os.path.join(exp.out_dir, "final_metrics.csv"), index=False)

    summary = summarize_runs(final_metrics)
    summary.to_csv(os.path.join(exp.out_dir, "summary.csv"), index=False, float_format="%.6f")

    log_paths: Dict[str, List[str]] = {}
    for (method, k), row in zip(jobs, rows):
        if not row["error"]:
            log_paths.setdefault(method, []).append(seed_log_path(exp.out_dir, method, k))
    curves = emit_curves(log_paths, os.path.join(exp.out_dir, "curves.csv"))

    return ExperimentResult(final_metrics=final_metrics, summary=summary, curves=curves, log_paths=log_paths)
