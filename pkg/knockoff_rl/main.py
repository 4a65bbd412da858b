# knockoff_rl/main.py

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from knockoff_rl.config.config_loader import apply_overrides, load_config
from knockoff_rl.data.buffer_io import load_buffer
from knockoff_rl.envs.registry import env_spec_from_config
from knockoff_rl.envs.spec_io import save_env_spec
from knockoff_rl.envs.synthetic import ground_truth_set
from knockoff_rl.errors import KnockoffRLError
from knockoff_rl.harness.experiment import ExperimentConfig, run_experiment
from knockoff_rl.knockoff.config import SelectionConfig
from knockoff_rl.knockoff.selection import select_actions, write_selection_report
from knockoff_rl.nn.mlp import save_mlp
from knockoff_rl.policy.masks import save_mask
from knockoff_rl.ppo.trainer import METHODS, TrainConfig, train
from knockoff_rl.reporting.metrics import score_selection
from knockoff_rl.reporting.summaries import print_experiment_summary, print_selection_summary

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knockoff_rl",
        description="PPO with knockoff-sampling action selection on synthetic redundant-action MDPs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML file merged over the package config.yaml")
        p.add_argument("--seed", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--gamma-vote", type=float)
        p.add_argument("--k-folds", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--verbose", action="store_true")

    p_train = sub.add_parser("train", help="one training run (one config, one seed)")
    common(p_train)
    p_train.add_argument("--method", choices=METHODS, default="ks")
    p_train.add_argument("--tvs", type=int)
    p_train.add_argument("--steps", type=int)

    p_select = sub.add_parser("select", help="knockoff selection on a saved buffer")
    common(p_select)
    p_select.add_argument("--buffer", required=True, help="parquet buffer written by `train`")

    p_exp = sub.add_parser("experiment", help="multi-seed, multi-method sweep")
    common(p_exp)
    p_exp.add_argument("--method", choices=METHODS, action="append", help="repeat to pick methods")
    p_exp.add_argument("--tvs", type=int)
    p_exp.add_argument("--steps", type=int)
    p_exp.add_argument("--n-seeds", type=int)
    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    config = load_config(args.config)
    config = apply_overrides(
        config,
        "selection",
        alpha=args.alpha,
        gamma_vote=args.gamma_vote,
        k_folds=args.k_folds,
    )
    config = apply_overrides(
        config,
        "train",
        seed=args.seed,
        t_vs=getattr(args, "tvs", None),
        total_steps=getattr(args, "steps", None),
    )
    if args.command == "experiment":
        config = apply_overrides(
            config,
            "experiment",
            methods=args.method,
            n_seeds=args.n_seeds,
            out_dir=args.out,
        )
    return config


def run_train(args: argparse.Namespace, config: dict) -> None:
    spec = env_spec_from_config(config)
    train_cfg = TrainConfig.from_dict(config["train"])
    sel_cfg = SelectionConfig.from_dict(config["selection"])
    out_dir = os.path.join(args.out or config["experiment"]["out_dir"], args.method)
    tag = f"seed_{train_cfg.seed}"

    print("\n=== ENVIRONMENT ===")
    print(f"Env               : {spec.name}")
    print(f"State dim         : {spec.state_dim}")
    print(f"Action dim (p)    : {spec.action_dim}")
    print(f"Method            : {args.method}")
    save_env_spec(spec, os.path.join(out_dir, "env_spec.yaml"))

    print("\n=== TRAINING ===")
    result = train(
        spec,
        train_cfg,
        method=args.method,
        selection_config=sel_cfg,
        log_path=os.path.join(out_dir, f"{tag}.jsonl"),
        save_buffer=os.path.join(out_dir, f"{tag}_buffer.parquet") if args.method == "ks" else None,
        verbose=True,
    )

    save_mlp(result.policy.mean_net, os.path.join(out_dir, f"{tag}_policy_mean.json"))
    save_mlp(result.value_net, os.path.join(out_dir, f"{tag}_value.json"))
    save_mask(result.mask, os.path.join(out_dir, f"{tag}_mask.yaml"))

    if result.selection is not None:
        write_selection_report(result.selection.report, os.path.join(out_dir, f"{tag}_selection.yaml"))
        metrics = score_selection(result.selection.selected, ground_truth_set(spec), spec.action_dim, sel_cfg.alpha)
        print_selection_summary(result.selection, metrics)

    print("\n=== FINAL EVALUATION ===")
    print(f"Final reward      : {result.final_reward:.3f}")
    print(f"Outputs           : {out_dir}")


def run_select(args: argparse.Namespace, config: dict) -> None:
    sel_cfg = SelectionConfig.from_dict(config["selection"])
    out_dir = args.out or config["experiment"]["out_dir"]

    print("\n=== LOADING BUFFER ===")
    buffer = load_buffer(args.buffer)
    print(f"Transitions       : {len(buffer):,}")

    mask = select_actions(buffer, config=sel_cfg)
    write_selection_report(mask.report, os.path.join(out_dir, "selection_report.yaml"))
    save_mask(mask, os.path.join(out_dir, "selection_mask.yaml"))

    # score only when the configured env matches the buffer's action space
    spec = env_spec_from_config(config)
    metrics = None
    if spec.action_dim == mask.p:
        metrics = score_selection(mask.selected, ground_truth_set(spec), mask.p, sel_cfg.alpha)
    print_selection_summary(mask, metrics)


def run_sweep(args: argparse.Namespace, config: dict) -> None:
    exp = ExperimentConfig.from_config(config)
    print("\n=== EXPERIMENT ===")
    print(f"Env               : {exp.env_name}")
    print(f"Methods           : {', '.join(exp.methods)}")
    print(f"Seeds per method  : {exp.n_seeds}")

    result = run_experiment(exp)
    print_experiment_summary(result.summary)
    print(f"\nOutputs written to {exp.out_dir}")


COMMANDS = {"train": run_train, "select": run_select, "experiment": run_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        config = _resolve_config(args)
        COMMANDS[args.command](args, config)
    except (KnockoffRLError, FileNotFoundError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
