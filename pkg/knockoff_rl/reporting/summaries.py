# knockoff_rl/reporting/summaries.py

from typing import Optional

import numpy as np
import pandas as pd

from knockoff_rl.policy.masks import SelectionMask
from knockoff_rl.reporting.metrics import SelectionMetrics


def print_training_progress(record: dict) -> None:
    """
    One console line per evaluation point of a training run.
    """
    print(
        f"step {int(record['step']):>8d}  "
        f"return {record['mean_return']:10.3f} +/- {record['std_return']:8.3f}  "
        f"mask {record.get('mask_state', '-'):<9} "
        f"({record.get('n_selected', 0)} active)"
    )


def print_selection_summary(mask: SelectionMask, metrics: Optional[SelectionMetrics] = None) -> None:
    """
    Print the selected action set, per-action vote frequencies and, when the
    ground truth is known, selection quality.
    """
    print("\n=== ACTION SELECTION ===")
    report = mask.report
    if report is not None:
        print(f"Rows used         : {report.n_rows}")
        print(f"Folds (K)         : {report.k_folds}")
        print(f"FDR level (alpha) : {report.alpha:.3f}")
        print(f"Vote ratio (Gamma): {report.gamma_vote:.3f}")
        print(f"Wall clock        : {report.wall_clock:.2f}s")
    print(f"Actions           : {mask.p}")
    print(f"Selected          : {len(mask.selected)} {sorted(mask.selected)}")

    if mask.votes is not None and np.any(mask.votes):
        k = report.k_folds if report is not None else max(1, int(np.max(mask.votes)))
        voted = [j for j in np.argsort(-mask.votes, kind="stable") if mask.votes[j] > 0]
        print("\n=== VOTE FREQUENCIES ===\n")
        header = f"{'Action':>8} {'Votes':>8} {'Freq':>8} {'Selected':>10}"
        print(header)
        print("-" * len(header))
        for j in voted:
            flag = "yes" if mask.m[j] else "no"
            print(f"{j:>8d} {int(mask.votes[j]):>8d} {mask.votes[j] / k:8.2f} {flag:>10}")

    if metrics is not None:
        print("\n=== SELECTION QUALITY ===")
        print(f"TPR               : {metrics.tpr:.3f}")
        print(f"FDR               : {metrics.fdr:.3f}")
        print(f"FPR               : {metrics.fpr:.3f}")
        print(f"mFDR estimate     : {metrics.mfdr_estimate:.3f}")


def print_experiment_summary(summary: pd.DataFrame) -> None:
    """
    Print one row per (env, method) in the comparison-table layout.
    """
    print("\n=== EXPERIMENT SUMMARY (final-point reward, mean over seeds) ===")
    if summary.empty:
        print("No completed runs to summarize.")
        return

    header = (
        f"{'Env':<18} {'Algo':<5} {'p':>4} {'Selection':<10} "
        f"{'TPR':>6} {'FDR':>6} {'FPR':>6} {'Reward':>10} {'Std':>8} {'Failed':>7}"
    )
    print(header)
    print("-" * len(header))
    for _, row in summary.iterrows():
        print(
            f"{row['Env']:<18} {row['RL Algo']:<5} {int(row['p']):>4} {row['Selection']:<10} "
            f"{row['TPR']:6.2f} {row['FDR']:6.2f} {row['FPR']:6.2f} "
            f"{row['Reward']:10.3f} {row['Reward Std']:8.3f} {int(row['n_failed']):>7d}"
        )
