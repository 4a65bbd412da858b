# knockoff_rl/reporting/curves.py

import os
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from knockoff_rl.errors import ContractViolation

CURVE_COLUMNS = ["method", "step", "mean", "stderr", "n_seeds"]

LogSource = Union[str, os.PathLike, pd.DataFrame, List[dict]]


def read_training_log(source: LogSource) -> pd.DataFrame:
    """A JSON-lines training log (path, DataFrame or list of records) as a step-indexed frame."""
    if isinstance(source, pd.DataFrame):
        df = source.copy()
    elif isinstance(source, (str, os.PathLike)):
        if not os.path.exists(source):
            raise FileNotFoundError(f"training log not found at {source}")
        df = pd.read_json(source, lines=True)
    else:
        df = pd.DataFrame(list(source))

    missing = {"step", "mean_return"} - set(df.columns)
    if missing:
        raise ContractViolation(f"read_training_log: log missing required columns: {sorted(missing)}")
    return df.sort_values("step").reset_index(drop=True)


def align_seed_curves(logs: Sequence[LogSource]) -> pd.DataFrame:
    """
    step x seed table of mean_return.

    Logs on different evaluation grids are put on the union grid with
    last-value hold; steps before some seed's first evaluation are dropped.
    """
    series = []
    for k, src in enumerate(logs):
        df = read_training_log(src)
        s = df.drop_duplicates("step", keep="last").set_index("step")["mean_return"].astype(float)
        series.append(s.rename(k))
    if not series:
        raise ContractViolation("align_seed_curves: no logs given")

    table = pd.concat(series, axis=1).sort_index().ffill()
    return table.dropna(how="any")


def seed_average(table: pd.DataFrame) -> pd.DataFrame:
    n = table.shape[1]
    mean = table.mean(axis=1)
    if n > 1:
        stderr = table.std(axis=1, ddof=1) / np.sqrt(n)
    else:
        stderr = pd.Series(0.0, index=table.index)
    return pd.DataFrame({"step": table.index.astype(int), "mean": mean.values, "stderr": stderr.values, "n_seeds": n})


def emit_curves(logs_by_method: Dict[str, Sequence[LogSource]], out_path: Optional[str] = None) -> pd.DataFrame:
    """Seed-averaged learning curves per method: (method, step, mean, stderr, n_seeds)."""
    frames = []
    for method, logs in logs_by_method.items():
        if not logs:
            continue
        avg = seed_average(align_seed_curves(logs))
        avg.insert(0, "method", method)
        frames.append(avg)

    curves = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=CURVE_COLUMNS)
    if out_path:
        os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
        curves.to_csv(out_path, index=False)
    return curves
