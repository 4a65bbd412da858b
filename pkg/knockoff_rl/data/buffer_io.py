# knockoff_rl/data/buffer_io.py

import os
from typing import List, Sequence

import numpy as np
import pandas as pd

from knockoff_rl.envs.synthetic import Transition
from knockoff_rl.errors import ContractViolation, InsufficientDataError

# column prefixes for the vector fields; one column per coordinate
STATE_PREFIX = "s_"
ACTION_PREFIX = "a_"
KNOCKOFF_PREFIX = "ak_"
NEXT_STATE_PREFIX = "sn_"


def _vector_cols(prefix: str, n: int) -> List[str]:
    return [f"{prefix}{i}" for i in range(n)]


def buffer_to_frame(buffer: Sequence[Transition]) -> pd.DataFrame:
    """One row per transition, in buffer order; knockoff columns are NaN where absent."""
    if len(buffer) == 0:
        raise InsufficientDataError("buffer_to_frame: buffer is empty")

    d_s = len(buffer[0].s)
    p = len(buffer[0].a)
    nan_row = np.full(p, np.nan)

    S = np.array([tr.s for tr in buffer], dtype=float)
    A = np.array([tr.a for tr in buffer], dtype=float)
    AK = np.array([nan_row if tr.a_knockoff is None else tr.a_knockoff for tr in buffer], dtype=float)
    SN = np.array([tr.s_next for tr in buffer], dtype=float)

    parts = [
        pd.DataFrame(S, columns=_vector_cols(STATE_PREFIX, d_s)),
        pd.DataFrame(A, columns=_vector_cols(ACTION_PREFIX, p)),
        pd.DataFrame(AK, columns=_vector_cols(KNOCKOFF_PREFIX, p)),
        pd.DataFrame({"r": [float(tr.r) for tr in buffer]}),
        pd.DataFrame(SN, columns=_vector_cols(NEXT_STATE_PREFIX, d_s)),
        pd.DataFrame({
            "t": [int(tr.t) for tr in buffer],
            "episode_id": [int(tr.episode_id) for tr in buffer],
        }),
    ]
    return pd.concat(parts, axis=1)


def frame_to_buffer(df: pd.DataFrame) -> List[Transition]:
    d_s = sum(1 for c in df.columns if c.startswith(STATE_PREFIX))
    p = sum(1 for c in df.columns if c.startswith(ACTION_PREFIX))
    required = ["r", "t", "episode_id"] + _vector_cols(NEXT_STATE_PREFIX, d_s) + _vector_cols(KNOCKOFF_PREFIX, p)
    missing = [c for c in required if c not in df.columns]
    if d_s == 0 or p == 0 or missing:
        raise ContractViolation(f"frame_to_buffer: buffer table missing required columns: {missing}")

    S = df[_vector_cols(STATE_PREFIX, d_s)].to_numpy(dtype=float)
    A = df[_vector_cols(ACTION_PREFIX, p)].to_numpy(dtype=float)
    AK = df[_vector_cols(KNOCKOFF_PREFIX, p)].to_numpy(dtype=float)
    SN = df[_vector_cols(NEXT_STATE_PREFIX, d_s)].to_numpy(dtype=float)
    r = df["r"].to_numpy(dtype=float)
    t = df["t"].to_numpy(dtype=int)
    ep = df["episode_id"].to_numpy(dtype=int)

    has_knockoff = ~np.isnan(AK).any(axis=1)
    return [
        Transition(
            s=S[i],
            a=A[i],
            a_knockoff=AK[i] if has_knockoff[i] else None,
            r=float(r[i]),
            s_next=SN[i],
            t=int(t[i]),
            episode_id=int(ep[i]),
        )
        for i in range(len(df))
    ]


def save_buffer(buffer: Sequence[Transition], path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    buffer_to_frame(buffer).to_parquet(path, index=False)
    return path


def load_buffer(path: str) -> List[Transition]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"buffer file not found at {path}")
    return frame_to_buffer(pd.read_parquet(path))
