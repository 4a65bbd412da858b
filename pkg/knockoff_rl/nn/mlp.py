# knockoff_rl/nn/mlp.py

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from knockoff_rl.errors import ContractViolation, NonFiniteError

CHECKPOINT_FORMAT = "knockoff_rl.mlp"
CHECKPOINT_VERSION = 1

ACTIVATIONS = ("tanh", "relu")


@dataclass
class Mlp:
    """
    Fixed-topology feed-forward network.

    weights[k] has shape (layer_sizes[k], layer_sizes[k + 1]) and maps a row
    vector x to x @ W + b.  Hidden layers use `activation`; the final layer
    is linear.
    """

    layer_sizes: List[int]
    activation: str = "tanh"
    weights: List[np.ndarray] = field(default_factory=list)
    biases: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or any(int(n) <= 0 for n in self.layer_sizes):
            raise ContractViolation(
                f"Mlp: layer_sizes must hold at least two positive widths, got {self.layer_sizes}"
            )
        if self.activation not in ACTIVATIONS:
            raise ContractViolation(f"Mlp: unknown activation {self.activation!r}")
        self.layer_sizes = [int(n) for n in self.layer_sizes]

        if not self.weights:
            self.weights = [
                np.zeros((n_in, n_out)) for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
            ]
            self.biases = [np.zeros(n_out) for n_out in self.layer_sizes[1:]]

        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[k], self.layer_sizes[k + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ContractViolation(
                    f"Mlp: layer {k} parameters have shapes {w.shape}/{b.shape}, expected {expected}"
                )

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in optimizer order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        for k in range(len(self.weights)):
            self.weights[k] = np.asarray(params[2 * k], dtype=float)
            self.biases[k] = np.asarray(params[2 * k + 1], dtype=float)

    def copy(self) -> "Mlp":
        """Snapshot with parameters copied by value."""
        return Mlp(
            layer_sizes=list(self.layer_sizes),
            activation=self.activation,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(
    layer_sizes: Sequence[int],
    activation: str = "tanh",
    rng: Optional[np.random.Generator] = None,
    final_scale: float = 1.0,
) -> Mlp:
    """
    Orthogonal-style scaled initialization.

    Hidden layers get an orthonormal matrix (QR of a Gaussian draw) times
    gain sqrt(2) for relu or 1 for tanh; the output layer is scaled by
    `final_scale` (0.01 for a policy mean head).  Biases start at zero.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    net = Mlp(layer_sizes=list(layer_sizes), activation=activation)
    gain = np.sqrt(2.0) if activation == "relu" else 1.0
    n_layers = len(net.weights)

    for k in range(n_layers):
        n_in, n_out = net.layer_sizes[k], net.layer_sizes[k + 1]
        q, r = np.linalg.qr(rng.standard_normal((max(n_in, n_out), min(n_in, n_out))))
        q = q * np.sign(np.diag(r))
        w = q if n_in >= n_out else q.T
        scale = final_scale if k == n_layers - 1 else gain
        net.weights[k] = scale * w.reshape(n_in, n_out)
        net.biases[k] = np.zeros(n_out)

    return net


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_grad(z: np.ndarray, h: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return 1.0 - h * h
    return (z > 0.0).astype(float)


def _as_batch(net: Mlp, x: np.ndarray, name: str) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ContractViolation(
            f"{name}: input width {x.shape[-1] if x.ndim else 0} does not match network input {net.input_dim}"
        )
    return batch, single


def _forward_cache(net: Mlp, batch: np.ndarray):
    pre = []
    post = [batch]
    h = batch
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if k == last else _activate(z, net.activation)
        post.append(h)
    return pre, post


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Layer-by-layer affine+activation composition; x is a vector or an (n, in) batch."""
    batch, single = _as_batch(net, x, "mlp_forward")
    _, post = _forward_cache(net, batch)
    out = post[-1]
    return out[0] if single else out


@dataclass
class MlpGrads:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def as_list(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


def mlp_backward(net: Mlp, x: np.ndarray, upstream_grad: np.ndarray) -> Tuple[MlpGrads, np.ndarray]:
    """
    Exact reverse-mode gradients of <upstream_grad, forward(x)>.

    For a batch, parameter gradients are summed over rows and the input
    gradient keeps one row per sample.
    """
    batch, single = _as_batch(net, x, "mlp_backward")
    g = np.asarray(upstream_grad, dtype=float)
    g = g[None, :] if g.ndim == 1 else g
    if g.shape != (batch.shape[0], net.output_dim):
        raise ContractViolation(
            f"mlp_backward: upstream gradient shape {np.shape(upstream_grad)} does not match output "
            f"({batch.shape[0]}, {net.output_dim})"
        )

    pre, post = _forward_cache(net, batch)
    n_layers = len(net.weights)
    grad_w: List[np.ndarray] = [None] * n_layers
    grad_b: List[np.ndarray] = [None] * n_layers

    delta = g
    for k in reversed(range(n_layers)):
        if k != n_layers - 1:
            delta = delta * _activation_grad(pre[k], post[k + 1], net.activation)
        grad_w[k] = post[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        delta = delta @ net.weights[k].T

    input_grad = delta[0] if single else delta
    return MlpGrads(weights=grad_w, biases=grad_b), input_grad


def check_finite(net: Mlp) -> None:
    for k, p in enumerate(net.parameters()):
        if not np.all(np.isfinite(p)):
            raise NonFiniteError(f"check_finite: parameter array {k} holds non-finite values")


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------

def save_mlp(net: Mlp, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_sizes": net.layer_sizes,
        "activation": net.activation,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    with path.open("w") as f:
        json.dump(payload, f)
    return path


def load_mlp(path: Union[str, Path]) -> Mlp:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found at {path}")
    with path.open("r") as f:
        payload = json.load(f)

    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
        raise ContractViolation(
            f"load_mlp: unsupported checkpoint header {payload.get('format')!r} v{payload.get('version')!r}"
        )
    return Mlp(
        layer_sizes=payload["layer_sizes"],
        activation=payload["activation"],
        weights=[np.asarray(w, dtype=float).reshape(n_in, n_out) for w, n_in, n_out in zip(
            payload["weights"], payload["layer_sizes"][:-1], payload["layer_sizes"][1:]
        )],
        biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
    )
