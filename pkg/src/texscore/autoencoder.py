"""Single-hidden-layer autoencoder trained by plain mini-batch SGD.

The encoder output z = sigmoid(W1 x + b1) is the low-dimensional manifold
representation of a feature row; training reconstructs the input through
xhat = sigmoid(W2 z + b2) under a squared-error loss with an L2 weight
penalty.  Inputs must be pre-scaled to [0, 1] (the pipeline owns the
scaling), since a sigmoid output layer cannot reach targets outside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

FORMAT_MAGIC = "texscore-ae"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AutoencoderModel:
    """Weights and biases of the encoder (W1, b1) and decoder (W2, b2)."""

    w1: np.ndarray  # n_hidden x p
    b1: np.ndarray  # n_hidden
    w2: np.ndarray  # p x n_hidden
    b2: np.ndarray  # p

    def __post_init__(self):
        n_hidden, p = self.w1.shape
        if self.b1.shape != (n_hidden,) or self.w2.shape != (p, n_hidden) or self.b2.shape != (p,):
            raise ValueError("inconsistent parameter shapes")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for SGD training; squared-error loss throughout."""

    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    weight_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.weight_penalty < 0:
            raise ValueError("weight_penalty must be >= 0")


class ForwardResult(NamedTuple):
    z: np.ndarray
    xhat: np.ndarray


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def init_model(p: int, n_hidden: int, seed: int) -> AutoencoderModel:
    """Uniform weights in [-r, r] with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    if p < 1 or n_hidden < 1:
        raise ValueError("p and n_hidden must be >= 1")
    rng = np.random.default_rng(seed)
    r = np.sqrt(6.0 / (p + n_hidden))
    w1 = rng.uniform(-r, r, size=(n_hidden, p))
    w2 = rng.uniform(-r, r, size=(p, n_hidden))
    return AutoencoderModel(w1=w1, b1=np.zeros(n_hidden), w2=w2, b2=np.zeros(p))


def forward(model: AutoencoderModel, x: np.ndarray) -> ForwardResult:
    """Hidden activations and reconstruction for one row or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(
            f"expected input of length {model.input_dim}, got shape {x.shape}"
        )
    z = _sigmoid(x @ model.w1.T + model.b1)
    xhat = _sigmoid(z @ model.w2.T + model.b2)
    return ForwardResult(z=z, xhat=xhat)


def encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """Hidden-layer activations only (post-activation values)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(
            f"expected input of length {model.input_dim}, got shape {x.shape}"
        )
    return _sigmoid(x @ model.w1.T + model.b1)


def loss(model: AutoencoderModel, batch: np.ndarray, weight_penalty: float) -> float:
    """Mean half-squared reconstruction error plus the L2 weight penalty.

    (1/n) * sum_i 0.5 * ||xhat_i - x_i||^2
      + (weight_penalty/2) * (||W1||_F^2 + ||W2||_F^2)

    Biases are not penalized.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise ValueError("batch must contain at least one row")
    _, xhat = forward(model, batch)
    recon = 0.5 * np.sum((xhat - batch) ** 2) / batch.shape[0]
    penalty = 0.5 * weight_penalty * (np.sum(model.w1**2) + np.sum(model.w2**2))
    return float(recon + penalty)


def gradients(model: AutoencoderModel, batch: np.ndarray, weight_penalty: float):
    """Analytic gradient of :func:`loss`; shapes mirror the parameters.

    Returns a dict with keys "w1", "b1", "w2", "b2".
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    n = batch.shape[0]
    if n == 0:
        raise ValueError("batch must contain at least one row")
    z, xhat = forward(model, batch)
    # output delta: (xhat - x) * sigmoid'(a2), with sigmoid' = y(1-y)
    d2 = (xhat - batch) * xhat * (1.0 - xhat)
    g_w2 = d2.T @ z / n + weight_penalty * model.w2
    g_b2 = d2.mean(axis=0)
    d1 = (d2 @ model.w2) * z * (1.0 - z)
    g_w1 = d1.T @ batch / n + weight_penalty * model.w1
    g_b1 = d1.mean(axis=0)
    return {"w1": g_w1, "b1": g_b1, "w2": g_w2, "b2": g_b2}


def train(data: np.ndarray, n_hidden: int, config: TrainConfig) -> AutoencoderModel:
    """Mini-batch gradient descent with a fresh shuffle each epoch.

    Deterministic given ``config.seed``: the seed drives both the weight
    initialization and the per-epoch permutations.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n, p = data.shape
    if n < 1:
        raise ValueError("need at least one training row")
    if data.min() < -1e-12 or data.max() > 1.0 + 1e-12:
        raise ValueError("training data must be scaled to [0, 1]")
    model = init_model(p, n_hidden, config.seed)
    w1, b1 = model.w1.copy(), model.b1.copy()
    w2, b2 = model.w2.copy(), model.b2.copy()
    # separate stream from the one init_model consumed
    rng = np.random.default_rng([config.seed, 1])
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = data[order[start : start + config.batch_size]]
            current = AutoencoderModel(w1=w1, b1=b1, w2=w2, b2=b2)
            grads = gradients(current, rows, config.weight_penalty)
            w1 = w1 - lr * grads["w1"]
            b1 = b1 - lr * grads["b1"]
            w2 = w2 - lr * grads["w2"]
            b2 = b2 - lr * grads["b2"]
    return AutoencoderModel(w1=w1, b1=b1, w2=w2, b2=b2)


def learn_manifold(
    data: np.ndarray,
    n_hidden: int,
    config: TrainConfig,
    model: AutoencoderModel | None = None,
) -> np.ndarray:
    """Train (or accept) an autoencoder and return per-row hidden activations.

    The returned N x n_hidden matrix preserves row order; entries are
    post-activation sigmoid values in (0, 1).
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if model is None:
        model = train(data, n_hidden, config)
    elif model.hidden_dim != n_hidden:
        raise ValueError(
            f"model has {model.hidden_dim} hidden units, expected {n_hidden}"
        )
    return encode(model, data)


def save_model(model: AutoencoderModel, path) -> None:
    """Flat text: versioned header, then W1 rows, b1, W2 rows, b2.

    Floats are written with 17 significant digits, so loading restores the
    exact values.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{FORMAT_MAGIC} {FORMAT_VERSION} {model.input_dim} {model.hidden_dim}\n")
        for row in model.w1:
            fh.write(_row(row))
        fh.write(_row(model.b1))
        for row in model.w2:
            fh.write(_row(row))
        fh.write(_row(model.b2))


def load_model(path) -> AutoencoderModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != FORMAT_MAGIC or header[1] != str(FORMAT_VERSION):
            raise ValueError(f"not a {FORMAT_MAGIC} v{FORMAT_VERSION} file: {path}")
        p, n_hidden = int(header[2]), int(header[3])
        w1 = np.array([_parse_row(fh.readline(), p) for _ in range(n_hidden)])
        b1 = _parse_row(fh.readline(), n_hidden)
        w2 = np.array([_parse_row(fh.readline(), n_hidden) for _ in range(p)])
        b2 = _parse_row(fh.readline(), p)
    return AutoencoderModel(w1=w1, b1=b1, w2=w2, b2=b2)


def _row(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values) + "\n"


def _parse_row(line: str, expected: int) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise ValueError(f"expected {expected} values per row, got {len(parts)}")
    return np.array([float(v) for v in parts])
