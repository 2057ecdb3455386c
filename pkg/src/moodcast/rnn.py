"""Per-user Elman network for next-day mood, trained by SGD with full BPTT.

    h_t = sigmoid(x_t W_in + h_{t-1} W_rec + b_h),   h_0 = 0
    y   = sigmoid(h_L . W_out + b_out)

Loss per example is 0.5 (y - target)^2 on the [0, 1]-scaled mood.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .features import SequenceExample
from .ingest import MOOD
from .preprocess import ScalingParams
from .seeding import derive_seed

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PARAM_NAMES = ("W_in", "W_rec", "b_h", "W_out", "b_out")


class RnnDivergenceError(RuntimeError):
    def __init__(self, epoch: int, loss: float) -> None:
        self.epoch = epoch
        super().__init__(f"training loss became non-finite ({loss}) at epoch {epoch}")


@dataclass(frozen=True)
class RnnConfig:
    hidden_dim: int = 4
    learning_rate: float = 0.07
    epochs: int = 10_000
    seq_len: int = 5
    seed: int = 2204
    test_fraction: float = 0.3
    init_half_width: float = 0.5

    def __post_init__(self) -> None:
        if self.hidden_dim < 1 or self.epochs < 1 or self.seq_len < 1:
            raise ValueError("hidden_dim, epochs and seq_len must be positive")
        if self.learning_rate < 0 or self.init_half_width < 0:
            raise ValueError("learning_rate and init_half_width must be non-negative")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


def sigmoid(z):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


@dataclass
class RnnModel:
    W_in: np.ndarray  # (D, H)
    W_rec: np.ndarray  # (H, H)
    b_h: np.ndarray  # (H,)
    W_out: np.ndarray  # (H,)
    b_out: float
    scaling: ScalingParams | None = None
    user_id: str | None = None
    variables: list[str] = field(default_factory=list)
    mood: str = MOOD

    @property
    def dims(self) -> tuple[int, int]:
        return self.W_in.shape

    def params(self) -> dict[str, np.ndarray]:
        return {
            "W_in": self.W_in, "W_rec": self.W_rec, "b_h": self.b_h,
            "W_out": self.W_out, "b_out": np.asarray(self.b_out),
        }

    def copy(self) -> RnnModel:
        return RnnModel(self.W_in.copy(), self.W_rec.copy(), self.b_h.copy(), self.W_out.copy(),
                        float(self.b_out), self.scaling, self.user_id, list(self.variables), self.mood)

    def to_dict(self, config: RnnConfig | None = None) -> dict:
        D, H = self.dims
        return {
            "format_version": FORMAT_VERSION,
            "kind": "elman-rnn",
            "user_id": self.user_id,
            "input_dim": D,
            "hidden_dim": H,
            "variables": self.variables,
            "mood": self.mood,
            "W_in": self.W_in.tolist(),
            "W_rec": self.W_rec.tolist(),
            "b_h": self.b_h.tolist(),
            "W_out": self.W_out.tolist(),
            "b_out": float(self.b_out),
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "config": None if config is None else asdict(config),
        }

    def to_json(self, config: RnnConfig | None = None) -> str:
        return json.dumps(self.to_dict(config), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> RnnModel:
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        D, H = int(d["input_dim"]), int(d["hidden_dim"])
        return cls(
            np.array(d["W_in"], dtype=float).reshape(D, H),
            np.array(d["W_rec"], dtype=float).reshape(H, H),
            np.array(d["b_h"], dtype=float),
            np.array(d["W_out"], dtype=float),
            float(d["b_out"]),
            None if d["scaling"] is None else ScalingParams.from_dict(d["scaling"]),
            d.get("user_id"),
            list(d.get("variables", [])),
            d.get("mood", MOOD),
        )


def init_rnn(input_dim: int, hidden_dim: int, config: RnnConfig = RnnConfig(),
             rng: np.random.Generator | None = None) -> RnnModel:
    """Uniform weights on [-init_half_width, init_half_width], zero biases."""
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("dimensions must be positive")
    if rng is None:
        rng = np.random.default_rng(derive_seed(config.seed, "rnn-init"))
    a = config.init_half_width
    W_in = rng.uniform(-a, a, (input_dim, hidden_dim))
    W_rec = rng.uniform(-a, a, (hidden_dim, hidden_dim))
    W_out = rng.uniform(-a, a, hidden_dim)
    return RnnModel(W_in, W_rec, np.zeros(hidden_dim), W_out, 0.0)


def forward(model: RnnModel, inputs: np.ndarray) -> tuple[float, np.ndarray]:
    """Run one sequence; returns (prediction in (0, 1), hidden states (L, H))."""
    X = np.asarray(inputs, dtype=float)
    D, H = model.dims
    if X.ndim != 2 or X.shape[1] != D:
        raise ValueError(f"expected inputs of shape (L, {D}), got {X.shape}")
    states = np.empty((len(X), H))
    h = np.zeros(H)
    for t, x in enumerate(X):
        h = sigmoid(x @ model.W_in + h @ model.W_rec + model.b_h)
        states[t] = h
    return float(sigmoid(h @ model.W_out + model.b_out)), states


def forward_batch(model: RnnModel, inputs: np.ndarray) -> np.ndarray:
    """Predictions for a stack of sequences shaped (N, L, D)."""
    X = np.asarray(inputs, dtype=float)
    h = np.zeros((X.shape[0], model.dims[1]))
    for t in range(X.shape[1]):
        h = sigmoid(X[:, t] @ model.W_in + h @ model.W_rec + model.b_h)
    return sigmoid(h @ model.W_out + model.b_out)


def loss_and_gradients(
    model: RnnModel, inputs: np.ndarray, target: float
) -> tuple[float, dict[str, np.ndarray]]:
    """Squared-error loss 0.5 (y - target)^2 and its exact BPTT gradients."""
    X = np.asarray(inputs, dtype=float)
    pred, states = forward(model, X)
    L, H = states.shape
    dout = (pred - target) * pred * (1.0 - pred)
    h_last = states[-1]
    g_W_out = dout * h_last
    g_b_out = dout
    g_W_in = np.zeros_like(model.W_in)
    g_W_rec = np.zeros_like(model.W_rec)
    g_b_h = np.zeros(H)
    dh = dout * model.W_out
    for t in range(L - 1, -1, -1):
        h = states[t]
        dz = dh * h * (1.0 - h)
        h_prev = states[t - 1] if t > 0 else np.zeros(H)
        g_W_in += np.outer(X[t], dz)
        g_W_rec += np.outer(h_prev, dz)
        g_b_h += dz
        dh = model.W_rec @ dz
    loss = 0.5 * (pred - target) ** 2
    return loss, {"W_in": g_W_in, "W_rec": g_W_rec, "b_h": g_b_h,
                  "W_out": g_W_out, "b_out": np.asarray(g_b_out)}


def sgd_step(model: RnnModel, grads: dict[str, np.ndarray], lr: float) -> None:
    model.W_in -= lr * grads["W_in"]
    model.W_rec -= lr * grads["W_rec"]
    model.b_h -= lr * grads["b_h"]
    model.W_out -= lr * grads["W_out"]
    model.b_out = float(model.b_out - lr * grads["b_out"])


def _train_loop(model, X, y, lr, epochs, rng):
    """SGD over (N, L, D) inputs; inlined BPTT for speed. Returns the MSE trace."""
    W_in, W_rec, b_h, W_out = model.W_in, model.W_rec, model.b_h, model.W_out
    b_out = float(model.b_out)
    n, L, _ = X.shape
    H = W_rec.shape[0]
    states = np.empty((L + 1, H))
    states[0] = 0.0
    trace = []
    for epoch in range(epochs):
        for k in rng.permutation(n):
            x = X[k]
            for t in range(L):
                states[t + 1] = 1.0 / (1.0 + np.exp(-(x[t] @ W_in + states[t] @ W_rec + b_h)))
            h_last = states[L]
            pred = 1.0 / (1.0 + np.exp(-(h_last @ W_out + b_out)))
            dout = (pred - y[k]) * pred * (1.0 - pred)
            dh = dout * W_out
            g_in = np.zeros_like(W_in)
            g_rec = np.zeros_like(W_rec)
            g_b = np.zeros(H)
            for t in range(L, 0, -1):
                h = states[t]
                dz = dh * h * (1.0 - h)
                g_in += np.outer(x[t - 1], dz)
                g_rec += np.outer(states[t - 1], dz)
                g_b += dz
                dh = W_rec @ dz
            W_out -= lr * dout * h_last
            b_out -= lr * dout
            W_in -= lr * g_in
            W_rec -= lr * g_rec
            b_h -= lr * g_b
        model.b_out = b_out
        mse = float(np.mean((forward_batch(model, X) - y) ** 2))
        finite = all(np.all(np.isfinite(p)) for p in model.params().values())
        if not (finite and np.isfinite(mse)):
            raise RnnDivergenceError(epoch, mse if finite else float("nan"))
        trace.append(mse)
    return trace


def train_rnn(
    examples: Sequence[SequenceExample],
    config: RnnConfig = RnnConfig(),
    *,
    scaling: ScalingParams | None = None,
    variables: Sequence[str] = (),
    mood: str = MOOD,
) -> tuple[RnnModel, list[float]]:
    """Train one user's network; returns the model and per-epoch training MSE.

    Initial weights and the per-epoch visiting order come from separate
    generators derived from ``config.seed``.
    """
    if not examples:
        raise ValueError("no training examples")
    users = {ex.user_id for ex in examples}
    if len(users) != 1:
        raise ValueError(f"examples span several users: {sorted(users)}")
    X = np.stack([np.asarray(ex.inputs, dtype=float) for ex in examples])
    y = np.array([ex.target for ex in examples], dtype=float)
    model = init_rnn(X.shape[2], config.hidden_dim, config)
    model.scaling = scaling
    model.user_id = users.pop()
    model.variables = list(variables)
    model.mood = mood
    rng = np.random.default_rng(derive_seed(config.seed, "rnn-shuffle"))
    with np.errstate(over="ignore"):  # exp overflow saturates the sigmoid, which is fine
        trace = _train_loop(model, X, y, config.learning_rate, config.epochs, rng)
    return model, trace


def predict_mood(model: RnnModel, inputs: np.ndarray) -> float:
    """Prediction mapped back onto the original mood scale."""
    if model.scaling is None or model.mood not in model.scaling.bounds:
        raise ValueError("model has no scaling parameters for the mood variable")
    pred, _ = forward(model, inputs)
    return model.scaling.unscale(model.mood, pred)
