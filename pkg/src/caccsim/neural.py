"""Feed-forward regressor for the on-board prediction models.

The same architecture serves two roles with different feature sets:

* ``predictor`` consumes everything the controller consumes, including
  the untrusted V2V acceleration: (a_p, v_p, v_e, gap).
* ``response_estimator`` consumes trusted sensory inputs only:
  (v_p, v_e, gap). Its feature tuple simply has no a_p entry, so the
  V2V field cannot reach it.

Training is plain mini-batch gradient descent on mean squared error,
fully deterministic for a fixed seed: seeded init, seeded shuffles, and
a single-threaded batch sequence. The best-validation snapshot is kept
and restored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, TrainingError
from .scenario import Dataset

MODEL_FORMAT_VERSION = 1

PREDICTOR_FEATURES = ("a_p", "v_p", "v_e", "gap")
RESPONSE_ESTIMATOR_FEATURES = ("v_p", "v_e", "gap")

FEATURES_BY_KIND = {
    "predictor": PREDICTOR_FEATURES,
    "response_estimator": RESPONSE_ESTIMATOR_FEATURES,
}

ACTIVATIONS = ("relu", "tanh")


def features_for(kind: str, dataset: Dataset) -> np.ndarray:
    names = FEATURES_BY_KIND[kind]
    return np.column_stack([getattr(dataset, name) for name in names])


def targets_for(dataset: Dataset) -> np.ndarray:
    return np.asarray(dataset.a_e_response, dtype=float)


@dataclass
class MlpModel:
    model_kind: str
    layer_dims: list[int]            # input ... hidden ... 1
    hidden_activation: str
    means: np.ndarray                # per-feature normalization
    stds: np.ndarray
    weights: list[np.ndarray]        # (out, in) per layer
    biases: list[np.ndarray]

    def __post_init__(self):
        if self.model_kind not in FEATURES_BY_KIND:
            raise ModelError(f"unknown model kind {self.model_kind!r}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ModelError(f"unknown activation {self.hidden_activation!r}")
        if self.layer_dims[-1] != 1:
            raise ModelError("output dimension must be 1")
        if self.layer_dims[0] != len(FEATURES_BY_KIND[self.model_kind]):
            raise ModelError("input dimension does not match model kind")
        if np.any(self.stds <= 0):
            raise ModelError("normalization stds must be positive")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[i + 1], self.layer_dims[i]):
                raise ModelError(f"layer {i} weight shape {w.shape} inconsistent")
            if b.shape != (self.layer_dims[i + 1],):
                raise ModelError(f"layer {i} bias shape {b.shape} inconsistent")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return FEATURES_BY_KIND[self.model_kind]

    def _activate(self, z: np.ndarray) -> np.ndarray:
        if self.hidden_activation == "relu":
            return np.maximum(z, 0.0)
        return np.tanh(z)

    def forward(self, features) -> float | np.ndarray:
        """Apply the network; accepts one sample or a batch."""
        x = np.asarray(features, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_dims[0]:
            raise ModelError(
                f"{self.model_kind} expects {self.layer_dims[0]} features, got {x.shape[1]}")
        h = (x - self.means) / self.stds
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i < last:
                h = self._activate(h)
        out = h[:, 0]
        return float(out[0]) if single else out


@dataclass
class TrainConfig:
    hidden_layers: list[int] = field(default_factory=lambda: [32, 32])
    learning_rate: float = 1e-3
    batch_size: int = 512
    epochs: int = 60
    optimizer: str = "adam"          # adam | sgd-momentum
    early_stop_patience: int = 10
    rng_seed: int = 0
    hidden_activation: str = "relu"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise TrainingError("hyperparameters must be positive")
        if self.optimizer not in ("adam", "sgd-momentum"):
            raise TrainingError(f"unknown optimizer {self.optimizer!r}")
        if self.hidden_activation not in ACTIVATIONS:
            raise TrainingError(f"unknown activation {self.hidden_activation!r}")


def _init_model(kind: str, config: TrainConfig, means, stds) -> MlpModel:
    dims = [len(FEATURES_BY_KIND[kind])] + list(config.hidden_layers) + [1]
    rng = np.random.default_rng(config.rng_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = math.sqrt(2.0 / fan_in) if config.hidden_activation == "relu" \
            else math.sqrt(1.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(kind, dims, config.hidden_activation,
                    np.asarray(means, dtype=float), np.asarray(stds, dtype=float),
                    weights, biases)


def loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """MSE loss and its gradients w.r.t. every weight and bias."""
    z = (x - model.means) / model.stds
    acts = [z]
    pre = []
    last = len(model.weights) - 1
    h = z
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        u = h @ w.T + b
        pre.append(u)
        h = model._activate(u) if i < last else u
        acts.append(h)
    pred = acts[-1][:, 0]
    err = pred - y
    n = len(y)
    loss = float(np.mean(err ** 2))

    d = (2.0 / n) * err[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for i in range(last, -1, -1):
        grads_w[i] = d.T @ acts[i]
        grads_b[i] = d.sum(axis=0)
        if i > 0:
            d = d @ model.weights[i]
            if model.hidden_activation == "relu":
                d = d * (pre[i - 1] > 0)
            else:
                d = d * (1.0 - np.tanh(pre[i - 1]) ** 2)
    return loss, grads_w, grads_b


@dataclass
class EpochStats:
    epoch: int
    train_mae: float
    val_mae: float


def train(train_set: Dataset, val_set: Dataset, config: TrainConfig,
          kind: str) -> tuple[MlpModel, list[EpochStats]]:
    """Fit a model of the given kind; returns the best-validation snapshot."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise TrainingError("training and validation sets must be non-empty")
    x = features_for(kind, train_set)
    y = targets_for(train_set)
    xv = features_for(kind, val_set)
    yv = targets_for(val_set)

    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds[stds <= 0] = 1.0
    model = _init_model(kind, config, means, stds)

    rng = np.random.default_rng(derive_shuffle_seed(config.rng_seed))
    m_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_w = [np.zeros_like(w) for w in model.weights]
    v_b = [np.zeros_like(b) for b in model.biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    momentum = 0.9
    step = 0

    best_val = math.inf
    best = None
    report: list[EpochStats] = []
    stall = 0

    for epoch in range(config.epochs):
        order = rng.permutation(len(y))
        for lo in range(0, len(y), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            loss, gw, gb = loss_and_grads(model, x[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingError(
                    "non-finite training loss; lower the learning rate "
                    f"(currently {config.learning_rate})")
            step += 1
            if config.optimizer == "adam":
                for i in range(len(model.weights)):
                    m_w[i] = beta1 * m_w[i] + (1 - beta1) * gw[i]
                    v_w[i] = beta2 * v_w[i] + (1 - beta2) * gw[i] ** 2
                    m_b[i] = beta1 * m_b[i] + (1 - beta1) * gb[i]
                    v_b[i] = beta2 * v_b[i] + (1 - beta2) * gb[i] ** 2
                    mhw = m_w[i] / (1 - beta1 ** step)
                    vhw = v_w[i] / (1 - beta2 ** step)
                    mhb = m_b[i] / (1 - beta1 ** step)
                    vhb = v_b[i] / (1 - beta2 ** step)
                    model.weights[i] -= config.learning_rate * mhw / (np.sqrt(vhw) + eps)
                    model.biases[i] -= config.learning_rate * mhb / (np.sqrt(vhb) + eps)
            else:
                for i in range(len(model.weights)):
                    m_w[i] = momentum * m_w[i] - config.learning_rate * gw[i]
                    m_b[i] = momentum * m_b[i] - config.learning_rate * gb[i]
                    model.weights[i] += m_w[i]
                    model.biases[i] += m_b[i]

        train_mae = float(np.mean(np.abs(model.forward(x) - y)))
        val_mae = float(np.mean(np.abs(model.forward(xv) - yv)))
        report.append(EpochStats(epoch, train_mae, val_mae))
        if val_mae < best_val:
            best_val = val_mae
            best = ([w.copy() for w in model.weights], [b.copy() for b in model.biases])
            stall = 0
        else:
            stall += 1
            if stall >= config.early_stop_patience:
                break

    if best is not None:
        model.weights, model.biases = best
    return model, report


def derive_shuffle_seed(seed: int) -> int:
    # keep init and shuffle streams independent
    return (seed * 0x9E3779B97F4A7C15 + 1) % (2**63)


def default_train_config(kind: str, rng_seed: int = 0) -> TrainConfig:
    """Shipped hyperparameters per model role.

    The estimator deliberately gets a small single hidden layer: trained
    on closed-loop data its features never witness independent gap
    excursions, and a high-capacity fit extrapolates erratically exactly
    where mitigation needs it. Low capacity keeps it smooth off-manifold.
    """
    if kind == "response_estimator":
        return TrainConfig(hidden_layers=[8], epochs=15, rng_seed=rng_seed)
    return TrainConfig(hidden_layers=[32, 32], epochs=40, rng_seed=rng_seed)


def mae(model: MlpModel, dataset: Dataset) -> float:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    x = features_for(model.model_kind, dataset)
    return float(np.mean(np.abs(model.forward(x) - targets_for(dataset))))


# --- serialization -----------------------------------------------------------

def save_model(model: MlpModel, path) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "model_kind": model.model_kind,
        "layer_dims": list(model.layer_dims),
        "activations": [model.hidden_activation] * (len(model.weights) - 1) + ["identity"],
        "normalization": {
            "means": [float(v) for v in model.means],
            "stds": [float(v) for v in model.stds],
        },
        "layers": [
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.ravel()],
                "bias": [float(v) for v in b],
            }
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> MlpModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupt model file {path}: {exc}") from exc
    try:
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise ModelError(f"unsupported model format version {doc['format_version']}")
        acts = doc["activations"]
        hidden = set(acts[:-1]) or {"relu"}
        if acts[-1] != "identity" or len(hidden) != 1:
            raise ModelError(f"unsupported activation chain {acts}")
        (hidden_activation,) = hidden
        dims = list(doc["layer_dims"])
        weights, biases = [], []
        for i, layer in enumerate(doc["layers"]):
            w = np.asarray(layer["weights"], dtype=float)
            if len(w) != layer["rows"] * layer["cols"]:
                raise ModelError(f"layer {i} weight count mismatch")
            weights.append(w.reshape(layer["rows"], layer["cols"]))
            biases.append(np.asarray(layer["bias"], dtype=float))
        model = MlpModel(
            model_kind=doc["model_kind"],
            layer_dims=dims,
            hidden_activation=hidden_activation,
            means=np.asarray(doc["normalization"]["means"], dtype=float),
            stds=np.asarray(doc["normalization"]["stds"], dtype=float),
            weights=weights,
            biases=biases,
        )
    except ModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model file {path}: {exc}") from exc
    return model
