"""From-scratch feed-forward classifier over flattened joint tables.

Rectifier hidden layers, softmax output, mean cross-entropy loss, and
mini-batch gradient descent with momentum.  Everything is plain numpy;
training with a fixed config and dataset is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import ModelFormatError, TrainingDivergedError, ValidationError
from .generate import LabeledDataset, LabeledDistribution
from .rng import stream
from .structures import CausalStructure

__all__ = [
    "MODEL_SCHEMA_VERSION",
    "MlpModel",
    "TrainConfig",
    "TrainReport",
    "ConfusionMatrix",
    "featurize",
    "dataset_arrays",
    "init_model",
    "forward",
    "loss_and_gradient",
    "train",
    "evaluate",
    "save_model",
    "load_model",
]

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Weights/biases per layer plus the class codes the outputs stand for.

    ``input_scale`` is a fixed multiplier applied to inputs before the
    first layer; joint-table entries shrink like 1/(k_x*k_y), so scaling
    them back to order one keeps the first layer well conditioned.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    classes: tuple[int, ...]
    activation: str = "relu"
    input_scale: float = 1.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2:
            raise ValidationError("need at least input and output layers")
        if self.activation != "relu":
            raise ValidationError("only the rectifier activation is supported")
        if not (np.isfinite(self.input_scale) and self.input_scale > 0):
            raise ValidationError("input_scale must be a positive real")
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if len(ws) != len(sizes) - 1 or len(bs) != len(sizes) - 1:
            raise ValidationError("need one weight matrix and bias per layer transition")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValidationError(f"layer {i} parameter shapes do not chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {i} parameters must be finite")
        if len(self.classes) != sizes[-1]:
            raise ValidationError("output width must equal the number of classes")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 200
    validation_fraction: float = 0.1
    patience: int = 10
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValidationError("validation_fraction must be in (0, 1)")
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.patience) <= 0:
            raise ValidationError("learning_rate, batch_size, max_epochs, patience must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ValidationError("momentum must be in [0, 1)")


@dataclass(frozen=True)
class TrainReport:
    train_losses: tuple[float, ...]
    val_losses: tuple[float, ...]
    initial_val_loss: float
    best_val_loss: float
    best_epoch: int          # 0 means the initial parameters were never beaten
    n_epochs_run: int


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts[i, j] = items of true class i predicted as class j."""

    counts: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        arr = np.array(self.counts, dtype=int)
        c = len(self.classes)
        if arr.shape != (c, c) or np.any(arr < 0):
            raise ValidationError("counts must be a nonnegative square matrix matching classes")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_errors(self) -> int:
        return self.total - int(np.trace(self.counts))

    @property
    def error_rate(self) -> float:
        return self.n_errors / self.total if self.total else 0.0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfusionMatrix)
            and self.classes == other.classes
            and np.array_equal(self.counts, other.counts)
        )


def featurize(item: LabeledDistribution) -> np.ndarray:
    """Row-major flattening of the joint, length k_x * k_y."""
    return item.joint.entries.reshape(-1).copy()


def dataset_arrays(
    dataset: LabeledDataset, classes: tuple[int, ...] | None = None
) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    """Feature matrix, class-index labels, and the class-code order used."""
    if classes is None:
        classes = tuple(sorted(int(c) for c in dataset.class_counts))
    index = {code: i for i, code in enumerate(classes)}
    feats = np.empty((len(dataset), dataset.k_x * dataset.k_y))
    labels = np.empty(len(dataset), dtype=int)
    for i, item in enumerate(dataset.items):
        feats[i] = item.joint.entries.reshape(-1)
        try:
            labels[i] = index[int(item.label)]
        except KeyError:
            raise ValidationError(f"dataset label {item.label!r} not among model classes")
    return feats, labels, classes


def init_model(
    layer_sizes,
    classes,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    input_scale: float = 1.0,
) -> MlpModel:
    """Scaled-uniform init with variance 2/fan_in per layer, zero biases."""
    if rng is None:
        rng = stream(seed, rngmod.TAG_MODEL_INIT)
    sizes = tuple(int(s) for s in layer_sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)  # uniform on [-limit, limit] has variance 2/fan_in
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, tuple(weights), tuple(biases), tuple(classes), "relu", input_scale)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cached(weights, biases, x, input_scale=1.0):
    pre = []
    x = x * input_scale
    act = [x]
    h = x
    for w, b in zip(weights[:-1], biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        act.append(h)
    logits = h @ weights[-1] + biases[-1]
    return pre, act, _softmax(logits)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities, one simplex row per input row."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.layer_sizes[0]:
        raise ValidationError(
            f"input width {x.shape[1]} does not match model input {model.layer_sizes[0]}"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite input")
    _, _, probs = _forward_cached(model.weights, model.biases, x, model.input_scale)
    return probs


def loss_and_gradient(model: MlpModel, x: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient for every weight and bias."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if labels.min() < 0 or labels.max() >= model.layer_sizes[-1]:
        raise ValidationError("labels out of range")
    loss, gw, gb = _loss_and_grad_raw(
        model.weights, model.biases, x, labels, model.input_scale
    )
    return loss, (gw, gb)


def _loss_and_grad_raw(weights, biases, x, labels, input_scale=1.0):
    n = x.shape[0]
    pre, act, probs = _forward_cached(weights, biases, x, input_scale)
    eps = 1e-300  # guards log(0) for confidently wrong predictions
    loss = float(-np.log(probs[np.arange(n), labels] + eps).mean())
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = act[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (pre[layer - 1] > 0.0)
    return loss, grads_w, grads_b


def _mean_loss(weights, biases, x, labels, input_scale=1.0, chunk=8192):
    total = 0.0
    for start in range(0, x.shape[0], chunk):
        xs = x[start : start + chunk]
        ls = labels[start : start + chunk]
        _, _, probs = _forward_cached(weights, biases, xs, input_scale)
        total += float(-np.log(probs[np.arange(xs.shape[0]), ls] + 1e-300).sum())
    return total / x.shape[0]


def train(model: MlpModel, dataset: LabeledDataset, cfg: TrainConfig):
    """Mini-batch SGD with momentum and early stopping on a validation split.

    Returns (model at the best validation loss seen, report).  The initial
    parameters count as epoch 0, so the returned model's validation loss
    never exceeds the initial one.  A non-finite loss aborts with
    ``TrainingDivergedError`` carrying the partial report.
    """
    if len(dataset) < 2:
        raise ValidationError("dataset too small to split")
    x, y, _ = dataset_arrays(dataset, model.classes)
    rng = stream(cfg.seed, rngmod.TAG_TRAINING)
    perm = rng.permutation(len(dataset))
    n_val = max(1, int(round(cfg.validation_fraction * len(dataset))))
    if n_val >= len(dataset):
        raise ValidationError("validation split leaves no training data")
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    x_tr, y_tr = x[train_idx], y[train_idx]
    x_va, y_va = x[val_idx], y[val_idx]

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    scale = model.input_scale
    initial_val = _mean_loss(weights, biases, x_va, y_va, scale)
    best_val = initial_val
    best_epoch = 0
    best_w = [w.copy() for w in weights]
    best_b = [b.copy() for b in biases]
    train_losses: list[float] = []
    val_losses: list[float] = []
    stale = 0

    def report(n_run):
        return TrainReport(
            tuple(train_losses), tuple(val_losses), initial_val, best_val, best_epoch, n_run
        )

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(x_tr.shape[0])
        epoch_loss = 0.0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gw, gb = _loss_and_grad_raw(weights, biases, x_tr[idx], y_tr[idx], scale)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss diverged at epoch {epoch}", report(epoch)
                )
            epoch_loss += loss * idx.size
            for layer in range(len(weights)):
                vel_w[layer] = cfg.momentum * vel_w[layer] - cfg.learning_rate * gw[layer]
                vel_b[layer] = cfg.momentum * vel_b[layer] - cfg.learning_rate * gb[layer]
                weights[layer] += vel_w[layer]
                biases[layer] += vel_b[layer]
        train_losses.append(epoch_loss / order.size)
        val = _mean_loss(weights, biases, x_va, y_va, scale)
        if not np.isfinite(val):
            raise TrainingDivergedError(f"validation loss diverged at epoch {epoch}", report(epoch))
        val_losses.append(val)
        if val < best_val:
            best_val = val
            best_epoch = epoch
            best_w = [w.copy() for w in weights]
            best_b = [b.copy() for b in biases]
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    trained = MlpModel(
        model.layer_sizes, tuple(best_w), tuple(best_b), model.classes,
        model.activation, model.input_scale,
    )
    return trained, report(len(train_losses))


def evaluate(model: MlpModel, dataset: LabeledDataset) -> ConfusionMatrix:
    """Argmax predictions accumulated into a confusion matrix."""
    x, y, classes = dataset_arrays(dataset, model.classes)
    preds = predict_indices(model, x)
    c = len(classes)
    counts = np.zeros((c, c), dtype=int)
    np.add.at(counts, (y, preds), 1)
    names = tuple(CausalStructure(code).name for code in classes)
    return ConfusionMatrix(counts, names)


def predict_indices(model: MlpModel, x: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Argmax class index per row, evaluated in chunks."""
    out = np.empty(x.shape[0], dtype=int)
    for start in range(0, x.shape[0], chunk):
        out[start : start + chunk] = forward(model, x[start : start + chunk]).argmax(axis=1)
    return out


def _fmt_floats(values) -> str:
    return "[" + ",".join(f"{v:.17g}" for v in values) + "]"


def _fmt_matrix(m) -> str:
    return "[" + ",".join(_fmt_floats(row) for row in m) + "]"


def save_model(model: MlpModel, path) -> None:
    """Schema-versioned JSON with parameters at 17 significant digits."""
    parts = [
        f'{{"schema_version":{MODEL_SCHEMA_VERSION}',
        f'"layer_sizes":{list(model.layer_sizes)}',
        f'"activation":"{model.activation}"',
        f'"input_scale":{model.input_scale:.17g}',
        f'"classes":{list(model.classes)}',
        '"weights":[' + ",".join(_fmt_matrix(w) for w in model.weights) + "]",
        '"biases":[' + ",".join(_fmt_floats(b) for b in model.biases) + "]}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(parts) + "\n")


def load_model(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: malformed model file: {exc}") from exc
    version = raw.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(f"{path}: unsupported schema version {version!r}")
    try:
        sizes = tuple(int(s) for s in raw["layer_sizes"])
        weights = tuple(np.array(w, dtype=float) for w in raw["weights"])
        biases = tuple(np.array(b, dtype=float) for b in raw["biases"])
        classes = tuple(int(c) for c in raw["classes"])
        activation = raw["activation"]
        input_scale = float(raw.get("input_scale", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file: {exc}") from exc
    try:
        return MlpModel(sizes, weights, biases, classes, activation, input_scale)
    except ValidationError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
