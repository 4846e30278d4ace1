"""Dense feed-forward classifier with manual backprop and Adam.

Weight matrix W_l has shape (width of layer l-1, width of layer l), so
column i holds the incoming weights of neuron i; the training objective
is mean cross-entropy plus the additive penalty from
:mod:`treedistill.regularizers`.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from treedistill import regularizers
from treedistill.errors import DivergenceError, InputError, ShapeError
from treedistill.regularizers import RegularizerSpec

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths and activation tags; output width follows n_classes."""

    input_dim: int
    hidden_sizes: tuple
    n_classes: int
    hidden_activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_dim < 1:
            raise InputError("input_dim must be >= 1")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise InputError("hidden_sizes must be non-empty positive integers")
        if self.n_classes < 2:
            raise InputError("n_classes must be >= 2")
        if self.hidden_activation != "relu":
            raise InputError("only relu hidden activation is supported")

    @property
    def output_activation(self):
        return "sigmoid" if self.n_classes == 2 else "softmax"

    @property
    def output_dim(self):
        return 1 if self.n_classes == 2 else self.n_classes

    @property
    def layer_sizes(self):
        return [self.input_dim, *self.hidden_sizes, self.output_dim]


class MlpModel:
    """Immutable trained (or freshly initialized) network."""

    def __init__(self, architecture, weights, biases):
        sizes = architecture.layer_sizes
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ShapeError("one weight matrix and bias vector per layer required")
        frozen_w, frozen_b = [], []
        for l, (w, b) in enumerate(zip(weights, biases)):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            if w.shape != (sizes[l], sizes[l + 1]):
                raise ShapeError(
                    f"layer {l} weights have shape {w.shape}, expected {(sizes[l], sizes[l + 1])}"
                )
            if b.shape != (sizes[l + 1],):
                raise ShapeError(f"layer {l} bias has shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InputError(f"layer {l} has non-finite parameters")
            w.flags.writeable = False
            b.flags.writeable = False
            frozen_w.append(w)
            frozen_b.append(b)
        self.architecture = architecture
        self.weights = frozen_w
        self.biases = frozen_b

    @property
    def n_layers(self):
        return len(self.weights)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    epochs: int
    seed: int
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")
        if self.seed < 0:
            raise InputError("seed must be non-negative")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise InputError("adam betas must lie in (0, 1)")
        if self.adam_epsilon <= 0:
            raise InputError("adam_epsilon must be positive")

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_epsilon": self.adam_epsilon,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            learning_rate=float(d["learning_rate"]),
            batch_size=int(d["batch_size"]),
            epochs=int(d["epochs"]),
            seed=int(d["seed"]),
            adam_beta1=float(d.get("adam_beta1", 0.9)),
            adam_beta2=float(d.get("adam_beta2", 0.999)),
            adam_epsilon=float(d.get("adam_epsilon", 1e-8)),
        )


@dataclass
class TrainHistory:
    """Per-epoch records: batch-mean data loss, penalty, objective, and
    end-of-epoch training accuracy."""

    data_loss: list = field(default_factory=list)
    penalty: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)


def init_model(arch, seed):
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(arch, weights, biases)


def _check_inputs(arch, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != arch.input_dim:
        raise ShapeError(f"expected (n, {arch.input_dim}) inputs, got {X.shape}")
    return X


def _forward_arrays(arch, weights, biases, X):
    activations = [X]
    pre = []
    a = X
    for l, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        pre.append(z)
        if l < len(weights) - 1:
            a = np.maximum(z, 0.0)
        elif arch.output_activation == "sigmoid":
            a = expit(z)
        else:
            shifted = z - z.max(axis=1, keepdims=True)
            e = np.exp(shifted)
            a = e / e.sum(axis=1, keepdims=True)
        activations.append(a)
    return a, {"activations": activations, "pre": pre}


def forward(model, X):
    """Class probabilities plus the cached activations backward needs.

    Binary models return one column with P(class 1); multiclass models
    return one row per sample summing to 1.
    """
    X = _check_inputs(model.architecture, X)
    return _forward_arrays(model.architecture, model.weights, model.biases, X)


def data_loss(probs, labels):
    """Mean binary or categorical cross-entropy, probabilities clamped."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeError("probs must be (n, k) with one label per row")
    n_classes = 2 if probs.shape[1] == 1 else probs.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"labels must lie in [0, {n_classes})")
    clamped = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if probs.shape[1] == 1:
        p = clamped[:, 0]
        y = labels.astype(np.float64)
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    return float(-np.mean(np.log(clamped[np.arange(len(labels)), labels])))


def _output_delta(arch, probs, labels):
    n = probs.shape[0]
    if arch.output_activation == "sigmoid":
        return (probs - labels.astype(np.float64)[:, None]) / n
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), labels] = 1.0
    return (probs - onehot) / n


def _backward_arrays(arch, weights, biases, X, labels, reg):
    probs, cache = _forward_arrays(arch, weights, biases, X)
    delta = _output_delta(arch, probs, labels)
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        grads_w[l] = cache["activations"][l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (cache["pre"][l - 1] > 0.0)
    if not reg.is_inactive:
        for g, pg in zip(grads_w, regularizers.penalty_subgradient(weights, reg)):
            g += pg
    return grads_w, grads_b, probs


def backward(model, X, labels, reg=regularizers.NONE):
    """Gradients of (mean data loss + penalty) w.r.t. weights and biases."""
    X = _check_inputs(model.architecture, X)
    labels = _check_labels(model.architecture, labels, X.shape[0])
    grads_w, grads_b, _ = _backward_arrays(
        model.architecture, model.weights, model.biases, X, labels, reg
    )
    return grads_w, grads_b


def _check_labels(arch, labels, n_rows):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n_rows,):
        raise ShapeError("labels must be one class index per row")
    if labels.size and (labels.min() < 0 or labels.max() >= arch.n_classes):
        raise InputError(f"labels must lie in [0, {arch.n_classes})")
    return labels


def train(train_set, arch, cfg, reg=regularizers.NONE):
    """Mini-batch Adam over seeded shuffled epochs.

    Deterministic for a fixed (dataset, config, seed); raises
    :class:`DivergenceError` naming the epoch if any step's objective
    goes non-finite.
    """
    X = _check_inputs(arch, train_set.X)
    if not np.all(np.isfinite(X)):
        raise InputError("training features must be finite (standardize first)")
    y = _check_labels(arch, train_set.y, X.shape[0])

    model0 = init_model(arch, cfg.seed)
    weights = [w.copy() for w in model0.weights]
    biases = [b.copy() for b in model0.biases]
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0

    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    history = TrainHistory()
    n = X.shape[0]

    def adam_update(params, grads, ms, vs):
        b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon
        for p, g, m, v in zip(params, grads, ms, vs):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1**step)
            v_hat = v / (1.0 - b2**step)
            p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        batch_losses, batch_penalties = [], []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            grads_w, grads_b, probs = _backward_arrays(arch, weights, biases, X[idx], y[idx], reg)
            loss = data_loss(probs, y[idx])
            pen = regularizers.penalty(weights, reg) if not reg.is_inactive else 0.0
            if not np.isfinite(loss + pen):
                raise DivergenceError(f"non-finite objective at epoch {epoch}", epoch=epoch)
            batch_losses.append(loss)
            batch_penalties.append(pen)
            step += 1
            adam_update(weights, grads_w, m_w, v_w)
            adam_update(biases, grads_b, m_b, v_b)

        probs, _ = _forward_arrays(arch, weights, biases, X)
        acc = float(np.mean(_classes_from_probs(arch, probs) == y))
        history.data_loss.append(float(np.mean(batch_losses)))
        history.penalty.append(float(np.mean(batch_penalties)))
        history.objective.append(float(np.mean(batch_losses) + np.mean(batch_penalties)))
        history.train_accuracy.append(acc)

    return MlpModel(arch, weights, biases), history


def _classes_from_probs(arch, probs):
    if arch.output_activation == "sigmoid":
        return (probs[:, 0] > 0.5).astype(np.int64)
    return np.argmax(probs, axis=1).astype(np.int64)


def predict_classes(model, X):
    """Hard class predictions (argmax; binary ties at 0.5 go to class 0)."""
    probs, _ = forward(model, X)
    return _classes_from_probs(model.architecture, probs)


def class_scores(model, X):
    """Scores for AUC: 1-D P(class 1) for binary, full matrix otherwise."""
    probs, _ = forward(model, X)
    if model.architecture.output_activation == "sigmoid":
        return probs[:, 0]
    return probs


MODEL_FORMAT = "treedistill-model"
MODEL_VERSION = 1


def model_to_document(model, train_config=None, regularizer=None):
    """Versioned dict with row-major weights; floats survive JSON exactly."""
    arch = model.architecture
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "architecture": {
            "input_dim": arch.input_dim,
            "hidden_sizes": list(arch.hidden_sizes),
            "n_classes": arch.n_classes,
            "hidden_activation": arch.hidden_activation,
            "output_activation": arch.output_activation,
        },
        "weights": [
            {"shape": list(w.shape), "data": [float(x) for x in w.ravel(order="C")]}
            for w in model.weights
        ],
        "biases": [[float(x) for x in b] for b in model.biases],
        "train_config": None if train_config is None else train_config.to_dict(),
        "regularizer": None if regularizer is None else regularizer.to_dict(),
    }


def model_from_document(doc):
    if doc.get("format") != MODEL_FORMAT:
        raise InputError("not a model document")
    if doc.get("version") != MODEL_VERSION:
        raise InputError(f"unsupported model document version {doc.get('version')!r}")
    a = doc["architecture"]
    arch = MlpArchitecture(
        input_dim=int(a["input_dim"]),
        hidden_sizes=tuple(a["hidden_sizes"]),
        n_classes=int(a["n_classes"]),
        hidden_activation=a.get("hidden_activation", "relu"),
    )
    weights = [
        np.asarray(w["data"], dtype=np.float64).reshape(w["shape"]) for w in doc["weights"]
    ]
    biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    model = MlpModel(arch, weights, biases)
    cfg = None if doc.get("train_config") is None else TrainConfig.from_dict(doc["train_config"])
    reg = None if doc.get("regularizer") is None else RegularizerSpec.from_dict(doc["regularizer"])
    return model, cfg, reg


def save_model(path, model, train_config=None, regularizer=None):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_document(model, train_config, regularizer), f)


def load_model(path):
    with open(path, encoding="utf-8") as f:
        return model_from_document(json.load(f))
