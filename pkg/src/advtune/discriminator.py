"""Feedforward binary classifier separating target (1) from generated (0).

Rectifier hidden layers, one logistic output, mean binary cross-entropy,
plain mini-batch SGD. Inputs are standardized with a per-feature mean and
scale fixed when training starts, so the forward pass never depends on
batch composition.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss

MODEL_FORMAT = "advtune-mlp/1"
_P_LO = np.finfo(np.float64).tiny
_P_HI = np.nextafter(1.0, 0.0)


@dataclass
class ClassifierModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        return np.concatenate([a.ravel() for w, b in zip(self.weights, self.biases)
                               for a in (w, b)])

    def set_params(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params:
            raise DimensionMismatch(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[pos:pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[i] = flat[pos:pos + b.size].copy()
            pos += b.size

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "layers": [{"W": w.tolist(), "b": b.tolist()}
                       for w, b in zip(self.weights, self.biases)],
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ClassifierModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {doc.get('format')!r}")
        ws = [np.array(l["W"], dtype=np.float64) for l in doc["layers"]]
        bs = [np.array(l["b"], dtype=np.float64) for l in doc["layers"]]
        mean = None if doc.get("mean") is None else np.array(doc["mean"], dtype=np.float64)
        scale = None if doc.get("scale") is None else np.array(doc["scale"], dtype=np.float64)
        return cls(ws, bs, mean, scale)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 500
    batch_size: int = 32
    seed: int = 0
    hidden: tuple[int, ...] = (64, 32)
    weight_decay: float = 0.0
    standardize: bool = True
    early_stop_window: int = 20
    early_stop_tol: float = 1e-6

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


def init_model(input_dim: int, seed=0, hidden=(64, 32)) -> ClassifierModel:
    """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = [int(input_dim), *hidden, 1]
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        ws.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return ClassifierModel(ws, bs)


def _prep(model: ClassifierModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch(f"input has {X.shape[1]} features, model expects "
                                f"{model.input_dim}")
    if model.mean is not None:
        X = (X - model.mean) / model.scale
    return X


def _forward_logits(model, Xs, keep=False):
    acts = [Xs]
    pre = []
    a = Xs
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        if keep:
            pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
        if keep and i < last:
            acts.append(a)
    return (a[:, 0], acts, pre) if keep else a[:, 0]


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def predict_proba(model: ClassifierModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[0] == 0:
        return np.zeros(0)
    z = _forward_logits(model, _prep(model, X))
    return np.clip(_sigmoid(z), _P_LO, _P_HI)


def forward(model: ClassifierModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("forward takes a single feature vector")
    return float(predict_proba(model, x)[0])


def score_batch(model: ClassifierModel, samples) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        return np.zeros(0)
    return predict_proba(model, samples)


def bce_loss(model: ClassifierModel, X, y) -> float:
    z = _forward_logits(model, _prep(model, X))
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grad(model: ClassifierModel, X, y, weight_decay: float = 0.0):
    """Mean BCE (+ L2 penalty) and its gradient as a flat vector in
    `ClassifierModel.get_params` order."""
    Xs = _prep(model, X)
    y = np.asarray(y, dtype=np.float64)
    n = Xs.shape[0]
    z, acts, pre = _forward_logits(model, Xs, keep=True)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    delta = ((_sigmoid(z) - y) / n)[:, None]
    grads = []
    for i in range(len(model.weights) - 1, -1, -1):
        gw = acts[i].T @ delta
        gb = delta.sum(axis=0)
        if weight_decay:
            gw = gw + weight_decay * model.weights[i]
        grads.append((gw, gb))
        if i > 0:
            delta = (delta @ model.weights[i].T) * (pre[i - 1] > 0)
    if weight_decay:
        loss += 0.5 * weight_decay * sum(float(np.sum(w * w)) for w in model.weights)
    grads.reverse()
    return loss, np.concatenate([a.ravel() for gw, gb in grads for a in (gw, gb)])


def _sgd_step(views, X, y, lr, wd):
    # same arithmetic as loss_and_grad, without the flat-vector round trip
    acts, pre = [X], []
    a = X
    last = len(views) - 1
    for i, (w, b) in enumerate(views):
        z = a @ w + b
        if i < last:
            pre.append(z)
            a = np.maximum(z, 0.0)
            acts.append(a)
    z = z[:, 0]
    delta = ((1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0))) - y) / X.shape[0])[:, None]
    for i in range(last, -1, -1):
        w, b = views[i]
        gw = acts[i].T @ delta
        gb = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ w.T) * (pre[i - 1] > 0)
        if wd:
            gw += wd * w
        w -= lr * gw
        b -= lr * gb


@dataclass
class TrainResult:
    model: ClassifierModel
    history: list[float] = field(default_factory=list)
    stopped_early: bool = False


def train(model: ClassifierModel, real, fake, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit ``model`` (a copy is trained) to real=1 / fake=0 by mini-batch SGD.

    ``history[e]`` is the mean training BCE after epoch ``e``. Training
    stops early once the loss moves less than ``early_stop_tol`` over
    ``early_stop_window`` epochs.
    """
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.ndim != 2 or fake.ndim != 2 or len(real) == 0 or len(fake) == 0:
        raise ValueError("real and fake must be nonempty 2-D arrays")
    if real.shape[1] != fake.shape[1]:
        raise DimensionMismatch("real and fake feature dimensions differ")
    X = np.concatenate([real, fake])
    y = np.concatenate([np.ones(len(real)), np.zeros(len(fake))])
    model = copy.deepcopy(model)
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch(f"data has {X.shape[1]} features, model expects "
                                f"{model.input_dim}")
    if cfg.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        model.mean = mu
        model.scale = np.where(sd > 1e-8, sd, 1.0)
    Xs = (X - model.mean) / model.scale if model.mean is not None else X
    # train on standardized inputs directly; restore the transform at the end
    mean, scale = model.mean, model.scale
    model.mean = model.scale = None

    rng = np.random.default_rng(cfg.seed)
    n = len(X)
    lr, wd = cfg.learning_rate, cfg.weight_decay
    # weights and biases become views into one flat buffer updated in place
    flat = model.get_params()
    model.set_params(flat)
    views, pos = [], 0
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        wv = flat[pos:pos + w.size].reshape(w.shape)
        pos += w.size
        bv = flat[pos:pos + b.size]
        pos += b.size
        model.weights[i], model.biases[i] = wv, bv
        views.append((wv, bv))
    history: list[float] = []
    stopped = False
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            _sgd_step(views, Xs[idx], y[idx], lr, wd)
        loss = bce_loss(model, Xs, y)
        if wd:
            loss += 0.5 * wd * sum(float(np.sum(w * w)) for w in model.weights)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
        history.append(loss)
        w = cfg.early_stop_window
        if w and len(history) > w and abs(history[-1] - history[-1 - w]) < cfg.early_stop_tol:
            stopped = True
            break
    model.weights = [w.copy() for w in model.weights]
    model.biases = [b.copy() for b in model.biases]
    model.mean, model.scale = mean, scale
    return TrainResult(model, history, stopped)


def accuracy(model: ClassifierModel, X, y) -> float:
    """Fraction of thresholded predictions equal to ``y``; p == 0.5 predicts 0."""
    y = np.asarray(y).ravel()
    if y.size == 0:
        raise ValueError("empty labeled set")
    pred = (predict_proba(model, X) > 0.5).astype(int)
    return float(np.mean(pred == y.astype(int)))
