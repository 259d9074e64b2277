"""
Graph convolutional classifier written directly against numpy.

    H0 = X
    H(l+1) = tanh(Ahat_norm @ H(l) @ Theta(l))        l = 0..L-1
    r = mean over nodes of H(L)
    logits = r @ W + b,  probs = softmax(logits)
    loss = -log(probs[label])

Graphs of different sizes are zero-padded into one dense batch; padded
rows of the normalized adjacency are zero, so padded node states stay at
tanh(0) = 0 and never reach the readout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InputError
from .featurize import GraphSample

LOG_CLAMP = 1e-12


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 with D the (weighted) degree of A + I."""
    a = np.asarray(a, dtype=float)
    a_hat = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def loss(probs: np.ndarray, label: int) -> float:
    return float(-math.log(max(float(probs[label]), LOG_CLAMP)))


# ---------------------------------------------------------------------------
# model

@dataclass
class GcnModel:
    thetas: list[np.ndarray]
    fc_weights: np.ndarray
    fc_bias: np.ndarray
    seed: int = 0
    feature_fingerprint: str = ""

    @property
    def d_in(self) -> int:
        return self.thetas[0].shape[0]

    @property
    def hidden(self) -> int:
        return self.fc_weights.shape[0]

    @property
    def n_layers(self) -> int:
        return len(self.thetas)

    @property
    def n_classes(self) -> int:
        return self.fc_weights.shape[1]

    @property
    def dims(self) -> dict:
        return {"d_in": self.d_in, "hidden": self.hidden, "layers": self.n_layers,
                "classes": self.n_classes}

    def params(self) -> list[np.ndarray]:
        return [*self.thetas, self.fc_weights, self.fc_bias]

    def with_params(self, params: list[np.ndarray]) -> GcnModel:
        L = self.n_layers
        return GcnModel(list(params[:L]), params[L], params[L + 1], self.seed,
                        self.feature_fingerprint)

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(d_in: int, n_classes: int, hidden: int = 32, layers: int = 3,
               seed: int = 0) -> GcnModel:
    rng = np.random.default_rng(seed)
    dims = [d_in] + [hidden] * layers
    thetas = [_glorot(rng, dims[i], dims[i + 1]) for i in range(layers)]
    w = _glorot(rng, hidden, n_classes)
    return GcnModel(thetas, w, np.zeros(n_classes), seed)


# ---------------------------------------------------------------------------
# batching

@dataclass
class GraphBatch:
    a_norm: np.ndarray   # (B, N, N)
    x: np.ndarray        # (B, N, d_in)
    mask: np.ndarray     # (B, N)
    counts: np.ndarray   # (B,)
    labels: np.ndarray   # (B,)

    def __len__(self) -> int:
        return self.x.shape[0]

    @classmethod
    def from_samples(cls, samples, n_max: int | None = None) -> GraphBatch:
        samples = list(samples)
        if not samples:
            raise InputError("cannot batch zero graphs")
        d = samples[0].feature_dim
        n_max = n_max or max(s.node_count for s in samples)
        B = len(samples)
        a = np.zeros((B, n_max, n_max))
        x = np.zeros((B, n_max, d))
        mask = np.zeros((B, n_max))
        counts = np.zeros(B)
        for k, s in enumerate(samples):
            if s.feature_dim != d:
                raise DimensionMismatch(f"graph {k} has feature_dim {s.feature_dim}, expected {d}")
            n = s.node_count
            a[k, :n, :n] = normalize_adjacency(s.adjacency)
            x[k, :n] = s.x
            mask[k, :n] = 1.0
            counts[k] = n
        labels = np.array([s.label for s in samples], dtype=int)
        return cls(a, x, mask, counts, labels)

    def take(self, idx) -> GraphBatch:
        return GraphBatch(self.a_norm[idx], self.x[idx], self.mask[idx], self.counts[idx],
                          self.labels[idx])


@dataclass
class Forward:
    logits: np.ndarray
    probs: np.ndarray
    readout: np.ndarray
    hidden: list[np.ndarray]                       # H0..HL
    propagated: list[np.ndarray] = field(repr=False)  # Ahat @ H(l), cached for backward


def _check_dims(model: GcnModel, d: int) -> None:
    if d != model.d_in:
        raise DimensionMismatch(f"graph feature_dim {d} != model d_in {model.d_in}")


def forward_batch(model: GcnModel, batch: GraphBatch) -> Forward:
    _check_dims(model, batch.x.shape[2])
    h = batch.x
    hidden = [h]
    propagated = []
    for theta in model.thetas:
        ah = batch.a_norm @ h
        h = np.tanh(ah @ theta)
        propagated.append(ah)
        hidden.append(h)
    readout = (h * batch.mask[:, :, None]).sum(axis=1) / batch.counts[:, None]
    logits = readout @ model.fc_weights + model.fc_bias
    return Forward(logits, softmax(logits), readout, hidden, propagated)


def backward_batch(model: GcnModel, batch: GraphBatch, fwd: Forward) -> list[np.ndarray]:
    """Gradients of the batch-mean cross entropy, aligned with ``model.params()``."""
    B = len(batch)
    dlogits = fwd.probs.copy()
    dlogits[np.arange(B), batch.labels] -= 1.0
    dlogits /= B
    d_w = fwd.readout.T @ dlogits
    d_b = dlogits.sum(axis=0)
    d_r = dlogits @ model.fc_weights.T
    dh = batch.mask[:, :, None] * (d_r / batch.counts[:, None])[:, None, :]

    d_thetas = [None] * model.n_layers
    for l in range(model.n_layers - 1, -1, -1):
        dz = dh * (1.0 - fwd.hidden[l + 1] ** 2)
        ah = fwd.propagated[l]
        d_thetas[l] = ah.reshape(-1, ah.shape[2]).T @ dz.reshape(-1, dz.shape[2])
        if l:
            # Ahat_norm is symmetric
            dh = batch.a_norm @ (dz @ model.thetas[l].T)
    return [*d_thetas, d_w, d_b]


def batch_loss(fwd: Forward, labels: np.ndarray) -> float:
    p = fwd.probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(p, LOG_CLAMP))))


def forward(model: GcnModel, sample: GraphSample) -> Forward:
    """Single-graph forward pass; hidden states are (N, d) arrays."""
    fwd = forward_batch(model, GraphBatch.from_samples([sample]))
    return Forward(fwd.logits[0], fwd.probs[0], fwd.readout[0], [h[0] for h in fwd.hidden],
                   [p[0] for p in fwd.propagated])


def backward(model: GcnModel, sample: GraphSample, label: int | None = None) -> list[np.ndarray]:
    """Exact gradients of ``loss(forward(model, sample).probs, label)``."""
    if label is not None and label != sample.label:
        sample = GraphSample(sample.x, sample.adjacency, label)
    batch = GraphBatch.from_samples([sample])
    return backward_batch(model, batch, forward_batch(model, batch))


def sample_loss(model: GcnModel, sample: GraphSample, label: int | None = None) -> float:
    return loss(forward(model, sample).probs, sample.label if label is None else label)


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 1200
    batch_size: int = 32
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden: int = 32
    layers: int = 3

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be > 0")
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> AdamState:
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update; returns new (params, state) and mutates nothing."""
    b1, b2 = config.beta1, config.beta2
    t = state.t + 1
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    test_accuracy: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def rows(self):
        for i, row in enumerate(zip(self.train_loss, self.train_accuracy, self.test_accuracy), 1):
            yield (i, *row)


def _samples_of(data) -> list[GraphSample]:
    return list(getattr(data, "samples", data))


def _n_classes(*datasets) -> int:
    for d in datasets:
        names = getattr(d, "class_names", None)
        if names:
            return len(names)
    return 1 + max(s.label for d in datasets for s in _samples_of(d))


def evaluate_batch(model: GcnModel, batch: GraphBatch, chunk: int = 2048) -> tuple[float, float, np.ndarray]:
    """Mean loss, accuracy and predictions over a pre-built batch."""
    if len(batch) == 0:
        return float("nan"), float("nan"), np.zeros(0, dtype=int)
    losses, preds = [], []
    for start in range(0, len(batch), chunk):
        part = batch.take(slice(start, start + chunk))
        fwd = forward_batch(model, part)
        p = fwd.probs[np.arange(len(part)), part.labels]
        losses.append(-np.log(np.maximum(p, LOG_CLAMP)))
        preds.append(fwd.probs.argmax(axis=1))
    pred = np.concatenate(preds)
    return float(np.concatenate(losses).mean()), float((pred == batch.labels).mean()), pred


def train(train_set, test_set, model_init_seed: int, config: TrainConfig,
          log=None) -> tuple[GcnModel, TrainHistory]:
    """Mini-batch Adam training; fully determined by the two seeds."""
    train_samples = _samples_of(train_set)
    test_samples = _samples_of(test_set)
    if not train_samples:
        raise InputError("empty training set")
    d_in = train_samples[0].feature_dim
    for s in train_samples + test_samples:
        if s.feature_dim != d_in:
            raise DimensionMismatch(f"mixed feature dims {s.feature_dim} and {d_in}")

    model = init_model(d_in, _n_classes(train_set, test_set), config.hidden, config.layers,
                       model_init_seed)
    fingerprint = getattr(getattr(train_set, "feature_config", None), "fingerprint", None)
    if fingerprint:
        model.feature_fingerprint = fingerprint()

    n_max = max(s.node_count for s in train_samples + test_samples)
    train_batch = GraphBatch.from_samples(train_samples, n_max)
    test_batch = GraphBatch.from_samples(test_samples, n_max) if test_samples else None

    rng = np.random.default_rng(config.seed)
    params = model.params()
    state = AdamState.zeros_like(params)
    history = TrainHistory()
    n = len(train_batch)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            mb = train_batch.take(order[start:start + config.batch_size])
            fwd = forward_batch(model, mb)
            grads = backward_batch(model, mb, fwd)
            params, state = adam_step(params, grads, state, config)
            model = model.with_params(params)
        tr_loss, tr_acc, _ = evaluate_batch(model, train_batch)
        te_acc = evaluate_batch(model, test_batch)[1] if test_batch is not None else float("nan")
        history.train_loss.append(tr_loss)
        history.train_accuracy.append(tr_acc)
        history.test_accuracy.append(te_acc)
        if log is not None:
            log(epoch + 1, tr_loss, tr_acc, te_acc)
    return model, history


def predict(model: GcnModel, data, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and readout vectors for every graph."""
    samples = _samples_of(data)
    batch = GraphBatch.from_samples(samples)
    probs, readouts = [], []
    for start in range(0, len(batch), chunk):
        fwd = forward_batch(model, batch.take(slice(start, start + chunk)))
        probs.append(fwd.probs)
        readouts.append(fwd.readout)
    return np.concatenate(probs), np.concatenate(readouts)


# ---------------------------------------------------------------------------
# checkpoints

def model_to_dict(model: GcnModel, class_names=None) -> dict:
    return {
        "dims": model.dims,
        "thetas": [t.ravel().tolist() for t in model.thetas],
        "fc_weights": model.fc_weights.ravel().tolist(),
        "fc_bias": model.fc_bias.tolist(),
        "seed": model.seed,
        "feature_config_fingerprint": model.feature_fingerprint,
        "classes": list(class_names) if class_names is not None else None,
    }


def model_from_dict(d: dict) -> GcnModel:
    try:
        dims = d["dims"]
        d_in, hidden, layers, classes = dims["d_in"], dims["hidden"], dims["layers"], dims["classes"]
        sizes = [d_in] + [hidden] * layers
        thetas = [np.array(t, dtype=float).reshape(sizes[i], sizes[i + 1])
                  for i, t in enumerate(d["thetas"])]
        w = np.array(d["fc_weights"], dtype=float).reshape(hidden, classes)
        b = np.array(d["fc_bias"], dtype=float).reshape(classes)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed checkpoint: {exc}") from None
    if len(thetas) != layers:
        raise InputError(f"checkpoint lists {len(thetas)} layers, dims say {layers}")
    return GcnModel(thetas, w, b, int(d.get("seed", 0)), d.get("feature_config_fingerprint", ""))


def save_model(model: GcnModel, path, class_names=None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, class_names)) + "\n", encoding="utf-8")


def load_model(path) -> tuple[GcnModel, list[str] | None]:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from None
    return model_from_dict(d), d.get("classes")
