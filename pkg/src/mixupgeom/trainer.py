"""Constant-width MLP trained with mixup on synthetic Gaussian blobs.

Everything is plain numpy with manual backpropagation: the point is a
fully deterministic, desk-scale training loop whose last-layer geometry
can be inspected exactly, not speed. The classifier head is either
learned like any other layer or frozen to a simplex ETF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .etf import EtfMetrics, build_simplex_etf, etf_deviation_metrics
from .mixup import BetaSpec, MixupSample, make_mixup_batch
from .theory import FeatureRecord

RELU = "relu"
TANH = "tanh"
ACTIVATIONS = (RELU, TANH)

CE_MIXUP = "ce_mixup"
MSE_MIXUP = "mse_mixup"
CE_BASELINE = "ce_baseline"
LOSS_KINDS = (CE_MIXUP, MSE_MIXUP, CE_BASELINE)

LEARNED = "learned"
FIXED_ETF = "fixed_etf"
CLASSIFIER_MODES = (LEARNED, FIXED_ETF)


@dataclass(frozen=True)
class SyntheticDataset:
    """Gaussian blobs: samples_per_class points around each class mean.

    Class means must be pairwise at least 4 * noise_scale apart, so the
    blobs are linearly separable with overwhelming probability.
    """

    num_classes: int
    input_dim: int
    class_means: np.ndarray  # C x D
    noise_scale: float
    samples_per_class: int
    seed: int

    def __post_init__(self):
        means = np.asarray(self.class_means, dtype=float)
        if means.shape != (self.num_classes, self.input_dim):
            raise ValueError(
                f"class means have shape {means.shape}, expected "
                f"({self.num_classes}, {self.input_dim})"
            )
        object.__setattr__(self, "class_means", means)
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale must be nonnegative, got {self.noise_scale}")
        if self.samples_per_class < 1:
            raise ValueError("need at least one sample per class")
        for a in range(self.num_classes):
            for b in range(a + 1, self.num_classes):
                dist = float(np.linalg.norm(means[a] - means[b]))
                if dist < 4.0 * self.noise_scale:
                    raise ValueError(
                        f"class means {a} and {b} are {dist:.3g} apart, "
                        f"below the separability floor {4.0 * self.noise_scale:.3g}"
                    )


def default_dataset_spec(seed: int = 0) -> SyntheticDataset:
    """Three well-separated blobs in the plane, 500 points each."""
    angles = 2.0 * np.pi * np.arange(3) / 3.0
    means = 4.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return SyntheticDataset(
        num_classes=3,
        input_dim=2,
        class_means=means,
        noise_scale=0.5,
        samples_per_class=500,
        seed=seed,
    )


def make_synthetic(spec: SyntheticDataset):
    """(inputs, hard labels) drawn deterministically from the spec."""
    rng = np.random.default_rng(spec.seed)
    n = spec.samples_per_class
    labels = np.repeat(np.arange(spec.num_classes), n)
    noise = rng.standard_normal((len(labels), spec.input_dim))
    inputs = spec.class_means[labels] + spec.noise_scale * noise
    return inputs, labels


@dataclass(frozen=True)
class TrainConfig:
    hidden_layers: int = 3
    width: int = 16
    activation: str = RELU
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-3
    mixup_alpha: float = 1.0  # 0 disables mixing
    loss_kind: str = CE_MIXUP
    classifier_mode: str = LEARNED
    etf_multiplier: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers < 1:
            raise ValueError("need at least one hidden layer")
        if self.width < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("width/batch_size must be positive, epochs nonnegative")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0 or self.mixup_alpha < 0:
            raise ValueError("weight_decay and mixup_alpha must be nonnegative")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if self.classifier_mode not in CLASSIFIER_MODES:
            raise ValueError(f"unknown classifier mode {self.classifier_mode!r}")
        if self.classifier_mode == FIXED_ETF and self.etf_multiplier == 0:
            raise ValueError("etf_multiplier must be nonzero in fixed_etf mode")


@dataclass
class EpochStats:
    loss: float
    accuracy: float
    classifier_metrics: EtfMetrics


@dataclass
class TrainedModel:
    config: TrainConfig
    input_dim: int
    num_classes: int
    weights: list  # hidden-layer matrices, each (width, fan_in)
    biases: list  # hidden-layer bias vectors
    clf_w: np.ndarray  # C x width
    clf_b: np.ndarray  # C
    history: list  # EpochStats per epoch


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == RELU else np.tanh(z)


def _act_deriv(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return (z > 0.0).astype(float)
    t = np.tanh(z)
    return 1.0 - t * t


def forward_pass(weights, biases, clf_w, clf_b, activation, x):
    """(pre-activations, post-activations, logits) for a batch x."""
    pre = []
    post = []
    a = np.asarray(x, dtype=float)
    for w, b in zip(weights, biases):
        z = a @ w.T + b
        pre.append(z)
        a = _act(z, activation)
        post.append(a)
    logits = a @ clf_w.T + clf_b
    return pre, post, logits


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_and_grads(weights, biases, clf_w, clf_b, activation, x, targets, loss_kind):
    """Batch loss and gradients for every parameter, by backpropagation.

    CE losses score log-softmax of the logits against the (possibly
    soft) targets; the MSE loss scores the raw logits against the soft
    label vector. Decay terms are applied by the update rule, not here.
    """
    x = np.asarray(x, dtype=float)
    targets = np.asarray(targets, dtype=float)
    pre, post, logits = forward_pass(weights, biases, clf_w, clf_b, activation, x)
    n = len(x)
    if loss_kind in (CE_MIXUP, CE_BASELINE):
        logp = _log_softmax_rows(logits)
        loss = float(-(targets * logp).sum() / n)
        dlogits = (np.exp(logp) - targets) / n
    else:
        diff = logits - targets
        loss = float((diff * diff).sum() / n)
        dlogits = 2.0 * diff / n
    d_clf_w = dlogits.T @ post[-1]
    d_clf_b = dlogits.sum(axis=0)
    d_weights = [None] * len(weights)
    d_biases = [None] * len(weights)
    delta = dlogits @ clf_w
    for layer in reversed(range(len(weights))):
        delta = delta * _act_deriv(pre[layer], activation)
        below = post[layer - 1] if layer > 0 else x
        d_weights[layer] = delta.T @ below
        d_biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer]
    return loss, d_weights, d_biases, d_clf_w, d_clf_b


def _init_matrix(rng, out_dim, in_dim):
    bound = 1.0 / math.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim))


def train(dataset, cfg: TrainConfig) -> TrainedModel:
    """Minibatch SGD with momentum and weight decay.

    dataset is the (inputs, hard labels) pair from make_synthetic. With
    mixup_alpha > 0 and a mixup loss kind, every step draws a fresh
    mixed batch; otherwise plain shuffled minibatches with one-hot
    targets are used. fixed_etf mode freezes the classifier at the
    constructed ETF with zero bias.
    """
    inputs, labels = dataset
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n, input_dim = inputs.shape
    num_classes = int(labels.max()) + 1
    rng = np.random.default_rng(cfg.seed)

    weights = []
    biases = []
    fan_in = input_dim
    for _ in range(cfg.hidden_layers):
        weights.append(_init_matrix(rng, cfg.width, fan_in))
        biases.append(np.zeros(cfg.width))
        fan_in = cfg.width
    if cfg.classifier_mode == FIXED_ETF:
        frame = build_simplex_etf(num_classes, cfg.width, cfg.etf_multiplier, cfg.seed)
        clf_w = frame.rows.copy()
        clf_b = np.zeros(num_classes)
    else:
        clf_w = _init_matrix(rng, num_classes, cfg.width)
        clf_b = np.zeros(num_classes)

    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    vel_cw = np.zeros_like(clf_w)
    vel_cb = np.zeros_like(clf_b)

    eye = np.eye(num_classes)
    spec = BetaSpec(cfg.mixup_alpha) if cfg.mixup_alpha > 0 else None
    use_mixup = spec is not None and cfg.loss_kind != CE_BASELINE
    steps = max(1, math.ceil(n / cfg.batch_size))
    history = []
    model = TrainedModel(
        config=cfg,
        input_dim=input_dim,
        num_classes=num_classes,
        weights=weights,
        biases=biases,
        clf_w=clf_w,
        clf_b=clf_b,
        history=history,
    )

    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        if not use_mixup:
            order = rng.permutation(n)
        for step in range(steps):
            if use_mixup:
                batch = make_mixup_batch(
                    inputs, labels, spec, cfg.batch_size, rng, num_classes
                )
                xb = np.stack([s.x for s in batch])
                tb = np.stack([s.y for s in batch])
            else:
                idx = order[step * cfg.batch_size : (step + 1) * cfg.batch_size]
                if len(idx) == 0:
                    continue
                xb = inputs[idx]
                tb = eye[labels[idx]]
            loss, dw, db, dcw, dcb = loss_and_grads(
                weights, biases, clf_w, clf_b, cfg.activation, xb, tb, cfg.loss_kind
            )
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            epoch_loss += loss
            for layer in range(len(weights)):
                g = dw[layer] + cfg.weight_decay * weights[layer]
                vel_w[layer] = cfg.momentum * vel_w[layer] + g
                weights[layer] -= cfg.learning_rate * vel_w[layer]
                vel_b[layer] = cfg.momentum * vel_b[layer] + db[layer]
                biases[layer] -= cfg.learning_rate * vel_b[layer]
            if cfg.classifier_mode == LEARNED:
                g = dcw + cfg.weight_decay * clf_w
                vel_cw = cfg.momentum * vel_cw + g
                clf_w -= cfg.learning_rate * vel_cw
                vel_cb = cfg.momentum * vel_cb + dcb
                clf_b -= cfg.learning_rate * vel_cb
        model.clf_w, model.clf_b = clf_w, clf_b
        history.append(
            EpochStats(
                loss=epoch_loss / steps,
                accuracy=accuracy(model, inputs, labels),
                classifier_metrics=etf_deviation_metrics(clf_w),
            )
        )
    model.clf_w, model.clf_b = clf_w, clf_b
    return model


def predict_logits(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    _, _, logits = forward_pass(
        model.weights,
        model.biases,
        model.clf_w,
        model.clf_b,
        model.config.activation,
        x,
    )
    return logits


def predict_probs(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax_rows(predict_logits(model, x)))


def accuracy(model: TrainedModel, x: np.ndarray, labels: np.ndarray) -> float:
    pred = predict_logits(model, x).argmax(axis=1)
    return float((pred == np.asarray(labels)).mean())


def _source_classes(sample: MixupSample) -> tuple[int, int]:
    """Recover (i, ip) from the soft label: class i carries weight lam.

    A one-hot label (lam at the boundary, or a same-class pair) maps
    both slots to the single nonzero class.
    """
    nz = np.flatnonzero(sample.y > 0.0)
    if len(nz) == 1:
        return int(nz[0]), int(nz[0])
    a, b = int(nz[0]), int(nz[1])
    if abs(sample.y[a] - sample.lam) <= abs(sample.y[b] - sample.lam):
        return a, b
    return b, a


def extract_activations(model: TrainedModel, samples) -> list[FeatureRecord]:
    """Penultimate post-activation vector of each mixed sample, tagged
    with its source classes, lambda, and kind; order preserved."""
    out = []
    for sample in samples:
        _, post, _ = forward_pass(
            model.weights,
            model.biases,
            model.clf_w,
            model.clf_b,
            model.config.activation,
            sample.x[None, :],
        )
        i, ip = _source_classes(sample)
        out.append(
            FeatureRecord(
                class_i=i,
                class_ip=ip,
                lam=sample.lam,
                h=post[-1][0].copy(),
                kind=sample.kind,
                amplified=False,
            )
        )
    return out


def layer_trajectory(model: TrainedModel, sample: MixupSample) -> list:
    """Post-activation hidden vector at every depth for one input; all
    entries share the hidden width, so one projection operator serves
    the whole trajectory."""
    _, post, _ = forward_pass(
        model.weights,
        model.biases,
        model.clf_w,
        model.clf_b,
        model.config.activation,
        np.asarray(sample.x, dtype=float)[None, :],
    )
    return [layer[0].copy() for layer in post]


def model_to_json(model: TrainedModel) -> str:
    cfg = model.config
    return json.dumps(
        {
            "config": {
                "hidden_layers": cfg.hidden_layers,
                "width": cfg.width,
                "activation": cfg.activation,
                "epochs": cfg.epochs,
                "batch_size": cfg.batch_size,
                "learning_rate": cfg.learning_rate,
                "momentum": cfg.momentum,
                "weight_decay": cfg.weight_decay,
                "mixup_alpha": cfg.mixup_alpha,
                "loss_kind": cfg.loss_kind,
                "classifier_mode": cfg.classifier_mode,
                "etf_multiplier": cfg.etf_multiplier,
                "seed": cfg.seed,
            },
            "input_dim": model.input_dim,
            "num_classes": model.num_classes,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "clf_w": model.clf_w.tolist(),
            "clf_b": model.clf_b.tolist(),
            "history": [
                {
                    "loss": s.loss,
                    "accuracy": s.accuracy,
                    "norm_cv": s.classifier_metrics.norm_cv,
                    "cosine_std": s.classifier_metrics.cosine_std,
                }
                for s in model.history
            ],
        },
        indent=2,
    )


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    cfg = TrainConfig(**doc["config"])
    return TrainedModel(
        config=cfg,
        input_dim=int(doc["input_dim"]),
        num_classes=int(doc["num_classes"]),
        weights=[np.array(w) for w in doc["weights"]],
        biases=[np.array(b) for b in doc["biases"]],
        clf_w=np.array(doc["clf_w"]),
        clf_b=np.array(doc["clf_b"]),
        history=[
            EpochStats(
                loss=s["loss"],
                accuracy=s["accuracy"],
                classifier_metrics=EtfMetrics(s["norm_cv"], s["cosine_std"]),
            )
            for s in doc["history"]
        ],
    )


def dataset_to_csv(inputs: np.ndarray, labels: np.ndarray) -> str:
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    header = "label," + ",".join(f"x_{j}" for j in range(inputs.shape[1]))
    lines = [header]
    for y, row in zip(labels, inputs):
        lines.append(f"{y}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str):
    lines = text.strip().split("\n")
    if not lines or not lines[0].startswith("label,"):
        raise ValueError("line 1: expected dataset header 'label,x_0,...'")
    xs = []
    ys = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        try:
            ys.append(int(parts[0]))
            xs.append([float(v) for v in parts[1:]])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: bad dataset row: {exc}")
    if not xs:
        raise ValueError("empty dataset file")
    if len({len(r) for r in xs}) != 1:
        raise ValueError("ragged dataset rows")
    return np.array(xs), np.array(ys, dtype=int)
