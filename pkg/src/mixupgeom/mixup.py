"""Mixup coefficient sampling and pair mixing.

All randomness flows through an explicit numpy Generator passed by the
caller; there is no hidden global state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SAME_CLASS = "same_class"
DIFFERENT_CLASS = "different_class"


@dataclass(frozen=True)
class BetaSpec:
    """Symmetric Beta(alpha, alpha) mixing distribution; alpha=1 is
    uniform on [0, 1]."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass
class MixupSample:
    x: np.ndarray
    y: np.ndarray  # soft label, sums to 1
    lam: float
    src_i: int
    src_j: int
    kind: str  # SAME_CLASS or DIFFERENT_CLASS


def sample_lambda(spec: BetaSpec, rng: np.random.Generator) -> float:
    """One Beta(alpha, alpha) draw via the two-Gamma ratio."""
    g1 = rng.gamma(spec.alpha)
    g2 = rng.gamma(spec.alpha)
    return float(g1 / (g1 + g2))


def mix_pair(x_i, y_i, x_j, y_j, lam: float) -> MixupSample:
    """Convex combination of two labelled points with coefficient lam."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    y_i = np.asarray(y_i, dtype=float)
    y_j = np.asarray(y_j, dtype=float)
    if x_i.shape != x_j.shape:
        raise ValueError(f"input shapes differ: {x_i.shape} vs {x_j.shape}")
    if y_i.shape != y_j.shape:
        raise ValueError(f"label shapes differ: {y_i.shape} vs {y_j.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    kind = SAME_CLASS if np.array_equal(y_i, y_j) else DIFFERENT_CLASS
    return MixupSample(
        x=lam * x_i + (1.0 - lam) * x_j,
        y=lam * y_i + (1.0 - lam) * y_j,
        lam=float(lam),
        src_i=-1,
        src_j=-1,
        kind=kind,
    )


def make_mixup_batch(
    inputs: np.ndarray,
    hard_labels: np.ndarray,
    spec: BetaSpec,
    batch_size: int,
    rng: np.random.Generator,
    num_classes: int | None = None,
) -> list[MixupSample]:
    """batch_size mixed samples from uniformly drawn ordered index pairs,
    one independent lambda per sample."""
    inputs = np.asarray(inputs, dtype=float)
    hard_labels = np.asarray(hard_labels)
    n = len(inputs)
    if n == 0:
        raise ValueError("empty dataset")
    if num_classes is None:
        num_classes = int(hard_labels.max()) + 1
    eye = np.eye(num_classes)
    out = []
    for _ in range(batch_size):
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        lam = sample_lambda(spec, rng)
        s = mix_pair(
            inputs[i], eye[hard_labels[i]], inputs[j], eye[hard_labels[j]], lam
        )
        s.src_i, s.src_j = i, j
        out.append(s)
    return out
