"""Two-layer trainable classifier on top of the reservoir output.

S_h (length P+1, S_h[0] = 1) -> sigmoid hidden layer of H units, extended
with a constant unit -> softmax over M classes.  Trained with per-example
SGD on cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels

__all__ = [
    "HeadWeights",
    "TrainConfig",
    "TrainingDivergedError",
    "init_weights",
    "forward",
    "forward_batch",
    "predict_batch",
    "example_loss",
    "gradients",
    "fit",
    "gradient_check",
]


class TrainingDivergedError(FloatingPointError):
    """Loss became non-finite during training; a lower learning rate usually helps."""


@dataclass
class HeadWeights:
    W1: np.ndarray  # (P+1, H)
    W2: np.ndarray  # (H+1, M)

    def __post_init__(self):
        self.W1 = np.ascontiguousarray(self.W1, dtype=np.float64)
        self.W2 = np.ascontiguousarray(self.W2, dtype=np.float64)
        if self.W1.ndim != 2 or self.W2.ndim != 2 or self.W2.shape[0] != self.W1.shape[1] + 1:
            raise ValueError(f"incompatible head shapes {self.W1.shape} and {self.W2.shape}")

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]

    def copy(self) -> "HeadWeights":
        return HeadWeights(self.W1.copy(), self.W2.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.W1).all() and np.isfinite(self.W2).all())


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 0.05
    rng_seed: int = 0
    shuffle: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")

    def with_epochs(self, epochs: int) -> "TrainConfig":
        return replace(self, epochs=epochs)


def init_weights(n_inputs: int, n_hidden: int, n_classes: int, seed: int) -> HeadWeights:
    """Uniform [-0.5, 0.5] initialization from a seeded generator."""
    rng = np.random.default_rng(seed)
    W1 = rng.uniform(-0.5, 0.5, size=(n_inputs, n_hidden))
    W2 = rng.uniform(-0.5, 0.5, size=(n_hidden + 1, n_classes))
    return HeadWeights(W1, W2)


def forward_batch(S_h, w: HeadWeights) -> np.ndarray:
    S_h = np.atleast_2d(np.asarray(S_h, dtype=np.float64))
    if S_h.shape[1] != w.n_inputs:
        raise ValueError(f"expected inputs of width {w.n_inputs}, got {S_h.shape[1]}")
    return kernels.forward_batch(w.W1, w.W2, S_h)


def predict_batch(S_h, w: HeadWeights) -> np.ndarray:
    # argmax returns the first maximum, i.e. lowest-index tie-break
    return np.argmax(forward_batch(S_h, w), axis=1)


def forward(S_h, w: HeadWeights) -> tuple[np.ndarray, int]:
    """Scores and predicted class for one reservoir output vector."""
    probs = forward_batch(np.asarray(S_h, dtype=np.float64)[None, :], w)[0]
    return probs, int(np.argmax(probs))


def _sigmoid(a):
    return 1.0 / (1.0 + np.exp(-a))


def example_loss(w: HeadWeights, s, label: int) -> float:
    s = np.asarray(s, dtype=np.float64)
    h = np.concatenate(([1.0], _sigmoid(s @ w.W1)))
    z = h @ w.W2
    zmax = z.max()
    return float(np.log(np.exp(z - zmax).sum()) + zmax - z[label])


def gradients(w: HeadWeights, s, label: int) -> tuple[np.ndarray, np.ndarray]:
    """Analytic cross-entropy gradients for one example: (dW1, dW2)."""
    s = np.asarray(s, dtype=np.float64)
    hidden = _sigmoid(s @ w.W1)
    h = np.concatenate(([1.0], hidden))
    z = h @ w.W2
    p = np.exp(z - z.max())
    p /= p.sum()
    dz = p.copy()
    dz[label] -= 1.0
    dW2 = np.outer(h, dz)
    da = (w.W2[1:] @ dz) * hidden * (1.0 - hidden)
    dW1 = np.outer(s, da)
    return dW1, dW2


def fit(S_h, labels, n_hidden: int, n_classes: int, cfg: TrainConfig,
        init_seed: int | None = None, weights: HeadWeights | None = None,
        loss_history: list | None = None) -> HeadWeights:
    """Train the head on rows of S_h in the given order.

    Rows are visited in sequence each epoch unless ``cfg.shuffle`` is set.
    ``loss_history`` (if given) receives the mean loss of every epoch.
    """
    X = np.ascontiguousarray(S_h, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise ValueError("training set must be non-empty with one label per row")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    seed = cfg.rng_seed if init_seed is None else init_seed
    w = init_weights(X.shape[1], n_hidden, n_classes, seed) if weights is None else weights.copy()
    rng = np.random.default_rng(seed + 1)
    for _ in range(cfg.epochs):
        if cfg.shuffle:
            order = rng.permutation(X.shape[0])
            loss = kernels.sgd_epoch(w.W1, w.W2, X[order], y[order], cfg.learning_rate)
        else:
            loss = kernels.sgd_epoch(w.W1, w.W2, X, y, cfg.learning_rate)
        if not np.isfinite(loss) or not w.is_finite():
            raise TrainingDivergedError(
                f"training loss became non-finite (learning rate {cfg.learning_rate}); "
                "try a lower learning rate")
        if loss_history is not None:
            loss_history.append(loss / X.shape[0])
    return w


def gradient_check(w: HeadWeights, s, label: int, eps: float = 1e-5) -> float:
    """Largest relative deviation between analytic and central-difference gradients."""
    dW1, dW2 = gradients(w, s, label)
    worst = 0.0
    probe = w.copy()
    for analytic, target in ((dW1, probe.W1), (dW2, probe.W2)):
        for idx in np.ndindex(target.shape):
            orig = target[idx]
            target[idx] = orig + eps
            up = example_loss(probe, s, label)
            target[idx] = orig - eps
            down = example_loss(probe, s, label)
            target[idx] = orig
            numeric = (up - down) / (2 * eps)
            denom = max(abs(numeric), abs(analytic[idx]), 1e-8)
            worst = max(worst, abs(numeric - analytic[idx]) / denom)
    return worst
