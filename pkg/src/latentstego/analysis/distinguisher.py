"""Message-projection baseline and a histogram-feature distinguisher.

Projection overwrites latent components with 0 (bit 0) or +-sqrt(2) (bit 1).
Mean and variance match N(0, 1), but the shape does not, and a linear model
over coarse histogram counts picks that up immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..keyschedule import Drbg
from .stats import histogram

SQRT2 = math.sqrt(2.0)


def projection_embed(bits, k: int, rng: Drbg) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size > k:
        raise ValueError(f"{bits.size} bits do not fit in {k} components")
    n = bits.size
    signs = np.where(rng.words(n) & np.uint64(1), 1.0, -1.0)
    out = np.empty(k, dtype=np.float64)
    out[:n] = np.where(bits == 1, SQRT2 * signs, 0.0)
    if k > n:
        out[n:] = rng.gaussians(k - n)
    return out


def histogram_features(observations, bins: int = 10, lo: float = -3.0, hi: float = 3.0) -> np.ndarray:
    """One row of bin counts per latent set."""
    return np.stack([histogram(np.asarray(o), bins, lo, hi) for o in observations])


@dataclass
class LinearClassifier:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray

    def normalize(self, counts) -> np.ndarray:
        counts = np.atleast_2d(np.asarray(counts, dtype=np.float64))
        props = counts / counts.sum(axis=1, keepdims=True)
        return (props - self.mean) / self.scale

    def decision(self, counts) -> np.ndarray:
        return self.normalize(counts) @ self.weights + self.bias

    def predict_proba(self, counts) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision(counts)))

    def predict(self, counts) -> np.ndarray:
        return (self.decision(counts) >= 0.0).astype(np.uint8)


def train_distinguisher(pos, neg, epochs: int = 2000, lr: float = 0.5, l2: float = 1e-4) -> LinearClassifier:
    """Full-batch gradient descent on mean logistic loss, zero-initialised.

    Features are bin proportions standardised with the training-set mean and
    spread, so the learning rate does not depend on the latent count.
    """
    pos = np.atleast_2d(np.asarray(pos, dtype=np.float64))
    neg = np.atleast_2d(np.asarray(neg, dtype=np.float64))
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise ValueError("both classes need at least one sample")
    counts = np.vstack([pos, neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    props = counts / counts.sum(axis=1, keepdims=True)
    mean = props.mean(axis=0)
    scale = props.std(axis=0)
    scale[scale == 0] = 1.0
    X = (props - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    n = len(y)
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        err = p - y
        w -= lr * (X.T @ err / n + l2 * w)
        b -= lr * err.mean()
    return LinearClassifier(w, float(b), mean, scale)
