"""Statistics used by the security and capacity experiments."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..errors import DegenerateLabels, EmptySample

LATENT_CHANNELS = 4  # latent components per 64x64 pixel position


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def slot_fraction(tau: float) -> float:
    """P(|z| >= tau) for z ~ N(0, 1)."""
    return 2.0 * normal_sf(tau)


def expected_capacity_bpp(tau: float, rho: int) -> float:
    """Expected ciphertext bits per 64x64 pixel position."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    return LATENT_CHANNELS * slot_fraction(tau) / rho


class KsResult(NamedTuple):
    d: float
    p: float
    n1: int
    n2: int


def kolmogorov_q(lam: float) -> float:
    """Tail probability Q(lam) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        # The alternating series converges slowly here; use the theta-function
        # form of the same distribution, which converges in a few terms.
        s = 0.0
        for k in range(1, 50):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            s += term
            if term < 1e-16:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-12 * total:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks2(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov statistic with asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / n1
    cdf_b = np.searchsorted(b, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    ne = n1 * n2 / (n1 + n2)
    sq = math.sqrt(ne)
    p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
    return KsResult(d, p, n1, n2)


def histogram(x, bins: int = 10, lo: float = -3.0, hi: float = 3.0) -> np.ndarray:
    """Equal-width right-open bins over [lo, hi); out-of-range values land in the edge bins."""
    if bins < 1 or not lo < hi:
        raise ValueError("need bins >= 1 and lo < hi")
    x = np.asarray(x, dtype=np.float64).ravel()
    width = (hi - lo) / bins
    idx = np.clip(np.floor((x - lo) / width), 0, bins - 1).astype(np.int64)
    return np.bincount(idx, minlength=bins)


def qq_data(sample, reference, bins: int = 100, lo: float = -3.0, hi: float = 3.0) -> np.ndarray:
    """Rows of (reference proportion, sample proportion), one per bin."""
    s = np.asarray(sample).ravel()
    r = np.asarray(reference).ravel()
    if s.size == 0 or r.size == 0:
        raise EmptySample("qq_data needs non-empty inputs")
    return np.column_stack(
        [histogram(r, bins, lo, hi) / r.size, histogram(s, bins, lo, hi) / s.size]
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size, dtype=np.float64)
    # Tied runs share the mean of their 1-based positions.
    boundaries = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [values.size]])
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + e + 1)
    return ranks


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("auc needs both classes")
    ranks = _average_ranks(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_curve(scores, labels) -> np.ndarray:
    """(fpr, tpr) points from (0, 0) to (1, 1), one per distinct threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("roc_curve needs both classes")
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last_of_run = np.append(np.diff(s) != 0, True)
    fpr = np.concatenate([[0.0], fp[last_of_run] / n_neg])
    tpr = np.concatenate([[0.0], tp[last_of_run] / n_pos])
    return np.column_stack([fpr, tpr])
