"""Clustering quality metrics.

NMI here follows the convention used throughout the benchmark tables:
positions the clustering marked as noise (predicted label ``-1``) are
dropped before computing mutual information, and the complementary
*validity ratio* (fraction of points not discarded as noise) is folded back
in through the harmonic ``omega_score``. Silhouette likewise scores only the
clustered points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import InputError

_CHUNK = 512


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred: np.ndarray, truth: np.ndarray) -> float:
    """Normalized mutual information over the non-noise predictions.

    Rows where ``pred == -1`` are dropped; the remaining partitions are
    compared with arithmetic-mean normalization ``2*I / (H_pred + H_truth)``.
    Two identical single-block partitions score 1.0; if noise removal leaves
    nothing, the score is 0.0.
    """
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise InputError(f"length mismatch: {pred.shape} vs {truth.shape}")
    keep = pred != -1
    if not np.any(keep):
        return 0.0
    p, t = pred[keep], truth[keep]
    table = _contingency(p, t)
    if table.shape == (1, 1):
        return 1.0
    total = table.sum()
    pi = table.sum(axis=1)
    pj = table.sum(axis=0)
    nz = table > 0
    outer = np.outer(pi, pj)[nz] / (total * total)
    joint = table[nz] / total
    info = float(np.sum(joint * np.log(joint / outer)))
    denom = 0.5 * (_entropy(pi) + _entropy(pj))
    if denom <= 0.0:
        return 0.0
    return float(np.clip(info / denom, 0.0, 1.0))


def validity_ratio(n_noise: int, n: int) -> float:
    """Fraction of the dataset that was actually clustered (not noise)."""
    if n < 1:
        raise InputError("n must be positive")
    if not 0 <= n_noise <= n:
        raise InputError(f"noise count {n_noise} out of range for n={n}")
    return 1.0 - n_noise / n

def omega_score(phi: float, nu: float) -> float:
    """Harmonic mean of clustering agreement and validity; 0 when both vanish."""
    if phi + nu <= 0.0:
        return 0.0
    return 2.0 * phi * nu / (phi + nu)


@dataclass(frozen=True)
class SilhouetteResult:
    score: float
    defined: bool


def silhouette(points: np.ndarray, labels: np.ndarray) -> SilhouetteResult:
    """Mean silhouette over clustered points (labels ``>= 0``).

    Needs at least two distinct clusters among the scored points; otherwise
    the value is undefined and ``defined=False`` is returned (score NaN).
    Singleton clusters contribute 0 for their lone member, and a 0/0
    separation ratio is scored as 0.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels).ravel()
    if points.shape[0] != labels.shape[0]:
        raise InputError("points/labels length mismatch")
    keep = labels >= 0
    pts = points[keep]
    uniq, inv = np.unique(labels[keep], return_inverse=True)
    if uniq.size < 2:
        return SilhouetteResult(score=float("nan"), defined=False)
    m, k = pts.shape[0], uniq.size
    onehot = np.zeros((m, k))
    onehot[np.arange(m), inv] = 1.0
    sizes = onehot.sum(axis=0)
    # per-point summed distance to each cluster, in row chunks
    sums = np.empty((m, k))
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        sums[lo:hi] = cdist(pts[lo:hi], pts) @ onehot
    own_size = sizes[inv]
    scores = np.zeros(m)
    multi = own_size > 1
    a = np.zeros(m)
    a[multi] = sums[np.arange(m), inv][multi] / (own_size[multi] - 1)
    mean_other = sums / sizes
    mean_other[np.arange(m), inv] = np.inf
    b = mean_other.min(axis=1)
    width = np.maximum(a, b)
    ok = multi & (width > 0)
    scores[ok] = (b[ok] - a[ok]) / width[ok]
    return SilhouetteResult(score=float(scores.mean()), defined=True)


@dataclass(frozen=True)
class EvalResult:
    nmi: float
    validity: float
    omega: float
    n_noise: int
    n_clusters: int

    def to_dict(self) -> dict:
        return {
            "nmi": self.nmi,
            "validity": self.validity,
            "omega": self.omega,
            "n_noise": self.n_noise,
            "n_clusters": self.n_clusters,
        }


def evaluate(pred: np.ndarray, truth: np.ndarray) -> EvalResult:
    """Bundle NMI / validity / omega for a predicted labeling vs ground truth."""
    pred = np.asarray(pred).ravel()
    phi = nmi(pred, truth)
    n_noise = int(np.count_nonzero(pred == -1))
    nu = validity_ratio(n_noise, pred.shape[0])
    pos = pred[pred >= 0]
    return EvalResult(
        nmi=phi,
        validity=nu,
        omega=omega_score(phi, nu),
        n_noise=n_noise,
        n_clusters=int(np.unique(pos).size),
    )
