"""Pairwise co-membership instability and test-set sizing.

The driver decides convergence by labeling a held-out test block with the
current representatives each iteration and measuring how many point *pairs*
changed co-membership since the previous iteration. The test block is sized
so that pairwise disagreement statistics are informative for the current
cluster count without the quadratic pair cost blowing up on large inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import InputError
from .util import round_half_up

# effective-size ceilings for the test-size root: beyond these, a larger
# test set stops buying statistical power and only costs labeling time
N_EFFECTIVE_CAP = 50_000
K_EFFECTIVE_CAP = 50


def _same_pair_count(labels: np.ndarray) -> int:
    _, counts = np.unique(labels, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def instability(omega: np.ndarray, omega_prime: np.ndarray) -> float:
    """Fraction of point pairs whose co-membership flipped between labelings.

    Both labelings cover the same points in the same order. A pair counts as
    a disagreement when it shares a label in exactly one of the two labelings;
    ``-1`` (unassigned) behaves as an ordinary block, so two points that are
    both unassigned "agree". Result is in ``[0, 1]``; identical labelings give
    exactly ``0.0`` and the measure is invariant to relabeling either side.
    """
    w = np.asarray(omega).ravel()
    v = np.asarray(omega_prime).ravel()
    if w.shape != v.shape:
        raise InputError(f"labelings differ in length: {w.shape} vs {v.shape}")
    m = w.shape[0]
    if m < 2:
        raise InputError(f"need at least 2 labeled points, got {m}")
    total = m * (m - 1) // 2
    _, iw = np.unique(w, return_inverse=True)
    uniq_v, iv = np.unique(v, return_inverse=True)
    same_w = _same_pair_count(iw)
    same_v = _same_pair_count(iv)
    same_both = _same_pair_count(iw * (uniq_v.size + 1) + iv)
    return (same_w + same_v - 2 * same_both) / total


def _positive_root(n_eff: float, k_eff: float) -> float:
    """Positive root of ``n*t**2 - t - k = 0`` with a Newton polish."""
    t = (1.0 + math.sqrt(1.0 + 4.0 * k_eff * n_eff)) / (2.0 * n_eff)
    deriv = 2.0 * n_eff * t - 1.0
    if deriv != 0.0:
        t -= (n_eff * t * t - t - k_eff) / deriv
    return t


def compute_test_size(n_clusters: int, n: int) -> int:
    """Test-block size for ``n`` points currently forming ``n_clusters`` groups.

    Solves for the fraction ``t`` at which the expected number of
    same-cluster test pairs matches the cluster count, with ``n`` capped at
    50,000 and ``n_clusters`` clamped to ``[1, 50]``. The returned absolute
    size is at least 2 (a single point has no pairs to compare).
    """
    if n < 2:
        raise InputError(f"need at least 2 points, got {n}")
    n_eff = float(min(n, N_EFFECTIVE_CAP))
    k_eff = float(min(max(n_clusters, 1), K_EFFECTIVE_CAP))
    alpha = round_half_up(n_eff * _positive_root(n_eff, k_eff))
    return max(2, min(alpha, n))


@dataclass(frozen=True)
class StabilityReport:
    """One driver iteration's convergence diagnostics."""

    iteration: int = 0
    delta: float | None = None
    eta: int = 0
    n_clusters: int = 0
    n_noise: int = 0
    alpha: int = 0
    n_members: int = 0
    n_queries: int = 0
    silhouette: float | None = None
    forced_reset: bool = False
    omega: np.ndarray | None = field(default=None, repr=False)
    omega_prime: np.ndarray | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        """JSON-serializable view (labelings included as plain lists)."""
        rec = {
            "iteration": self.iteration,
            "delta": self.delta,
            "eta": self.eta,
            "n_clusters": self.n_clusters,
            "n_noise": self.n_noise,
            "alpha": self.alpha,
            "n_members": self.n_members,
            "n_queries": self.n_queries,
            "silhouette": self.silhouette,
            "forced_reset": self.forced_reset,
        }
        if self.omega is not None:
            rec["omega"] = np.asarray(self.omega).tolist()
        if self.omega_prime is not None:
            rec["omega_prime"] = np.asarray(self.omega_prime).tolist()
        return rec


def stability_step(points: np.ndarray, test_ids: np.ndarray, reps_prev, reps_curr,
                   **context) -> StabilityReport:
    """Label the test block under two representative sets and compare.

    Fewer than two test points cannot form a pair, so the step reports
    ``delta = 1.0`` — "not yet shown stable" — which keeps the driver
    iterating instead of terminating on vacuous agreement. Extra keyword
    context (iteration, eta, counts, ...) is passed through to the report.
    """
    from .representatives import label_points

    block = np.asarray(points)[np.asarray(test_ids, dtype=np.int64)]
    omega = label_points(block, reps_prev)
    omega_prime = label_points(block, reps_curr)
    delta = 1.0 if omega.shape[0] < 2 else instability(omega, omega_prime)
    return StabilityReport(delta=delta, omega=omega, omega_prime=omega_prime, **context)
