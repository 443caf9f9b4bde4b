"""Data-driven (eps, min_pts) candidate grid and k-distance diagnostics.

The radius scale comes from pooling every sampled point's 3rd and 4th
nearest-neighbour distances: their mean plus 1–3 standard deviations gives
three candidate radii. For each radius, the sampled points' neighbour
counts (self included) yield a mean and spread from which candidate
``min_pts`` values are read off at 0–3 standard deviations below the mean.
No single winner is picked here — callers choose a cell of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Dataset, InputError, InsufficientDataError
from .util import round_half_up

DEFAULT_SAMPLE = 500
# beyond this many rows, statistics run on a uniform subsample of this size
SUBSAMPLE_THRESHOLD = 10_000_000
SUBSAMPLE_SIZE = 1_000_000

_EPS_SIGMAS = (1, 2, 3)
_MINPTS_SIGMAS = (0, 1, 2, 3)


@dataclass(frozen=True)
class ParamCandidate:
    eps: float
    min_pts: int
    c_eps: int
    c_min_pts: int


@dataclass(frozen=True)
class ParamGrid:
    """Candidate (eps, min_pts) pairs plus the statistics they came from."""

    mu_eps: float
    sigma_eps: float
    candidates: tuple[ParamCandidate, ...]
    sample_size: int

    def at(self, c_eps: int, c_min_pts: int) -> ParamCandidate:
        for cand in self.candidates:
            if cand.c_eps == c_eps and cand.c_min_pts == c_min_pts:
                return cand
        raise InputError(
            f"no candidate at c_eps={c_eps}, c_min_pts={c_min_pts} "
            f"(deduplication may have removed it; available: "
            f"{[(c.c_eps, c.c_min_pts) for c in self.candidates]})"
        )

    def to_dict(self) -> dict:
        return {
            "mu_eps": self.mu_eps,
            "sigma_eps": self.sigma_eps,
            "sample_size": self.sample_size,
            "candidates": [
                {"eps": c.eps, "min_pts": c.min_pts,
                 "c_eps": c.c_eps, "c_min_pts": c.c_min_pts}
                for c in self.candidates
            ],
        }


def _as_points(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.points
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim != 2:
        raise InputError("expected an (n, d) point array")
    return pts


def estimate_params(data, sample_size: int = DEFAULT_SAMPLE, seed=None,
                    ids=None, subsample_threshold: int = SUBSAMPLE_THRESHOLD,
                    subsample_size: int = SUBSAMPLE_SIZE) -> ParamGrid:
    """Build the candidate grid from nearest-neighbour statistics.

    ``ids`` overrides the random choice of sampled rows (useful for exact
    reproduction); otherwise ``min(sample_size, n)`` rows are drawn without
    replacement. Rows beyond ``subsample_threshold`` are first thinned to a
    uniform ``subsample_size``-row pool that both the sample and the
    neighbour searches run against.
    """
    points = _as_points(data)
    n = points.shape[0]
    if n < 5:
        raise InsufficientDataError(
            f"need at least 5 points for 3rd/4th neighbour statistics, got {n}"
        )
    rng = np.random.default_rng(seed)
    if n > subsample_threshold:
        pool_ids = np.sort(rng.choice(n, size=min(subsample_size, n), replace=False))
        points = points[pool_ids]
        n = points.shape[0]
    m = min(sample_size, n)
    if ids is None:
        sample = np.sort(rng.choice(n, size=m, replace=False))
    else:
        sample = np.sort(np.asarray(ids, dtype=np.int64))
        if sample.size == 0 or np.any(sample < 0) or np.any(sample >= n):
            raise InputError("explicit sample ids out of range")
        m = sample.size
    tree = cKDTree(points)
    # columns 0..4 are self, 1st..4th nearest neighbours
    dist, _ = tree.query(points[sample], k=5)
    pooled = np.concatenate([dist[:, 3], dist[:, 4]])
    mu_eps = float(pooled.mean())
    sigma_eps = float(pooled.std())
    cands: list[ParamCandidate] = []
    for c_eps in _EPS_SIGMAS:
        eps = mu_eps + c_eps * sigma_eps
        if eps <= 0:
            continue
        counts = np.asarray(
            [len(hits) for hits in tree.query_ball_point(points[sample], r=eps)],
            dtype=np.int64,
        )
        mu_m = float(counts.mean())
        sigma_m = float(counts.std())
        seen: set[int] = set()
        for c_m in _MINPTS_SIGMAS:
            min_pts = max(2, round_half_up(mu_m - c_m * sigma_m))
            if min_pts in seen:
                continue
            seen.add(min_pts)
            cands.append(ParamCandidate(eps=eps, min_pts=min_pts,
                                        c_eps=c_eps, c_min_pts=c_m))
    return ParamGrid(mu_eps=mu_eps, sigma_eps=sigma_eps,
                     candidates=tuple(cands), sample_size=m)


def k_dist_curve(data, k: int) -> np.ndarray:
    """Every point's distance to its k-th nearest other point, descending.

    The standard elbow diagnostic: plot it and look for the knee. ``k`` must
    leave at least one neighbour, i.e. ``k <= n - 1``.
    """
    points = _as_points(data)
    n = points.shape[0]
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if k > n - 1:
        raise InputError(f"k={k} needs at least {k + 1} points, got {n}")
    tree = cKDTree(points)
    dist, _ = tree.query(points, k=k + 1)
    return np.sort(dist[:, k])[::-1].copy()
