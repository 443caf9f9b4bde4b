"""Cluster representatives: selection, 1-NN labeling, noise refinement.

Each cluster is summarized by a subset of its cores: those with unusually
*sparse* neighbourhoods relative to the cluster's densest core (ratio at or
below ``tau`` — these sit near the cluster's rim and pin down its extent)
plus every core attaining the maximum count itself. Points outside the
clustered subset are then labeled by their nearest representative, and a
spread-based cutoff can pull mislabeled noise back into the fold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import InputError
from .dbscan import PointStatus

# two-sided 99% normal quantile used for the refinement cutoff
_Z_995 = 2.5758293035489004

_LABEL_CHUNK = 2048


@dataclass(frozen=True)
class RepresentativeSet:
    """Representatives ordered by (cluster label, point id).

    ``rho`` holds each representative's cached neighbour count at selection
    time — kept for reports and for reasoning about the selection threshold.
    """

    ids: np.ndarray
    labels: np.ndarray
    coords: np.ndarray
    rho: np.ndarray
    tau: float

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i in range(len(self)):
                fh.write(json.dumps({
                    "point_id": int(self.ids[i]),
                    "cluster": int(self.labels[i]),
                    "coords": self.coords[i].tolist(),
                    "rho": int(self.rho[i]),
                    "tau": self.tau,
                }) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "RepresentativeSet":
        ids, labels, coords, rho, tau = [], [], [], [], 0.0
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                ids.append(rec["point_id"])
                labels.append(rec["cluster"])
                coords.append(rec["coords"])
                rho.append(rec.get("rho", 0))
                tau = rec.get("tau", tau)
        if not ids:
            raise InputError(f"{path}: no representatives found")
        return cls(
            ids=np.asarray(ids, dtype=np.int64),
            labels=np.asarray(labels, dtype=np.int64),
            coords=np.asarray(coords, dtype=np.float64),
            rho=np.asarray(rho, dtype=np.int64),
            tau=float(tau),
        )


def select_representatives(graph, tau: float) -> RepresentativeSet:
    """Pick each cluster's boundary-ish cores plus its densest ones.

    A core with cached count ``rho`` represents its cluster when
    ``rho / rho_max <= tau`` (rim cores) or ``rho == rho_max`` (peak cores),
    ``rho_max`` being the cluster's largest count. Growing ``tau`` only ever
    adds representatives. Result rows are sorted by (cluster, id) so that
    downstream nearest-neighbour ties resolve to the smallest cluster label,
    then the smallest point id.
    """
    if not 0.0 < tau <= 1.0:
        raise InputError(f"tau must be in (0, 1], got {tau}")
    core_ids = graph.ids_with_status(PointStatus.CORE)
    if core_ids.size == 0:
        return RepresentativeSet(
            ids=np.empty(0, dtype=np.int64),
            labels=np.empty(0, dtype=np.int64),
            coords=np.empty((0, graph.points.shape[1])),
            rho=np.empty(0, dtype=np.int64),
            tau=tau,
        )
    roots = graph.root_labels()[core_ids]
    rho = graph.ncount[core_ids]
    _, inv = np.unique(roots, return_inverse=True)
    rho_max = np.zeros(inv.max() + 1, dtype=np.int64)
    np.maximum.at(rho_max, inv, rho)
    peak = rho_max[inv]
    keep = (rho <= tau * peak) | (rho == peak)
    ids, labels, rho = core_ids[keep], roots[keep], rho[keep]
    order = np.lexsort((ids, labels))
    ids, labels, rho = ids[order], labels[order], rho[order]
    return RepresentativeSet(
        ids=ids, labels=labels, coords=graph.points[ids].copy(), rho=rho, tau=tau
    )


def label_points(points: np.ndarray, reps: RepresentativeSet,
                 return_distance: bool = False):
    """Assign each point its nearest representative's cluster.

    Distance ties resolve to the earliest representative row, i.e. the
    smallest cluster label and then the smallest point id. With no
    representatives at all, every point is unassigned (``-1``). Optionally
    also returns the nearest-representative distance per point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = points.shape[0]
    if len(reps) == 0:
        labels = np.full(m, -1, dtype=np.int64)
        dists = np.full(m, np.inf)
        return (labels, dists) if return_distance else labels
    if points.shape[1] != reps.coords.shape[1]:
        raise InputError(
            f"dimension mismatch: points d={points.shape[1]}, reps d={reps.coords.shape[1]}"
        )
    labels = np.empty(m, dtype=np.int64)
    dists = np.empty(m)
    for lo in range(0, m, _LABEL_CHUNK):
        hi = min(lo + _LABEL_CHUNK, m)
        block = cdist(points[lo:hi], reps.coords)
        nearest = block.argmin(axis=1)
        labels[lo:hi] = reps.labels[nearest]
        dists[lo:hi] = block[np.arange(hi - lo), nearest]
    return (labels, dists) if return_distance else labels


@dataclass(frozen=True)
class RefineReport:
    n_border: int
    n_noise_before: int
    n_noise_after: int
    n_reassigned: int
    upper_bound: float | None
    skipped: bool


def refine_noise(graph, reps: RepresentativeSet) -> RefineReport:
    """Reassign noise that sits closer to a representative than borders do.

    The border points' nearest-representative distances give a spread
    estimate; noise within ``mean + 2.5758 * std`` (a two-sided 99% normal
    band) of its nearest representative joins that representative's cluster
    as a border point. Pre-existing cores and borders are untouched and the
    noise count can only shrink. Skipped (no-op) when there are no borders,
    fewer than two of them, or no representatives.
    """
    border_ids = graph.ids_with_status(PointStatus.BORDER)
    noise_ids = graph.ids_with_status(PointStatus.NOISE)
    n_noise = int(noise_ids.size)
    if border_ids.size < 2 or len(reps) == 0 or n_noise == 0:
        return RefineReport(
            n_border=int(border_ids.size), n_noise_before=n_noise,
            n_noise_after=n_noise, n_reassigned=0, upper_bound=None, skipped=True,
        )
    _, border_dist = label_points(graph.points[border_ids], reps, return_distance=True)
    upper = float(border_dist.mean() + _Z_995 * border_dist.std(ddof=1))
    noise_label, noise_dist = label_points(graph.points[noise_ids], reps, return_distance=True)
    take = noise_dist < upper
    for pid, lab in zip(noise_ids[take], noise_label[take]):
        graph.labels[pid] = int(lab)
        graph.status[pid] = PointStatus.BORDER
    return RefineReport(
        n_border=int(border_ids.size),
        n_noise_before=n_noise,
        n_noise_after=n_noise - int(take.sum()),
        n_reassigned=int(take.sum()),
        upper_bound=upper,
        skipped=False,
    )
