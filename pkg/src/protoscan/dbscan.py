"""Density-based flat clustering over a range-query index.

A point whose closed eps-ball (itself included) holds at least ``min_pts``
covered points is a *core*; clusters are the transitive closure of core
adjacency, non-core points inside a core's ball are *borders* (first
expansion wins), everything else is *noise* (label ``-1``).

The expansion engine is factored over a ``neighbors(pid)`` callable so the
same pass can run against a live index (issuing counted range queries) or
against an already-complete neighbourhood cache without touching the index.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .dataset import Dataset, InputError, NeighborIndex, QueryCounter


class PointStatus(IntEnum):
    UNKNOWN = 0
    CORE = 1
    BORDER = 2
    NOISE = 3


_STATUS_NAMES = {
    int(PointStatus.UNKNOWN): "unknown",
    int(PointStatus.CORE): "core",
    int(PointStatus.BORDER): "border",
    int(PointStatus.NOISE): "noise",
}


@dataclass(frozen=True)
class ClusterPartition:
    """Flat clustering result: per-point labels and core/border/noise states."""

    labels: np.ndarray
    status: np.ndarray
    n_clusters: int
    n_noise: int

    @classmethod
    def from_arrays(cls, labels: np.ndarray, status: np.ndarray) -> "ClusterPartition":
        pos = labels[labels >= 0]
        return cls(
            labels=labels,
            status=status,
            n_clusters=int(np.unique(pos).size),
            n_noise=int(np.count_nonzero(labels < 0)),
        )


@dataclass(frozen=True)
class DbscanResult:
    partition: ClusterPartition
    cache: dict[int, list[int]]
    n_queries: int


def _expand(p: int, cid: int, neighbors, min_count: int,
            labels: np.ndarray, status: np.ndarray) -> bool:
    """Try to grow cluster ``cid`` from ``p``; returns False if ``p`` is not core.

    ``neighbors(pid)`` must include ``pid`` itself. It is invoked at most once
    per point across a whole clustering pass: each point enters the seed list
    at most once, and failed expansions leave the (already queried) point in
    the noise state where later expansions may claim it as border without a
    fresh query.
    """
    n_p = neighbors(p)
    if len(n_p) < min_count:
        status[p] = PointStatus.NOISE
        return False
    status[p] = PointStatus.CORE
    labels[p] = cid
    seeds: deque[int] = deque()
    claimed = {p}

    def absorb(hood):
        for t in hood:
            st = status[t]
            if st == PointStatus.UNKNOWN:
                if t not in claimed:
                    labels[t] = cid
                    claimed.add(t)
                    seeds.append(t)
            elif st == PointStatus.NOISE:
                # previously failed expansion: claim as border, reuse its query
                labels[t] = cid
                status[t] = PointStatus.BORDER

    absorb(n_p)
    while seeds:
        q = seeds.popleft()
        n_q = neighbors(q)
        if len(n_q) >= min_count:
            status[q] = PointStatus.CORE
            absorb(n_q)
        else:
            status[q] = PointStatus.BORDER
    return True


def _cluster_pass(order, neighbors, min_count: int, labels: np.ndarray,
                  status: np.ndarray, start_id: int = 0) -> int:
    """Run expansions over ``order`` (ascending ids for determinism)."""
    next_id = start_id
    for p in order:
        if status[p] != PointStatus.UNKNOWN:
            continue
        if _expand(int(p), next_id, neighbors, min_count, labels, status):
            next_id += 1
    return next_id


def dbscan(data, eps: float, min_pts: int,
           counter: QueryCounter | None = None) -> DbscanResult:
    """Cluster a full dataset; exposes the per-point neighbourhood cache.

    Exactly one range query is issued per point, so ``n_queries == n`` — the
    baseline the incremental driver's query savings are measured against.
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise InputError(f"min_pts must be >= 1, got {min_pts}")
    n = points.shape[0]
    counter = counter if counter is not None else QueryCounter()
    index = NeighborIndex(points, np.arange(n), cell=eps, counter=counter)
    cache: dict[int, list[int]] = {}

    def neighbors(pid: int) -> list[int]:
        hood = index.query(pid, eps).tolist()
        cache[pid] = hood
        return hood

    labels = np.full(n, -1, dtype=np.int64)
    status = np.zeros(n, dtype=np.uint8)
    _cluster_pass(range(n), neighbors, min_pts, labels, status)
    return DbscanResult(
        partition=ClusterPartition.from_arrays(labels, status),
        cache=cache,
        n_queries=counter.value,
    )


def cluster_from_cache(member_ids, cache: dict[int, list[int]], min_count: int,
                       n_total: int) -> ClusterPartition:
    """Re-run the clustering pass purely from cached neighbourhoods.

    Every member's cache entry must already be its complete neighbourhood
    with respect to the member set; no range queries are issued. Non-member
    rows keep label ``-1`` / status ``unknown``.
    """
    member_ids = sorted(int(i) for i in member_ids)
    labels = np.full(n_total, -1, dtype=np.int64)
    status = np.zeros(n_total, dtype=np.uint8)
    _cluster_pass(member_ids, lambda pid: sorted(cache[pid]), min_count, labels, status)
    return ClusterPartition.from_arrays(labels, status)


def save_labels_csv(labels: np.ndarray, status: np.ndarray, path) -> None:
    """Write ``point_id,label,status`` rows for a clustering result."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_id", "label", "status"])
        for i, (lab, st) in enumerate(zip(labels, status)):
            w.writerow([i, int(lab), _STATUS_NAMES[int(st)]])
