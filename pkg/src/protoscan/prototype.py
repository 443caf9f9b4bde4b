"""Incrementally grown, clustered subset of a dataset (the "prototype").

The prototype starts as a random sample clustered at a reduced density
threshold ``eta``, then absorbs random batches of the remaining points.
Every absorbed point is range-queried exactly once; results are cached and
mirrored into the caches of earlier members, so at every iteration boundary
each member's cached neighbourhood is complete with respect to the member
set. All later status revisions (threshold raises, promotions when a cached
ball fills up, cluster merges) work purely off those caches — no point is
ever queried twice.

Cluster ids are only ever *merged*, never split, via a min-root union-find;
splitting only becomes possible once the full dataset is absorbed, at which
point the complete caches allow an exact re-clustering pass for free.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, InputError, NeighborIndex, QueryCounter
from .dbscan import ClusterPartition, PointStatus, _cluster_pass, cluster_from_cache
from .util import resolve_count, round_half_up

# default share of members sampled when re-estimating eta, and the floor
# below which the whole membership is used instead
ETA_SAMPLE_FRAC = 0.1
ETA_MIN_SAMPLE = 30


class UnionFind:
    """Union-find over cluster ids where the smallest id always wins."""

    def __init__(self):
        self._parent: dict[int, int] = {}

    def add(self, k: int) -> None:
        self._parent.setdefault(k, k)

    def find(self, k: int) -> int:
        parent = self._parent
        root = k
        while parent[root] != root:
            root = parent[root]
        while parent[k] != root:
            parent[k], k = root, parent[k]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        lo, hi = (ra, rb) if ra < rb else (rb, ra)
        self._parent[hi] = lo
        return lo

    def discard(self, k: int) -> None:
        """Drop a freed id. Safe only while nothing points at it — unions
        always direct larger roots at smaller ones, so the largest id can
        be discarded right after being merged away."""
        self._parent.pop(k, None)

    def ids(self):
        return self._parent.keys()


@dataclass
class PrototypeGraph:
    """Mutable clustering state over the absorbed subset of a dataset."""

    points: np.ndarray
    eps: float
    min_pts: int
    counter: QueryCounter
    eta: int = 1
    next_id: int = 0
    labels: np.ndarray = field(init=False)
    status: np.ndarray = field(init=False)
    ncount: np.ndarray = field(init=False)
    member_mask: np.ndarray = field(init=False)
    member_ids: list[int] = field(init=False)
    cache: dict[int, list[int]] = field(init=False)
    uf: UnionFind = field(init=False)
    index: NeighborIndex = field(init=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise InputError(f"min_pts must be >= 1, got {self.min_pts}")
        n = self.points.shape[0]
        self.labels = np.full(n, -1, dtype=np.int64)
        self.status = np.zeros(n, dtype=np.uint8)
        self.ncount = np.zeros(n, dtype=np.int64)
        self.member_mask = np.zeros(n, dtype=bool)
        self.member_ids = []
        self.cache = {}
        self.uf = UnionFind()
        self.index = NeighborIndex(self.points, [], cell=self.eps, counter=self.counter)

    # -- views ------------------------------------------------------------

    @property
    def n_total(self) -> int:
        return self.points.shape[0]

    @property
    def n_members(self) -> int:
        return len(self.member_ids)

    def member_array(self) -> np.ndarray:
        return np.sort(np.asarray(self.member_ids, dtype=np.int64))

    def ids_with_status(self, status: PointStatus) -> np.ndarray:
        return np.where(self.member_mask & (self.status == status))[0]

    def root_labels(self) -> np.ndarray:
        """Full-length label array with every cluster id resolved to its root."""
        out = self.labels.copy()
        pos = np.unique(out[out >= 0])
        if pos.size:
            lookup = {int(k): self.uf.find(int(k)) for k in pos}
            out[out >= 0] = np.vectorize(lookup.__getitem__)(out[out >= 0])
        return out

    @property
    def n_clusters(self) -> int:
        lab = self.labels[self.member_mask]
        return len({self.uf.find(int(k)) for k in np.unique(lab[lab >= 0])})

    @property
    def n_noise(self) -> int:
        return int(np.count_nonzero(self.member_mask & (self.labels == -1)))

    def snapshot(self) -> dict:
        """JSON-friendly dump of the current member states (debug aid)."""
        members = self.member_array()
        roots = self.root_labels()
        return {
            "eta": int(self.eta),
            "n_members": int(members.size),
            "n_clusters": self.n_clusters,
            "n_noise": self.n_noise,
            "members": members.tolist(),
            "labels": roots[members].tolist(),
            "status": [int(s) for s in self.status[members]],
        }

    # -- queries ----------------------------------------------------------

    def _query_new(self, pid: int) -> list[int]:
        """Range-query a never-queried point and cache the result."""
        hood = self.index.query(pid, self.eps).tolist()
        self.cache[pid] = hood
        self.ncount[pid] = len(hood)
        return hood

    def _ensure_cached(self, pid: int) -> list[int]:
        hood = self.cache.get(pid)
        return hood if hood is not None else self._query_new(pid)

    # -- consistency checks (test support) ---------------------------------

    def check_invariants(self, full: bool = False) -> None:
        members = self.member_array()
        mset = set(members.tolist())
        for p in members:
            hood = self.cache[int(p)]
            assert self.ncount[p] == len(hood), f"stale count at {p}"
            assert set(hood) <= mset, f"cache of {p} references non-members"
            assert int(p) in hood, f"{p} missing from own neighbourhood"
        if full:
            pts = self.points[members]
            d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
            inside = d2 <= self.eps * self.eps
            for i, p in enumerate(members):
                expect = set(members[inside[i]].tolist())
                assert set(self.cache[int(p)]) == expect, f"incomplete cache at {p}"
        core = set(self.ids_with_status(PointStatus.CORE).tolist())
        for p in members:
            p = int(p)
            st = self.status[p]
            assert st != PointStatus.UNKNOWN, f"member {p} unprocessed"
            if st == PointStatus.CORE:
                assert self.ncount[p] >= self.eta
            else:
                assert self.ncount[p] < self.eta, f"{p} should be core"
            if st == PointStatus.NOISE:
                assert self.labels[p] == -1
                assert not (set(self.cache[p]) & core), f"noise {p} touches a core"
            if st == PointStatus.BORDER:
                anchors = set(self.cache[p]) & core
                assert anchors, f"border {p} has no core neighbour"
                roots = {self.uf.find(int(self.labels[a])) for a in anchors}
                assert self.uf.find(int(self.labels[p])) in roots
        for p in core:
            for q in set(self.cache[int(p)]) & core:
                assert self.uf.find(int(self.labels[p])) == self.uf.find(int(self.labels[q]))


def is_noise(pid: int, cache: dict[int, list[int]], status: np.ndarray, eta: int) -> bool:
    """True when a cached point neither reaches ``eta`` neighbours nor touches a core."""
    hood = cache[pid]
    if len(hood) >= eta:
        return False
    return not any(status[q] == PointStatus.CORE for q in hood)


def estimate_eta(graph: PrototypeGraph, rng: np.random.Generator,
                 sample_frac: float = ETA_SAMPLE_FRAC,
                 min_sample: int = ETA_MIN_SAMPLE) -> int:
    """Next density threshold from mean cached neighbour counts.

    Samples ``sample_frac`` of the members (at least ``min_sample``, all of
    them when fewer), querying any member not yet cached. If the mean count
    already exceeds ``min_pts`` the threshold advances by a single step,
    otherwise it jumps to the rounded mean; either way the result stays in
    ``[eta + 1, min_pts]`` so the ramp is strictly increasing and capped.
    """
    members = graph.member_array()
    if members.size == 0:
        raise InputError("prototype has no members")
    size = min(members.size, max(min_sample, round_half_up(sample_frac * members.size)))
    if size < members.size:
        sample = rng.choice(members, size=size, replace=False)
    else:
        sample = members
    counts = [len(graph._ensure_cached(int(p))) for p in np.sort(sample)]
    mean_count = float(np.mean(counts))
    cand = graph.eta + 1 if mean_count > graph.min_pts else round_half_up(mean_count)
    return min(max(cand, graph.eta + 1), graph.min_pts)


def reevaluate_core(graph: PrototypeGraph, new_eta: int) -> list[tuple[int, int, int]]:
    """Raise the density threshold and demote what no longer qualifies.

    Cores whose cached count falls below ``new_eta`` lose core status; every
    demoted point and every point that had a demoted neighbour is then
    reclassified by the local rule (border iff it still touches a surviving
    core, else noise with label ``-1``). A retained border keeps its cluster
    when one of its surviving anchor cores shares that cluster, otherwise it
    adopts its smallest-id surviving anchor's cluster. Returns the change
    log as ``(pid, old_status, new_status)`` tuples.
    """
    if new_eta < graph.eta:
        raise InputError(f"eta may not decrease ({graph.eta} -> {new_eta})")
    if new_eta > graph.min_pts:
        raise InputError(f"eta {new_eta} above min_pts {graph.min_pts}")
    changes: list[tuple[int, int, int]] = []
    if new_eta == graph.eta:
        return changes
    core_ids = graph.ids_with_status(PointStatus.CORE)
    demoted = [int(p) for p in core_ids if graph.ncount[p] < new_eta]
    was = {p: int(PointStatus.CORE) for p in demoted}
    affected = set(demoted)
    for p in demoted:
        graph.status[p] = PointStatus.BORDER
        affected.update(graph.cache[p])
    for x in sorted(affected):
        if not graph.member_mask[x] or graph.status[x] == PointStatus.CORE:
            continue
        old = was.get(x, int(graph.status[x]))
        anchors = [q for q in graph.cache[x] if graph.status[q] == PointStatus.CORE]
        if not anchors:
            graph.status[x] = PointStatus.NOISE
            graph.labels[x] = -1
            if old != PointStatus.NOISE:
                changes.append((x, old, int(PointStatus.NOISE)))
            continue
        own = int(graph.labels[x])
        anchor_roots = {graph.uf.find(int(graph.labels[q])) for q in anchors}
        if own < 0 or graph.uf.find(own) not in anchor_roots:
            graph.labels[x] = int(graph.labels[min(anchors)])
        if old != PointStatus.BORDER:
            changes.append((x, old, int(PointStatus.BORDER)))
    graph.eta = new_eta
    return changes


def init_prototype(data, gamma, eps: float, min_pts: int, rng: np.random.Generator,
                   counter: QueryCounter | None = None,
                   eta_sample_frac: float = ETA_SAMPLE_FRAC,
                   eta_min_sample: int = ETA_MIN_SAMPLE) -> tuple[PrototypeGraph, np.ndarray]:
    """Sample the initial prototype, pick a starting ``eta``, cluster it.

    ``gamma`` follows the fraction-or-count convention of
    :func:`protoscan.util.resolve_count`. Returns the graph plus the
    ascending ids of the not-yet-absorbed remainder.
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n = points.shape[0]
    counter = counter if counter is not None else QueryCounter()
    graph = PrototypeGraph(points=points, eps=eps, min_pts=min_pts, counter=counter)
    size = resolve_count(gamma, n, clamp=False)
    ids = np.sort(rng.choice(n, size=size, replace=False))
    graph.index.add(ids)
    graph.member_mask[ids] = True
    graph.member_ids = [int(i) for i in ids]
    graph.eta = 1
    if min_pts > 1:
        graph.eta = estimate_eta(graph, rng, eta_sample_frac, eta_min_sample)
    graph.next_id = _cluster_pass(
        ids.tolist(), graph._ensure_cached, graph.eta, graph.labels, graph.status
    )
    for k in range(graph.next_id):
        graph.uf.add(k)
    x_rem = np.setdiff1d(np.arange(n, dtype=np.int64), ids, assume_unique=True)
    return graph, x_rem


def _reverify(graph: PrototypeGraph, x: int, k_hat: int, l_merge: set[int],
              seeds: deque, claimed: set[int], stamped: list[int]) -> None:
    """Re-check an already-processed neighbour of a new core.

    Noise joins the new cluster outright; any cached count that meanwhile
    reached ``eta`` turns the point into a core whose (complete) cache is
    walked as a seed — without a fresh range query. Whatever cluster the
    point ends up carrying is recorded for merging.
    """
    st = graph.status[x]
    if st == PointStatus.NOISE:
        graph.labels[x] = k_hat
        stamped.append(x)
        if graph.ncount[x] >= graph.eta:
            graph.status[x] = PointStatus.CORE
            if x not in claimed:
                claimed.add(x)
                seeds.append(x)
        else:
            graph.status[x] = PointStatus.BORDER
    elif st == PointStatus.BORDER and graph.ncount[x] >= graph.eta:
        graph.status[x] = PointStatus.CORE
        if x not in claimed:
            claimed.add(x)
            seeds.append(x)
    l_merge.add(int(graph.labels[x]))


def _inc_expand(graph: PrototypeGraph, p: int, query_batch_point) -> bool:
    """Absorb one unprocessed batch point; returns True if it founded a core.

    Mirrors the baseline expansion, with two differences: processed
    neighbours are re-verified (promotions ride on cached counts) and every
    cluster label touched along the way is unified afterwards. If the
    expansion merged into existing clusters, the tentative new id is freed
    again and every point stamped with it is rewritten to the merged root.
    """
    hood = query_batch_point(p)
    if len(hood) < graph.eta:
        anchors = [y for y in hood if graph.status[y] == PointStatus.CORE]
        if anchors:
            graph.status[p] = PointStatus.BORDER
            graph.labels[p] = int(graph.labels[anchors[0]])
        else:
            graph.status[p] = PointStatus.NOISE
        return False
    k_hat = graph.next_id
    graph.uf.add(k_hat)
    graph.status[p] = PointStatus.CORE
    graph.labels[p] = k_hat
    l_merge: set[int] = {k_hat}
    seeds: deque[int] = deque()
    claimed = {p}
    stamped = [p]

    def touch(neighbourhood):
        for x in neighbourhood:
            if graph.status[x] == PointStatus.UNKNOWN:
                if x not in claimed:
                    claimed.add(x)
                    graph.labels[x] = k_hat
                    stamped.append(x)
                    seeds.append(x)
            else:
                _reverify(graph, x, k_hat, l_merge, seeds, claimed, stamped)

    touch(hood)
    while seeds:
        q = seeds.popleft()
        if graph.status[q] == PointStatus.UNKNOWN:
            hq = query_batch_point(q)
            if len(hq) >= graph.eta:
                graph.status[q] = PointStatus.CORE
                touch(hq)
            else:
                graph.status[q] = PointStatus.BORDER
        else:
            # promoted member core: its cache is already complete
            touch(graph.cache[q])
    roots = {graph.uf.find(l) for l in l_merge}
    if len(roots) > 1:
        target = min(roots)
        for r in roots:
            graph.uf.union(target, r)
        for s in stamped:
            graph.labels[s] = target
        graph.uf.discard(k_hat)
    else:
        graph.next_id += 1
    return True


def inc_dbscan(graph: PrototypeGraph, batch_ids) -> dict:
    """Absorb a batch of new points into the prototype.

    Each batch point is queried once against members plus the whole batch;
    the result lands in its own cache and is mirrored into the caches of
    pre-batch members, whose counts may thereby cross ``eta``. Unprocessed
    batch points are expanded (founding or merging clusters), non-core ones
    attach to an adjacent core's cluster or become noise, and a final sweep
    promotes members whose balls filled up without any expansion touching
    them. Already-absorbed ids are skipped. No previously-queried point is
    ever queried again.
    """
    batch = np.unique(np.asarray(batch_ids, dtype=np.int64).ravel())
    batch = batch[~graph.member_mask[batch]]
    if batch.size == 0:
        return {"new_clusters": 0, "promoted": 0}
    graph.index.add(batch)
    grown: set[int] = set()

    def query_batch_point(pid: int) -> list[int]:
        hood = graph._query_new(pid)
        for y in hood:
            if y != pid and graph.member_mask[y]:
                graph.cache[y].append(pid)
                graph.ncount[y] += 1
                grown.add(y)
        return hood

    before = graph.next_id
    for p in batch:
        if graph.status[p] == PointStatus.UNKNOWN:
            _inc_expand(graph, int(p), query_batch_point)

    promoted = 0
    for x in sorted(grown):
        if graph.status[x] == PointStatus.CORE or graph.ncount[x] < graph.eta:
            continue
        # a stale border/noise member whose ball filled up this batch
        graph.status[x] = PointStatus.CORE
        promoted += 1
        neighbour_roots = {
            graph.uf.find(int(graph.labels[y]))
            for y in graph.cache[x] if graph.labels[y] >= 0
        }
        if int(graph.labels[x]) >= 0:
            neighbour_roots.add(graph.uf.find(int(graph.labels[x])))
        if neighbour_roots:
            target = min(neighbour_roots)
            for r in neighbour_roots:
                graph.uf.union(target, r)
        else:
            target = graph.next_id
            graph.uf.add(target)
            graph.next_id += 1
        graph.labels[x] = target
        for y in graph.cache[x]:
            if graph.status[y] == PointStatus.NOISE:
                graph.status[y] = PointStatus.BORDER
                graph.labels[y] = target

    graph.member_mask[batch] = True
    graph.member_ids.extend(int(i) for i in batch)
    return {"new_clusters": graph.next_id - before, "promoted": promoted}


def recluster_saturated(graph: PrototypeGraph) -> ClusterPartition:
    """Exact re-clustering at full density once every point is a member.

    With the whole dataset absorbed, each cached neighbourhood is the true
    eps-ball, so a fresh clustering pass at ``min_pts`` costs zero range
    queries. This is the only point where previously merged clusters can
    come apart again, and it makes a fully-absorbed run equal the one-shot
    baseline exactly.
    """
    if graph.n_members != graph.n_total:
        raise InputError("recluster_saturated requires full absorption")
    part = cluster_from_cache(graph.member_ids, graph.cache, graph.min_pts, graph.n_total)
    graph.labels = part.labels.copy()
    graph.status = part.status.copy()
    graph.eta = graph.min_pts
    graph.uf = UnionFind()
    for k in range(part.n_clusters):
        graph.uf.add(k)
    graph.next_id = part.n_clusters
    return part
