"""End-to-end incremental clustering driver and benchmark harness.

``run_ipd`` grows a clustered prototype from a seed sample, batch by batch,
until the labeling of a held-out test block stops changing between
iterations (pairwise instability hits zero) — or the data runs out. The
density threshold ramps from a low starting value up to ``min_pts`` as the
prototype densifies; a zero-instability reading while the ramp is still
below ``min_pts`` forces the threshold to the top and demands one more
stable pass. Finally, noise near the cluster rims is refined and everything
never absorbed is labeled by its nearest representative.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, InputError, QueryCounter
from .dbscan import PointStatus
from .metrics import silhouette
from .params import estimate_params
from .prototype import (
    PrototypeGraph,
    estimate_eta,
    inc_dbscan,
    init_prototype,
    recluster_saturated,
    reevaluate_core,
)
from .representatives import RefineReport, RepresentativeSet, label_points, \
    refine_noise, select_representatives
from .stability import StabilityReport, compute_test_size, instability
from .util import resolve_count

STOP_STABLE = "stable"
STOP_EXHAUSTED = "exhausted"
STOP_ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class IpdConfig:
    """Knobs for :func:`run_ipd`.

    ``gamma`` (seed-sample size) and ``beta`` (batch size) follow the
    fraction-or-count convention: floats in (0, 1] are fractions of n, ints
    are absolute counts. ``max_iterations`` defaults to
    ``ceil(n / beta) + min_pts`` — enough to absorb everything plus the
    threshold ramp. With ``recompute_reps_each_iteration=False`` the
    representative set is only refreshed when the test block grows, which
    reproduces the cheaper (but stalling-prone) bookkeeping some
    implementations use; leave it on for honest convergence checks.
    """

    eps: float | None = None
    min_pts: int | None = None
    gamma: float | int = 0.2
    beta: float | int = 0.1
    tau: float = 0.3
    seed: int | None = None
    max_iterations: int | None = None
    recompute_reps_each_iteration: bool = True
    trace_silhouette: bool = True
    silhouette_cap: int = 2000
    auto_params: bool = False
    c_eps: int = 1
    c_min_pts: int = 1
    param_sample: int = 500
    collect_snapshots: bool = False


@dataclass
class IpdResult:
    labels: np.ndarray
    status: np.ndarray
    reps: RepresentativeSet
    trace: list[StabilityReport]
    graph: PrototypeGraph = field(repr=False)
    eps: float
    min_pts: int
    eta: int
    n_clusters: int
    n_noise: int
    n_queries: int
    n_members: int
    wall_time: float
    stop_reason: str
    refine: RefineReport | None
    config: IpdConfig
    snapshots: list[dict] = field(default_factory=list, repr=False)
    # graph state right before noise refinement: the clustering stage's own
    # output, which at full absorption equals the one-shot baseline exactly
    pre_refine_labels: np.ndarray | None = None
    pre_refine_status: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.stop_reason != STOP_ITERATION_CAP

    def summary(self) -> dict:
        return {
            "n": int(self.labels.shape[0]),
            "eps": self.eps,
            "min_pts": self.min_pts,
            "eta": self.eta,
            "n_clusters": self.n_clusters,
            "n_noise": self.n_noise,
            "n_queries": self.n_queries,
            "n_members": self.n_members,
            "iterations": len(self.trace),
            "wall_time": self.wall_time,
            "stop_reason": self.stop_reason,
            "converged": self.converged,
        }


def _draw(rng: np.random.Generator, pool: np.ndarray, k: int):
    """Remove k random ids from the (sorted) pool; both halves stay sorted."""
    if k >= pool.size:
        return pool, pool[:0]
    idx = rng.choice(pool.size, size=k, replace=False)
    mask = np.zeros(pool.size, dtype=bool)
    mask[idx] = True
    return pool[mask], pool[~mask]


def _trace_silhouette(graph: PrototypeGraph, rng: np.random.Generator, cap: int):
    members = graph.member_array()
    if members.size > cap:
        members = np.sort(rng.choice(members, size=cap, replace=False))
    res = silhouette(graph.points[members], graph.root_labels()[members])
    return res.score if res.defined else None


def resolve_parameters(data, config: IpdConfig):
    """(eps, min_pts) straight from the config, or from the candidate grid."""
    if config.auto_params:
        grid = estimate_params(data, sample_size=config.param_sample, seed=config.seed)
        cand = grid.at(config.c_eps, config.c_min_pts)
        return cand.eps, cand.min_pts
    if config.eps is None or config.min_pts is None:
        raise InputError("eps and min_pts are required unless auto_params is set")
    return float(config.eps), int(config.min_pts)


def run_ipd(data, config: IpdConfig | None = None, **overrides) -> IpdResult:
    """Incremental density clustering with representative extraction.

    Keyword overrides are applied on top of ``config`` (so casual callers can
    write ``run_ipd(ds, eps=1.3, min_pts=4, seed=0)``). Returns labels and
    states over the *entire* dataset: absorbed members carry their clustered
    state, while the test block and any unabsorbed remainder are labeled by
    their nearest representative (status stays ``unknown`` — they were never
    density-evaluated). Same seed, same input → bit-identical output.
    """
    config = config if config is not None else IpdConfig()
    if overrides:
        config = replace(config, **overrides)
    ds = data if isinstance(data, Dataset) else Dataset(points=np.asarray(data, dtype=np.float64))
    n = ds.n
    t0 = time.perf_counter()
    eps, min_pts = resolve_parameters(ds, config)
    seq = np.random.SeedSequence(config.seed)
    rng, rng_diag = (np.random.default_rng(s) for s in seq.spawn(2))
    counter = QueryCounter()

    graph, x_rem = init_prototype(ds, config.gamma, eps, min_pts, rng, counter)
    beta_n = resolve_count(config.beta, n)
    max_iter = config.max_iterations
    if max_iter is None:
        max_iter = math.ceil(n / beta_n) + min_pts

    alpha = compute_test_size(graph.n_clusters, n)
    s_test, x_rem = _draw(rng, x_rem, min(alpha, x_rem.size))
    alpha = int(s_test.size)
    reps = select_representatives(graph, config.tau)
    omega = label_points(ds.points[s_test], reps)

    trace: list[StabilityReport] = []
    snapshots: list[dict] = []

    def snap(tag: str, it: int):
        if config.collect_snapshots:
            snapshots.append({"iteration": it, "stage": tag, **graph.snapshot()})

    snap("init", 0)
    stop_reason = STOP_ITERATION_CAP
    iteration = 0
    while True:
        if x_rem.size == 0:
            stop_reason = STOP_EXHAUSTED
            break
        if iteration >= max_iter:
            stop_reason = STOP_ITERATION_CAP
            break
        iteration += 1
        batch, x_rem = _draw(rng, x_rem, min(beta_n, x_rem.size))
        if graph.eta < min_pts:
            new_eta = estimate_eta(graph, rng)
            if new_eta > graph.eta:
                reevaluate_core(graph, new_eta)
        inc_dbscan(graph, batch)

        if config.recompute_reps_each_iteration:
            reps_curr = select_representatives(graph, config.tau)
        else:
            reps_curr = reps
        omega_prime = label_points(ds.points[s_test], reps_curr)
        delta = instability(omega, omega_prime) if s_test.size >= 2 else 1.0

        alpha_prime = compute_test_size(graph.n_clusters, n)
        if 0 < alpha_prime - alpha <= x_rem.size:
            extra, x_rem = _draw(rng, x_rem, alpha_prime - alpha)
            s_test = np.sort(np.concatenate([s_test, extra]))
            alpha = alpha_prime
            if not config.recompute_reps_each_iteration:
                reps_curr = select_representatives(graph, config.tau)
            omega_prime = label_points(ds.points[s_test], reps_curr)

        sil = _trace_silhouette(graph, rng_diag, config.silhouette_cap) \
            if config.trace_silhouette else None
        forced = False
        if delta == 0.0 and graph.eta < min_pts:
            # stability reached on a low threshold: jump to full density and
            # demand one more stable pass before believing it
            reevaluate_core(graph, min_pts)
            forced = True
        trace.append(StabilityReport(
            iteration=iteration, delta=delta, eta=graph.eta,
            n_clusters=graph.n_clusters, n_noise=graph.n_noise, alpha=alpha,
            n_members=graph.n_members, n_queries=counter.value,
            silhouette=sil, forced_reset=forced,
            omega=omega, omega_prime=omega_prime,
        ))
        omega = omega_prime
        reps = reps_curr
        snap("iteration", iteration)
        if delta == 0.0 and not forced:
            stop_reason = STOP_STABLE
            break

    if graph.n_members == n and graph.eta < min_pts:
        # everything absorbed while the ramp was still low: caches are the
        # exact neighbourhoods, so re-cluster at full density for free
        recluster_saturated(graph)
    pre_refine_labels = graph.root_labels()
    pre_refine_status = graph.status.copy()
    reps = select_representatives(graph, config.tau)
    refine_report = refine_noise(graph, reps)
    reps = select_representatives(graph, config.tau)
    snap("final", iteration)

    labels = graph.root_labels()
    status = graph.status.copy()
    unprocessed = np.concatenate([x_rem, s_test])
    if unprocessed.size:
        unprocessed = np.sort(unprocessed)
        labels[unprocessed] = label_points(ds.points[unprocessed], reps)
    return IpdResult(
        labels=labels,
        status=status,
        reps=reps,
        trace=trace,
        graph=graph,
        eps=eps,
        min_pts=min_pts,
        eta=graph.eta,
        n_clusters=graph.n_clusters,
        n_noise=int(np.count_nonzero(labels == -1)),
        n_queries=counter.value,
        n_members=graph.n_members,
        wall_time=time.perf_counter() - t0,
        stop_reason=stop_reason,
        refine=refine_report,
        config=config,
        snapshots=snapshots,
        pre_refine_labels=pre_refine_labels,
        pre_refine_status=pre_refine_status,
    )


def write_trace_jsonl(trace, path) -> None:
    """One JSON record per iteration (see StabilityReport.to_record)."""
    with open(path, "w") as fh:
        for rep in trace:
            rec = rep.to_record() if isinstance(rep, StabilityReport) else dict(rep)
            fh.write(json.dumps(rec) + "\n")


def read_trace_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def write_debug_dump(snapshots, path) -> None:
    """Per-iteration graph snapshots as JSON lines."""
    with open(path, "w") as fh:
        for snap in snapshots:
            fh.write(json.dumps(snap) + "\n")


@dataclass(frozen=True)
class BenchResult:
    runs: list[dict]
    ipd: dict
    dbscan: dict

    def to_dict(self) -> dict:
        return {"runs": self.runs, "ipd": self.ipd, "dbscan": self.dbscan}


def _agg(values) -> dict:
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        return {"mean": None, "std": None}
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def bench(data, eps: float, min_pts: int, runs: int = 10, seed=None,
          config: IpdConfig | None = None) -> BenchResult:
    """Repeated incremental runs vs. the one-shot baseline.

    Each repetition gets an independent seed derived from ``seed``; the
    deterministic baseline runs once. Per-run records carry cluster count,
    noise, query count, wall time and — when the dataset has ground truth —
    NMI / validity / omega aggregated as mean ± std.
    """
    from .dbscan import dbscan as run_dbscan
    from .metrics import evaluate

    ds = data if isinstance(data, Dataset) else Dataset(points=np.asarray(data, dtype=np.float64))
    if runs < 1:
        raise InputError("runs must be >= 1")
    base_cfg = config or IpdConfig()
    run_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=runs)
    records = []
    for i, s in enumerate(run_seeds):
        res = run_ipd(ds, base_cfg, eps=eps, min_pts=min_pts, seed=int(s))
        rec = {
            "run": i,
            "seed": int(s),
            "n_clusters": res.n_clusters,
            "n_noise": res.n_noise,
            "n_queries": res.n_queries,
            "wall_time": res.wall_time,
            "iterations": len(res.trace),
            "stop_reason": res.stop_reason,
        }
        if ds.labels is not None:
            ev = evaluate(res.labels, ds.labels)
            rec.update({"nmi": ev.nmi, "validity": ev.validity, "omega": ev.omega})
        records.append(rec)

    t0 = time.perf_counter()
    base = run_dbscan(ds, eps, min_pts)
    base_wall = time.perf_counter() - t0
    dbscan_rec = {
        "n_clusters": base.partition.n_clusters,
        "n_noise": base.partition.n_noise,
        "n_queries": base.n_queries,
        "wall_time": base_wall,
    }
    if ds.labels is not None:
        ev = evaluate(base.partition.labels, ds.labels)
        dbscan_rec.update({"nmi": ev.nmi, "validity": ev.validity, "omega": ev.omega})

    keys = ["n_clusters", "n_noise", "n_queries", "wall_time"]
    if ds.labels is not None:
        keys += ["nmi", "validity", "omega"]
    ipd_agg = {k: _agg([r.get(k) for r in records]) for k in keys}
    return BenchResult(runs=records, ipd=ipd_agg, dbscan=dbscan_rec)
