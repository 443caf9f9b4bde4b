"""Command-line interface.

Subcommands: ``gen`` (synthetic datasets), ``estimate-params`` (candidate
grid + k-distance curve), ``fit`` (incremental or one-shot clustering with
labels/representatives/trace outputs and optional figures), ``label``
(1-NN labeling of new points by saved representatives), ``eval`` (scores
against ground truth), ``bench`` (repeated-run comparison).

Exit codes: 0 success, 1 bad input, 2 the incremental run hit its iteration
cap without stabilizing.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dataset import (
    Dataset,
    InputError,
    ProtoscanError,
    generate_gaussian_blobs,
    generate_shapes,
    load_csv,
    nine_shapes,
    save_csv,
)
from .dbscan import dbscan, save_labels_csv
from .driver import IpdConfig, bench, run_ipd, write_debug_dump, write_trace_jsonl
from .metrics import evaluate
from .params import estimate_params, k_dist_curve
from .representatives import RepresentativeSet, label_points

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSTABLE = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; route them through the input-error path
    def error(self, message):
        raise InputError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="protoscan", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--config", help="JSON generator config (overrides flags)")
    g.add_argument("--kind", choices=["blobs", "shapes"], default="blobs")
    g.add_argument("--clusters", type=int, default=30)
    g.add_argument("--per-cluster", type=int, default=25)
    g.add_argument("--box", type=float, default=100.0)
    g.add_argument("--min-sep", type=float, default=10.0)
    g.add_argument("--per-shape", type=int, default=1000)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True, help="output CSV path")
    g.add_argument("--plot-dir", help="render a scatter of the dataset here")

    e = sub.add_parser("estimate-params", help="candidate (eps, min_pts) grid")
    e.add_argument("--input", required=True)
    e.add_argument("--truth-col", type=int, default=None)
    e.add_argument("--sample", type=int, default=500)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--kdist-k", type=int, default=None,
                   help="also compute the k-distance curve for this k")
    e.add_argument("--kdist-out", help="write the curve as one value per line")
    e.add_argument("--json", action="store_true", help="print the grid as JSON")
    e.add_argument("--plot-dir", help="render the k-distance curve here")

    f = sub.add_parser("fit", help="cluster a dataset")
    f.add_argument("--input", required=True)
    f.add_argument("--truth-col", type=int, default=None)
    f.add_argument("--algo", choices=["ipd", "dbscan"], default="ipd")
    f.add_argument("--eps", type=float, default=None)
    f.add_argument("--min-pts", type=int, default=None)
    f.add_argument("--auto-params", action="store_true",
                   help="estimate eps/min_pts from the data")
    f.add_argument("--c-eps", type=int, default=1, choices=[1, 2, 3])
    f.add_argument("--c-min-pts", type=int, default=1, choices=[0, 1, 2, 3])
    f.add_argument("--gamma", type=str, default="0.2",
                   help="seed sample: fraction in (0,1] or absolute count")
    f.add_argument("--beta", type=str, default="0.1",
                   help="batch size: fraction in (0,1] or absolute count")
    f.add_argument("--tau", type=float, default=0.3)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--max-iterations", type=int, default=None)
    f.add_argument("--labels-out", help="write point_id,label,status CSV")
    f.add_argument("--reps-out", help="write representatives JSONL")
    f.add_argument("--trace-out", help="write per-iteration trace JSONL")
    f.add_argument("--debug-dump", help="write per-iteration graph snapshots JSONL")
    f.add_argument("--json", action="store_true", help="print the summary as JSON")
    f.add_argument("--plot-dir", help="render cluster/convergence figures here")

    l = sub.add_parser("label", help="label points with saved representatives")
    l.add_argument("--reps", required=True, help="representatives JSONL from fit")
    l.add_argument("--input", required=True, help="points CSV")
    l.add_argument("--truth-col", type=int, default=None)
    l.add_argument("--out", required=True, help="output labels CSV")

    v = sub.add_parser("eval", help="score a labeling against ground truth")
    v.add_argument("--pred", required=True,
                   help="labels CSV from fit/label, or any file whose last column is the label")
    v.add_argument("--truth", required=True, help="dataset CSV with a truth column")
    v.add_argument("--truth-col", type=int, default=-1)
    v.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="repeated incremental runs vs baseline")
    b.add_argument("--input", required=True)
    b.add_argument("--truth-col", type=int, default=None)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--min-pts", type=int, required=True)
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--gamma", type=str, default="0.2")
    b.add_argument("--beta", type=str, default="0.1")
    b.add_argument("--tau", type=float, default=0.3)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--out", help="write the full report JSON here")
    b.add_argument("--plot-dir", help="render comparison bars here")
    return p


def _parse_size(text: str):
    """'0.2' -> fraction, '158' -> count (validated downstream)."""
    try:
        if any(c in text for c in ".eE") and not text.isdigit():
            return float(text)
        return int(text)
    except ValueError:
        raise InputError(f"expected a number, got {text!r}") from None


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _cmd_gen(args) -> int:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    kind = cfg.get("kind", args.kind)
    seed = cfg.get("seed", args.seed)
    if kind == "blobs":
        ds = generate_gaussian_blobs(
            n_clusters=cfg.get("clusters", args.clusters),
            per_cluster=cfg.get("per_cluster", args.per_cluster),
            box=cfg.get("box", args.box),
            min_sep=cfg.get("min_sep", args.min_sep),
            seed=seed,
            name=cfg.get("name", "blobs"),
        )
    elif kind == "shapes":
        polys = cfg.get("polygons", "nine")
        polys = nine_shapes() if polys == "nine" else [np.asarray(p) for p in polys]
        ds = generate_shapes(
            polys, per_shape=cfg.get("per_shape", args.per_shape),
            seed=seed, name=cfg.get("name", "shapes"),
        )
    else:
        raise InputError(f"unknown generator kind {kind!r}")
    save_csv(ds, args.out)
    print(f"wrote {ds.n} points ({ds.d}-D, {int(ds.labels.max()) + 1} classes) to {args.out}")
    if args.plot_dir:
        from .report import plot_clusters
        out = plot_clusters(ds.points, ds.labels,
                            path=os.path.join(_ensure_dir(args.plot_dir), "dataset.png"),
                            title=ds.name)
        print(f"figure: {out}")
    return EXIT_OK


def _cmd_estimate_params(args) -> int:
    ds = load_csv(args.input, truth_col=args.truth_col)
    grid = estimate_params(ds, sample_size=args.sample, seed=args.seed)
    if args.json:
        print(json.dumps(grid.to_dict(), indent=2))
    else:
        print(f"mu_eps={grid.mu_eps:.6g} sigma_eps={grid.sigma_eps:.6g} "
              f"(sample={grid.sample_size})")
        print(f"{'eps':>12} {'min_pts':>8} {'c_eps':>6} {'c_min_pts':>10}")
        for c in grid.candidates:
            print(f"{c.eps:>12.6g} {c.min_pts:>8d} {c.c_eps:>6d} {c.c_min_pts:>10d}")
    k = args.kdist_k
    if k is not None or args.kdist_out or args.plot_dir:
        k = k if k is not None else 5
        curve = k_dist_curve(ds, k)
        if args.kdist_out:
            np.savetxt(args.kdist_out, curve)
            print(f"k-distance curve ({k}): {args.kdist_out}")
        if args.plot_dir:
            from .report import plot_kdist
            out = plot_kdist(curve, k,
                             path=os.path.join(_ensure_dir(args.plot_dir), "kdist.png"),
                             title=os.path.basename(args.input))
            print(f"figure: {out}")
    return EXIT_OK


def _print_summary(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(summary, indent=2))
    else:
        print(" ".join(f"{k}={v}" for k, v in summary.items()))


def _cmd_fit(args) -> int:
    ds = load_csv(args.input, truth_col=args.truth_col)
    rc = EXIT_OK
    if args.algo == "dbscan":
        if args.eps is None or args.min_pts is None:
            raise InputError("dbscan needs --eps and --min-pts")
        import time
        t0 = time.perf_counter()
        res = dbscan(ds, args.eps, args.min_pts)
        wall = time.perf_counter() - t0
        labels, status = res.partition.labels, res.partition.status
        summary = {
            "algo": "dbscan", "n": ds.n, "eps": args.eps, "min_pts": args.min_pts,
            "n_clusters": res.partition.n_clusters, "n_noise": res.partition.n_noise,
            "n_queries": res.n_queries, "wall_time": wall,
        }
        reps = trace = snapshots = None
    else:
        cfg = IpdConfig(
            eps=args.eps, min_pts=args.min_pts,
            gamma=_parse_size(args.gamma), beta=_parse_size(args.beta),
            tau=args.tau, seed=args.seed, max_iterations=args.max_iterations,
            auto_params=args.auto_params, c_eps=args.c_eps, c_min_pts=args.c_min_pts,
            collect_snapshots=bool(args.debug_dump),
        )
        res = run_ipd(ds, cfg)
        labels, status = res.labels, res.status
        summary = {"algo": "ipd", **res.summary()}
        reps, trace, snapshots = res.reps, res.trace, res.snapshots
        if not res.converged:
            print("warning: iteration cap reached before the labeling stabilized",
                  file=sys.stderr)
            rc = EXIT_UNSTABLE
    if ds.labels is not None:
        ev = evaluate(labels, ds.labels)
        summary.update({"nmi": ev.nmi, "validity": ev.validity, "omega": ev.omega})
    _print_summary(summary, args.json)

    if args.labels_out:
        save_labels_csv(labels, status, args.labels_out)
    if args.reps_out:
        if reps is None:
            print("warning: --reps-out ignored for --algo dbscan", file=sys.stderr)
        else:
            reps.to_jsonl(args.reps_out)
    if args.trace_out:
        if trace is None:
            print("warning: --trace-out ignored for --algo dbscan", file=sys.stderr)
        else:
            write_trace_jsonl(trace, args.trace_out)
    if args.debug_dump and snapshots is not None:
        write_debug_dump(snapshots, args.debug_dump)
    if args.plot_dir:
        from .report import plot_clusters, plot_convergence
        pdir = _ensure_dir(args.plot_dir)
        if ds.d == 2:
            out = plot_clusters(ds.points, labels, status=status, reps=reps,
                                path=os.path.join(pdir, "clusters.png"),
                                title=f"{args.algo} on {os.path.basename(args.input)}")
            print(f"figure: {out}")
        else:
            print("note: cluster scatter skipped (points are not 2-D)", file=sys.stderr)
        if trace:
            out = plot_convergence(trace, path=os.path.join(pdir, "convergence.png"),
                                   title=os.path.basename(args.input))
            print(f"figure: {out}")
    return rc


def _cmd_label(args) -> int:
    reps = RepresentativeSet.from_jsonl(args.reps)
    ds = load_csv(args.input, truth_col=args.truth_col)
    labels = label_points(ds.points, reps)
    status = np.zeros(ds.n, dtype=np.uint8)  # never density-evaluated
    save_labels_csv(labels, status, args.out)
    print(f"labeled {ds.n} points with {len(reps)} representatives -> {args.out}")
    return EXIT_OK


def _read_pred_labels(path: str) -> np.ndarray:
    """Labels from a fit/label CSV (its 'label' column) or a bare column file."""
    with open(path) as fh:
        first = fh.readline()
    header = [c.strip().lower() for c in first.split(",")]
    if "label" in header:
        col = header.index("label")
        raw = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
        raw = np.atleast_2d(raw)
        return raw[:, col].astype(np.int64)
    ds = load_csv(path)
    if ds.d == 1:
        return ds.points[:, 0].astype(np.int64)
    return ds.points[:, -1].astype(np.int64)


def _cmd_eval(args) -> int:
    pred = _read_pred_labels(args.pred)
    truth_ds = load_csv(args.truth, truth_col=args.truth_col)
    if truth_ds.labels is None:
        raise InputError("truth file needs a label column (see --truth-col)")
    if pred.shape[0] != truth_ds.n:
        raise InputError(
            f"prediction covers {pred.shape[0]} points but truth has {truth_ds.n}"
        )
    ev = evaluate(pred, truth_ds.labels)
    _print_summary(ev.to_dict(), args.json)
    return EXIT_OK


def _cmd_bench(args) -> int:
    ds = load_csv(args.input, truth_col=args.truth_col)
    cfg = IpdConfig(gamma=_parse_size(args.gamma), beta=_parse_size(args.beta),
                    tau=args.tau)
    result = bench(ds, eps=args.eps, min_pts=args.min_pts, runs=args.runs,
                   seed=args.seed, config=cfg)
    data = result.to_dict()
    print(f"{args.runs} incremental runs vs baseline on {os.path.basename(args.input)}:")
    for key, agg in data["ipd"].items():
        base = data["dbscan"].get(key)
        mean = agg["mean"]
        std = agg["std"]
        mean_s = "n/a" if mean is None else f"{mean:.4g}"
        std_s = "" if std is None else f" +/- {std:.3g}"
        base_s = "n/a" if base is None else f"{base:.4g}"
        print(f"  {key:>12}: ipd {mean_s}{std_s}   dbscan {base_s}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(data, fh, indent=2)
        print(f"report: {args.out}")
    if args.plot_dir:
        from .report import plot_bench
        out = plot_bench(result, path=os.path.join(_ensure_dir(args.plot_dir), "bench.png"),
                         title=os.path.basename(args.input))
        print(f"figure: {out}")
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "estimate-params": _cmd_estimate_params,
    "fit": _cmd_fit,
    "label": _cmd_label,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ProtoscanError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
