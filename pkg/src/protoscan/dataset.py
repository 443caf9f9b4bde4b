"""Dataset container, range-query index, CSV I/O and synthetic generators.

Everything downstream (the clustering engine, parameter estimation, the
report path) talks to data through this module: a ``Dataset`` holds an
``(n, d)`` float array plus optional integer ground-truth labels, and a
``NeighborIndex`` answers closed-ball range queries over a growing subset
of the rows while counting every query it serves.
"""

from __future__ import annotations

import csv
import itertools
import threading
from dataclasses import dataclass, field

import numpy as np


class ProtoscanError(Exception):
    """Base class for errors raised by this package."""


class InputError(ProtoscanError):
    """Malformed or out-of-contract input (bad file, bad shape, bad arg)."""


class GenerationError(ProtoscanError):
    """A synthetic-data generator could not satisfy its constraints."""


class InsufficientDataError(InputError):
    """Too few points for the requested statistic."""


@dataclass(frozen=True)
class Dataset:
    """Immutable point set with optional ground-truth labels.

    Parameters
    ----------
    points : (n, d) float array
        Row-per-point coordinates. Coerced to C-contiguous float64.
    labels : (n,) int array or None
        Ground-truth class per row, if known.
    name : str
        Free-form tag used in reports and figures.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"points must be a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points contain NaN or infinite coordinates")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64).ravel()
            if lab.shape[0] != pts.shape[0]:
                raise InputError(
                    f"labels length {lab.shape[0]} does not match {pts.shape[0]} points"
                )
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def distance(a, b) -> float:
    """Euclidean distance between two coordinate vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


class QueryCounter:
    """Thread-safe counter of range queries issued against an index.

    With ``record=True`` every queried point id is also collected — used by
    tests to assert which points were ever the subject of a range query.
    """

    def __init__(self, record: bool = False):
        self._lock = threading.Lock()
        self._count = 0
        self._record = record
        self._ids: list[int] = []

    def increment(self, pid: int | None = None) -> None:
        with self._lock:
            self._count += 1
            if self._record and pid is not None:
                self._ids.append(pid)

    @property
    def value(self) -> int:
        return self._count

    @property
    def queried_ids(self) -> list[int]:
        return list(self._ids)


# Above this dimensionality a uniform grid enumerates 3**d cells per query
# and stops paying for itself; fall back to a flat scan of covered ids.
_GRID_MAX_DIM = 8


class NeighborIndex:
    """Closed-ball range queries over a growing subset of dataset rows.

    A uniform grid with cell side ``cell`` buckets covered rows; a query for
    radius ``eps`` scans the ``(2*ceil(eps/cell)+1)**d`` surrounding cells and
    filters candidates by exact Euclidean distance (``<= eps``, so a point
    always lies in its own neighbourhood). For ``d > 8`` an exhaustive scan
    over the covered rows is used instead.
    """

    def __init__(self, points: np.ndarray, ids, cell: float,
                 counter: QueryCounter | None = None):
        if cell <= 0 or not np.isfinite(cell):
            raise InputError(f"cell side must be positive and finite, got {cell}")
        self._points = np.asarray(points, dtype=np.float64)
        if self._points.ndim != 2:
            raise InputError("points must be a 2-D array")
        self._cell = float(cell)
        self._counter = counter
        self._d = self._points.shape[1]
        self._grid: dict[tuple, list[int]] | None = {} if self._d <= _GRID_MAX_DIM else None
        self._ids: list[int] = []
        self.add(ids)

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def covered_ids(self) -> np.ndarray:
        return np.asarray(self._ids, dtype=np.int64)

    def add(self, ids) -> None:
        """Insert more rows into the index (ids are full-dataset row indices)."""
        ids = np.asarray(ids, dtype=np.int64).ravel()
        if ids.size == 0:
            return
        if np.any(ids < 0) or np.any(ids >= self._points.shape[0]):
            raise InputError("id out of range for the backing point array")
        self._ids.extend(int(i) for i in ids)
        if self._grid is not None:
            keys = np.floor(self._points[ids] / self._cell).astype(np.int64)
            for i, key in zip(ids, map(tuple, keys)):
                self._grid.setdefault(key, []).append(int(i))

    def query(self, pid: int, eps: float) -> np.ndarray:
        """Ids (ascending) of covered rows within ``eps`` of row ``pid``.

        ``pid`` itself is included when covered. Increments the query counter.
        """
        if eps <= 0:
            raise InputError(f"eps must be positive, got {eps}")
        if self._counter is not None:
            self._counter.increment(pid)
        x = self._points[pid]
        if self._grid is None:
            cand = np.asarray(self._ids, dtype=np.int64)
        else:
            reach = int(np.ceil(eps / self._cell))
            base = np.floor(x / self._cell).astype(np.int64)
            buckets = []
            for off in itertools.product(range(-reach, reach + 1), repeat=self._d):
                hit = self._grid.get(tuple(base + np.asarray(off)))
                if hit:
                    buckets.append(hit)
            if not buckets:
                return np.empty(0, dtype=np.int64)
            cand = np.asarray(list(itertools.chain.from_iterable(buckets)), dtype=np.int64)
        diff = self._points[cand] - x
        mask = np.einsum("ij,ij->i", diff, diff) <= eps * eps
        return np.sort(cand[mask])


def range_query(index: NeighborIndex, pid: int, eps: float) -> np.ndarray:
    """Functional alias for :meth:`NeighborIndex.query`."""
    return index.query(pid, eps)


def _parse_row(fields: list[str], row_num: int) -> list[float]:
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise InputError(f"row {row_num}: non-numeric field ({exc})") from None


def load_csv(path, truth_col: int | None = None, name: str | None = None) -> Dataset:
    """Load a delimited coordinate file into a :class:`Dataset`.

    The delimiter is sniffed per file (comma if the first data line contains
    one, otherwise any whitespace). A header row is auto-detected: if the
    first row has any non-numeric field it is treated as column names.

    Parameters
    ----------
    truth_col : int or None
        Column index holding integer ground-truth labels (negative indices
        count from the end, so ``-1`` flags the final column). ``None`` means
        every column is a coordinate.
    """
    path = str(path)
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        first = fh.readline()
        if first == "":
            raise InputError(f"{path}: empty file")
        delim = "," if "," in first else None
        fh.seek(0)
        if delim == ",":
            for rec in csv.reader(fh):
                if rec and any(f.strip() for f in rec):
                    rows.append([f.strip() for f in rec])
        else:
            for line in fh:
                fields = line.split()
                if fields:
                    rows.append(fields)
    start = 0
    try:
        [float(f) for f in rows[0]]
    except ValueError:
        start = 1
    if start >= len(rows):
        raise InputError(f"{path}: no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width), dtype=np.float64)
    for i, rec in enumerate(rows[start:]):
        if len(rec) != width:
            raise InputError(
                f"{path}: row {i + start + 1} has {len(rec)} fields, expected {width}"
            )
        data[i] = _parse_row(rec, i + start + 1)
    labels = None
    if truth_col is not None:
        col = truth_col if truth_col >= 0 else width + truth_col
        if not 0 <= col < width:
            raise InputError(f"truth column {truth_col} out of range for {width} columns")
        labels = data[:, col]
        if not np.allclose(labels, np.round(labels)):
            raise InputError(f"truth column {truth_col} holds non-integer values")
        labels = labels.astype(np.int64)
        data = np.delete(data, col, axis=1)
        if data.shape[1] == 0:
            raise InputError("no coordinate columns left after removing the truth column")
    return Dataset(points=data, labels=labels, name=name or path)


def save_csv(ds: Dataset, path, include_labels: bool = True) -> None:
    """Write a dataset as a headered CSV (coordinates, then optional label)."""
    cols = [f"x{i}" for i in range(ds.d)]
    with_labels = include_labels and ds.labels is not None
    if with_labels:
        cols.append("label")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.points[i]]
            if with_labels:
                row.append(int(ds.labels[i]))
            w.writerow(row)


def _draw_separated_means(rng: np.random.Generator, k: int, box: float,
                          min_sep: float, max_draws: int = 100_000) -> np.ndarray:
    """Uniform means in [0, box]^2, each at least ``min_sep`` from the rest."""
    means: list[np.ndarray] = []
    for _ in range(max_draws):
        cand = rng.uniform(0.0, box, size=2)
        if all(float(np.linalg.norm(cand - m)) >= min_sep for m in means):
            means.append(cand)
            if len(means) == k:
                return np.asarray(means)
    raise GenerationError(
        f"could not place {k} means with separation {min_sep} in a {box}x{box} box"
    )


def generate_gaussian_blobs(n_clusters: int, per_cluster: int, box: float = 100.0,
                            min_sep: float = 10.0, seed=None, name: str = "blobs") -> Dataset:
    """Bivariate unit-variance Gaussian clusters with separated means.

    Means are drawn uniformly in ``[0, box]^2`` and redrawn until all pairwise
    distances reach ``min_sep`` (bounded retries, :class:`GenerationError` on
    exhaustion). Each cluster gets ``per_cluster`` points with identity
    covariance; labels are the cluster indices in generation order.
    """
    if n_clusters < 1 or per_cluster < 1:
        raise InputError("n_clusters and per_cluster must be positive")
    rng = np.random.default_rng(seed)
    means = _draw_separated_means(rng, n_clusters, box, min_sep)
    pts = np.concatenate(
        [m + rng.standard_normal((per_cluster, 2)) for m in means], axis=0
    )
    labels = np.repeat(np.arange(n_clusters, dtype=np.int64), per_cluster)
    return Dataset(points=pts, labels=labels, name=name)


def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def generate_shapes(polygons, per_shape: int, seed=None, name: str = "shapes") -> Dataset:
    """Uniform points inside each polygon via rejection sampling.

    ``polygons`` is a sequence of ``(m, 2)`` vertex arrays (``m >= 3``,
    non-degenerate). Labels are the polygon indices. Rejection draws are
    batched over each polygon's bounding box; a polygon whose area is zero
    (or numerically negligible versus its box) raises
    :class:`GenerationError`.
    """
    from matplotlib.path import Path as _MplPath

    if per_shape < 1:
        raise InputError("per_shape must be positive")
    polys = [np.asarray(p, dtype=np.float64) for p in polygons]
    if not polys:
        raise InputError("need at least one polygon")
    rng = np.random.default_rng(seed)
    chunks = []
    for idx, poly in enumerate(polys):
        if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
            raise InputError(f"polygon {idx}: need an (m>=3, 2) vertex array")
        if _polygon_area(poly) <= 0.0:
            raise InputError(f"polygon {idx} has zero area")
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        box_area = float(np.prod(hi - lo))
        if box_area <= 0.0:
            raise InputError(f"polygon {idx} is degenerate (flat bounding box)")
        path = _MplPath(poly)
        got: list[np.ndarray] = []
        have = 0
        # acceptance rate is area/box_area; cap total draws well above the
        # expectation so a pathologically thin polygon fails loudly
        budget = max(int(50 * per_shape * box_area / _polygon_area(poly)), 10 * per_shape)
        while have < per_shape and budget > 0:
            want = min(max(2 * (per_shape - have), 1024), budget)
            draw = rng.uniform(lo, hi, size=(want, 2))
            keep = draw[path.contains_points(draw)]
            got.append(keep)
            have += len(keep)
            budget -= want
        if have < per_shape:
            raise GenerationError(f"polygon {idx}: rejection sampling budget exhausted")
        chunks.append(np.concatenate(got, axis=0)[:per_shape])
    pts = np.concatenate(chunks, axis=0)
    labels = np.repeat(np.arange(len(polys), dtype=np.int64), per_shape)
    return Dataset(points=pts, labels=labels, name=name)


def nine_shapes() -> list[np.ndarray]:
    """Nine well-separated polygons (rectangle, triangle, L, cross, house,
    chevron, U, diamond, hexagon) laid out on a 3x3 grid of 30-unit cells.

    Shape interiors stay within ``[2, 28]`` of each cell, so neighbouring
    shapes are at least 4 units apart — far beyond the point spacing at any
    sane sampling density, keeping the nine clusters cleanly separable.
    """
    base = [
        # rectangle
        [(2, 2), (26, 2), (26, 14), (2, 14)],
        # triangle
        [(2, 2), (26, 2), (14, 24)],
        # L
        [(2, 2), (26, 2), (26, 10), (12, 10), (12, 26), (2, 26)],
        # plus / cross
        [(10, 2), (18, 2), (18, 10), (26, 10), (26, 18), (18, 18),
         (18, 26), (10, 26), (10, 18), (2, 18), (2, 10), (10, 10)],
        # house pentagon
        [(2, 2), (26, 2), (26, 16), (14, 26), (2, 16)],
        # chevron
        [(2, 2), (14, 10), (26, 2), (26, 12), (14, 20), (2, 12)],
        # U
        [(2, 2), (26, 2), (26, 26), (18, 26), (18, 10), (10, 10),
         (10, 26), (2, 26)],
        # diamond
        [(14, 2), (26, 14), (14, 26), (2, 14)],
        # hexagon
        [(8, 2), (20, 2), (26, 14), (20, 26), (8, 26), (2, 14)],
    ]
    out = []
    for idx, verts in enumerate(base):
        row, col = divmod(idx, 3)
        offset = np.asarray([30.0 * col, 30.0 * row])
        out.append(np.asarray(verts, dtype=np.float64) + offset)
    return out
