"""Dataset container, grid index, CSV IO, and generators."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protoscan import (
    Dataset,
    GenerationError,
    InputError,
    NeighborIndex,
    QueryCounter,
    distance,
    generate_gaussian_blobs,
    generate_shapes,
    load_csv,
    nine_shapes,
    range_query,
    save_csv,
)


def brute_neighborhood(points: np.ndarray, pid: int, eps: float) -> set[int]:
    d = np.linalg.norm(points - points[pid], axis=1)
    return set(np.where(d <= eps)[0].tolist())


# ---------------------------------------------------------------- distance


def test_distance_3_4_5_triangle():
    assert distance((0.0, 0.0), (3.0, 4.0)) == 5.0


def test_distance_identity_is_zero():
    for x in (0.0, -3.5, 17.0):
        assert distance((x, x), (x, x)) == 0.0


def test_distance_unit_diagonal():
    assert distance((1.0, 1.0), (2.0, 2.0)) == pytest.approx(math.sqrt(2.0))


def test_distance_dimension_mismatch():
    with pytest.raises(InputError):
        distance((0.0, 0.0), (1.0, 2.0, 3.0))


def test_distance_axioms_on_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b, c = rng.normal(size=(3, 3)) * 10
        ab, ba = distance(a, b), distance(b, a)
        assert ab >= 0.0
        assert ab == ba
        assert distance(a, c) <= ab + distance(b, c) + 1e-12


# ---------------------------------------------------------------- range query


def test_range_query_includes_self_and_near_neighbor():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    index = NeighborIndex(pts, [0, 1, 2], cell=1.5)
    assert range_query(index, 0, 1.5).tolist() == [0, 1]


def test_range_query_only_self_below_min_pairwise_distance():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    index = NeighborIndex(pts, [0, 1, 2], cell=0.25)
    assert range_query(index, 1, 0.25).tolist() == [1]


def test_range_query_counts_queries():
    pts = np.random.default_rng(3).normal(size=(20, 2))
    counter = QueryCounter()
    index = NeighborIndex(pts, range(20), cell=0.5, counter=counter)
    for pid in range(5):
        index.query(pid, 0.5)
    assert counter.value == 5


def test_grid_index_matches_exhaustive_scan():
    rng = np.random.default_rng(42)
    pts = rng.uniform(0, 10, size=(1000, 2))
    index = NeighborIndex(pts, range(1000), cell=0.7)
    for pid in rng.integers(0, 1000, size=100):
        got = index.query(int(pid), 0.7)
        assert set(got.tolist()) == brute_neighborhood(pts, int(pid), 0.7)
        assert np.all(np.diff(got) > 0)  # ascending ids


def test_index_add_grows_coverage():
    pts = np.random.default_rng(1).normal(size=(30, 2))
    index = NeighborIndex(pts, [0, 1, 2], cell=1.0)
    assert len(index) == 3
    index.add(range(3, 30))
    assert len(index) == 30
    assert set(index.covered_ids.tolist()) == set(range(30))
    for pid in range(30):
        assert set(index.query(pid, 1.0).tolist()) == brute_neighborhood(pts, pid, 1.0)


def test_high_dimensional_fallback_matches_brute():
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(80, 9))  # d > 8 switches to the exhaustive path
    index = NeighborIndex(pts, range(80), cell=1.0)
    for pid in (0, 7, 41):
        assert set(index.query(pid, 2.5).tolist()) == brute_neighborhood(pts, pid, 2.5)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(5, 60),
    d=st.integers(1, 4),
    eps=st.floats(0.05, 3.0),
    seed=st.integers(0, 2**16),
)
def test_grid_equals_brute_property(n, d, eps, seed):
    pts = np.random.default_rng(seed).uniform(-4, 4, size=(n, d))
    index = NeighborIndex(pts, range(n), cell=eps)
    pid = seed % n
    assert set(index.query(pid, eps).tolist()) == brute_neighborhood(pts, pid, eps)


def test_query_rejects_nonpositive_eps():
    pts = np.zeros((3, 2))
    index = NeighborIndex(pts, range(3), cell=1.0)
    with pytest.raises(InputError):
        index.query(0, 0.0)


# ---------------------------------------------------------------- Dataset


def test_dataset_coerces_and_validates():
    ds = Dataset(points=[[0, 1], [2, 3]])
    assert ds.points.dtype == np.float64
    assert (ds.n, ds.d) == (2, 2)
    with pytest.raises(InputError):
        Dataset(points=[[0.0, np.nan]])
    with pytest.raises(InputError):
        Dataset(points=[[0.0, 1.0]], labels=[1, 2])


# ---------------------------------------------------------------- CSV


def test_load_csv_basic(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0,1.0\n2.0,3.0\n4.0,5.0\n")
    ds = load_csv(p)
    assert (ds.n, ds.d) == (3, 2)
    assert ds.labels is None


def test_load_csv_header_and_truth_column(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x,y,label\n0.0,1.0,0\n2.0,3.0,1\n")
    ds = load_csv(p, truth_col=-1)
    assert (ds.n, ds.d) == (2, 2)
    assert ds.labels.tolist() == [0, 1]


def test_load_csv_whitespace_delimited(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("0.0 1.0 0\n2.0 3.0 1\n")
    ds = load_csv(p, truth_col=-1)
    assert (ds.n, ds.d) == (2, 2)


def test_load_csv_malformed_row_reports_row_number(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0,1.0\n2.0,oops\n")
    with pytest.raises(InputError, match="row 2"):
        load_csv(p)


def test_load_csv_ragged_rows_rejected(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0,1.0\n2.0,3.0,4.0\n")
    with pytest.raises(InputError):
        load_csv(p)


def test_load_csv_noninteger_truth_rejected(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0,1.0,0.5\n2.0,3.0,1.5\n")
    with pytest.raises(InputError):
        load_csv(p, truth_col=-1)


def test_save_load_roundtrip(tmp_path):
    ds = generate_gaussian_blobs(3, 10, box=30.0, min_sep=8.0, seed=4)
    p = tmp_path / "r.csv"
    save_csv(ds, p)
    back = load_csv(p, truth_col=-1)
    assert np.array_equal(back.points, ds.points)
    assert np.array_equal(back.labels, ds.labels)


# ---------------------------------------------------------------- generators


def test_blobs_shape_and_labels():
    ds = generate_gaussian_blobs(30, 25, box=100.0, min_sep=10.0, seed=2)
    assert (ds.n, ds.d) == (750, 2)
    assert len(np.unique(ds.labels)) == 30
    assert np.all(np.bincount(ds.labels) == 25)


def test_blobs_single_cluster():
    ds = generate_gaussian_blobs(1, 12, seed=0)
    assert set(ds.labels.tolist()) == {0}


def test_blobs_deterministic():
    a = generate_gaussian_blobs(5, 20, seed=77)
    b = generate_gaussian_blobs(5, 20, seed=77)
    assert np.array_equal(a.points, b.points)


def test_blobs_means_respect_separation():
    ds = generate_gaussian_blobs(12, 40, box=80.0, min_sep=10.0, seed=6)
    means = np.array([ds.points[ds.labels == k].mean(axis=0) for k in range(12)])
    d = np.linalg.norm(means[:, None] - means[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    # empirical means wander ~1/sqrt(40) around the true, well-separated means
    assert d.min() > 8.5


def test_blobs_impossible_packing_raises():
    with pytest.raises(GenerationError):
        generate_gaussian_blobs(40, 5, box=10.0, min_sep=10.0, seed=0)


def test_shapes_unit_square_containment():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    ds = generate_shapes([square], per_shape=100, seed=3)
    assert ds.n == 100
    assert np.all(ds.points >= 0.0) and np.all(ds.points <= 1.0)


def test_shapes_triangle_containment_independent_oracle():
    shapely = pytest.importorskip("shapely.geometry")
    tri = np.array([[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]])
    ds = generate_shapes([tri], per_shape=200, seed=8)
    poly = shapely.Polygon(tri.tolist())
    for p in ds.points:
        assert poly.covers(shapely.Point(*p))


def test_shapes_deterministic_and_labeled():
    polys = nine_shapes()
    a = generate_shapes(polys, per_shape=40, seed=5)
    b = generate_shapes(polys, per_shape=40, seed=5)
    assert np.array_equal(a.points, b.points)
    assert a.n == 9 * 40
    assert set(a.labels.tolist()) == set(range(9))


def test_shapes_zero_area_polygon_rejected():
    line = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(InputError):
        generate_shapes([line], per_shape=10, seed=0)


def test_nine_shapes_are_disjoint_with_margins():
    shapely = pytest.importorskip("shapely.geometry")
    polys = [shapely.Polygon(v.tolist()) for v in nine_shapes()]
    assert len(polys) == 9
    for i in range(9):
        assert polys[i].is_valid and polys[i].area > 0
        for j in range(i + 1, 9):
            assert polys[i].distance(polys[j]) >= 2.0


def test_generator_config_json_roundtrip(tmp_path):
    # generator knobs are plain JSON-able scalars / vertex lists
    cfg = {"kind": "blobs", "n_clusters": 3, "per_cluster": 5, "box": 20.0,
           "min_sep": 5.0, "seed": 1}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    loaded = json.loads(p.read_text())
    ds = generate_gaussian_blobs(
        loaded["n_clusters"], loaded["per_cluster"], box=loaded["box"],
        min_sep=loaded["min_sep"], seed=loaded["seed"],
    )
    assert ds.n == 15
