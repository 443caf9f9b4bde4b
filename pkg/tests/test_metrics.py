"""Evaluation metrics: masked NMI, coverage, combined score, silhouette."""

from __future__ import annotations

import math

import numpy as np
import pytest

from protoscan import InputError, evaluate, nmi, silhouette
from protoscan.metrics import omega_score, validity_ratio


# ---------------------------------------------------------------- nmi


def test_identical_partitions_score_one():
    assert nmi([0, 0, 1, 1, 2], [5, 5, 9, 9, 7]) == pytest.approx(1.0)


def test_constant_prediction_scores_zero():
    assert nmi([3, 3, 3, 3], [0, 0, 1, 1]) == 0.0


def test_noise_positions_are_dropped_before_scoring():
    pred = [0, 0, 0, 1, 1, -1]
    truth = [4, 4, 4, 9, 9, 9]
    assert nmi(pred, truth) == pytest.approx(1.0)


def test_all_noise_scores_zero():
    assert nmi([-1, -1, -1], [0, 1, 2]) == 0.0


def test_single_block_remainder_scores_one():
    # a 1x1 contingency table is a perfect (if vacuous) match
    assert nmi([0, 0, -1], [5, 5, 1]) == pytest.approx(1.0)


def test_masking_is_by_prediction_only():
    # -1 in truth is treated as an ordinary class, not dropped
    pred = [0, 0, 1, 1]
    truth = [-1, -1, 2, 2]
    assert nmi(pred, truth) == pytest.approx(1.0)


def test_length_mismatch_rejected():
    with pytest.raises(InputError):
        nmi([0, 1], [0, 1, 2])


def test_matches_sklearn_arithmetic_normalization():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(10)
    for _ in range(25):
        n = int(rng.integers(5, 200))
        pred = rng.integers(0, 6, size=n)
        truth = rng.integers(0, 4, size=n)
        expect = metrics.normalized_mutual_info_score(truth, pred, average_method="arithmetic")
        assert nmi(pred, truth) == pytest.approx(expect, abs=1e-9)


def test_matches_sklearn_after_noise_mask():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(11)
    pred = rng.integers(-1, 5, size=300)
    truth = rng.integers(0, 5, size=300)
    keep = pred >= 0
    expect = metrics.normalized_mutual_info_score(
        truth[keep], pred[keep], average_method="arithmetic"
    )
    assert nmi(pred, truth) == pytest.approx(expect, abs=1e-9)


# ---------------------------------------------------------------- nu / omega


def test_validity_ratio_definition():
    assert validity_ratio(0, 100) == 1.0
    assert validity_ratio(25, 100) == 0.75
    with pytest.raises(InputError):
        validity_ratio(0, 0)


def test_omega_reference_values():
    # published-style combinations: high NMI with tiny vs. sizable noise
    nu1 = validity_ratio(1, 788)
    assert omega_score(0.89, nu1) == pytest.approx(0.94, abs=0.005)
    nu2 = validity_ratio(37, 399)
    assert omega_score(0.86, nu2) == pytest.approx(0.88, abs=0.005)


def test_omega_edge_cases():
    assert omega_score(1.0, 1.0) == 1.0
    assert omega_score(0.0, 0.9) == 0.0
    assert omega_score(0.0, 0.0) == 0.0


def test_omega_is_harmonic_mean():
    rng = np.random.default_rng(12)
    for _ in range(50):
        phi, nu = rng.uniform(0.01, 1.0, size=2)
        expect = 2 * phi * nu / (phi + nu)
        assert omega_score(phi, nu) == pytest.approx(expect)
        bound = min(phi, nu) * 2 / (1 + min(phi, nu) / max(phi, nu))
        assert omega_score(phi, nu) <= bound + 1e-12


# ---------------------------------------------------------------- silhouette


def test_two_far_tight_pairs_score_near_one():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [50.0, 0.0], [50.1, 0.0]])
    res = silhouette(pts, [0, 0, 1, 1])
    assert res.defined
    assert res.score > 0.95


def test_coincident_points_score_zero():
    pts = np.zeros((6, 2))
    res = silhouette(pts, [0, 0, 0, 1, 1, 1])
    assert res.defined
    assert res.score == 0.0


def test_square_side_split_beats_diagonal_split():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    side = silhouette(square, [0, 0, 1, 1])       # split along y
    diag = silhouette(square, [0, 1, 1, 0])       # split along the diagonal
    # hand values: (b-a)/max(a,b) with a=1, b=(1+sqrt2)/2 per point on the
    # side split; a=sqrt2, b=1 on the diagonal split
    expect_side = ((1.0 + math.sqrt(2.0)) / 2.0 - 1.0) / ((1.0 + math.sqrt(2.0)) / 2.0)
    expect_diag = (1.0 - math.sqrt(2.0)) / math.sqrt(2.0)
    assert side.score == pytest.approx(expect_side, abs=1e-12)
    assert diag.score == pytest.approx(expect_diag, abs=1e-12)
    assert side.score == pytest.approx(0.17157287525381, abs=1e-9)
    assert diag.score == pytest.approx(-0.29289321881345, abs=1e-9)
    assert side.score > diag.score


def test_noise_points_are_excluded():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [50.0, 0.0], [50.1, 0.0], [500.0, 500.0]])
    with_noise = silhouette(pts, [0, 0, 1, 1, -1])
    without = silhouette(pts[:4], [0, 0, 1, 1])
    assert with_noise.score == pytest.approx(without.score)


def test_single_cluster_is_undefined():
    pts = np.random.default_rng(13).normal(size=(10, 2))
    res = silhouette(pts, [0] * 10)
    assert not res.defined
    assert math.isnan(res.score)
    all_noise = silhouette(pts, [-1] * 10)
    assert not all_noise.defined


def test_matches_sklearn_on_random_data():
    metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(14)
    for _ in range(10):
        n = int(rng.integers(20, 150))
        pts = rng.normal(size=(n, 3))
        labels = rng.integers(0, 4, size=n)
        expect = metrics.silhouette_score(pts, labels)
        got = silhouette(pts, labels)
        assert got.defined
        assert got.score == pytest.approx(expect, abs=1e-9)


def test_silhouette_range_property():
    rng = np.random.default_rng(15)
    for _ in range(20):
        pts = rng.uniform(-5, 5, size=(40, 2))
        labels = rng.integers(-1, 3, size=40)
        res = silhouette(pts, labels)
        if res.defined:
            assert -1.0 <= res.score <= 1.0


# ---------------------------------------------------------------- evaluate


def test_evaluate_combines_all_fields():
    pred = np.array([0, 0, 0, 1, 1, -1])
    truth = np.array([4, 4, 4, 9, 9, 9])
    res = evaluate(pred, truth)
    assert res.nmi == pytest.approx(1.0)
    assert res.n_noise == 1
    assert res.validity == pytest.approx(1.0 - 1.0 / 6.0)
    assert res.omega == pytest.approx(omega_score(res.nmi, res.validity))
    assert res.n_clusters == 2
    d = res.to_dict()
    assert {"nmi", "validity", "omega", "n_noise", "n_clusters"} <= set(d)
