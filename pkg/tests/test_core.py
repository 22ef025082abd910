import numpy as np
import pytest

from sarfc.core import (
    BLOCK_ELEMENTS,
    ClusterAssignment,
    Dataset,
    DistanceView,
    InvalidInputError,
    InvalidParameterError,
    SarfcError,
    pairwise_distances,
    rth_neighbor_distance,
)

SIX = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.0])


def test_dataset_accepts_1d_points_as_column():
    ds = Dataset([0.0, 3.0])
    assert ds.points.shape == (2, 1)
    assert ds.n == 2 and ds.d == 1 and ds.k_true is None


@pytest.mark.parametrize(
    "points, labels",
    [
        ([[0.0, np.nan]], None),
        ([[0.0, np.inf]], None),
        (np.zeros((0, 2)), None),
        ([[0.0], [1.0]], [0]),
        ([[0.0], [1.0]], [0, -1]),
        ([[0.0], [1.0]], [0, 0.5]),
    ],
)
def test_dataset_rejects_invalid_input(points, labels):
    with pytest.raises(InvalidInputError):
        Dataset(points, labels)


def test_non_finite_error_names_location():
    with pytest.raises(InvalidInputError, match="row 1, column 0"):
        Dataset([[0.0, 1.0], [np.nan, 2.0]])


def test_cluster_assignment_checks_k():
    ClusterAssignment(labels=[0, 1, 1], k=2)
    with pytest.raises(SarfcError):
        ClusterAssignment(labels=[0, 1, 1], k=3)


def test_distance_examples():
    assert pairwise_distances(Dataset([0.0, 3.0])).matrix[0, 1] == 3.0
    assert pairwise_distances(Dataset([[0.0, 0.0], [3.0, 4.0]])).matrix[0, 1] == 5.0


@pytest.mark.parametrize("seed", range(5))
def test_symmetric_zero_diagonal(seed):
    pts = np.random.default_rng(seed).normal(size=(60, 3))
    for mode in ("full", "streamed"):
        dv = DistanceView(pts, mode=mode)
        m = dv.block(np.arange(60))
        assert np.all(np.diag(m) == 0)
        assert np.array_equal(m, m.T)
        assert np.all(m >= 0)


@pytest.mark.parametrize("seed", range(3))
def test_streamed_matches_full_exactly(seed):
    pts = np.random.default_rng(seed).normal(size=(500, 2))
    full = DistanceView(pts, mode="full")
    streamed = DistanceView(pts, mode="streamed")
    rows = np.arange(0, 500, 7)
    assert np.array_equal(full.block(rows), streamed.block(rows))
    for r in (1, 2, 3):
        assert np.array_equal(rth_neighbor_distance(full, r), rth_neighbor_distance(streamed, r))


def test_streamed_view_has_no_matrix():
    dv = DistanceView(np.zeros((3, 1)), mode="streamed")
    with pytest.raises(SarfcError):
        dv.matrix


def test_iter_blocks_respects_budget():
    pts = np.random.default_rng(0).normal(size=(300, 2))
    dv = DistanceView(pts, mode="streamed")
    covered = np.concatenate([rows for rows, _ in dv.iter_blocks(max_elements=3000)])
    assert np.array_equal(covered, np.arange(300))
    assert dv.peak_block_elements <= 3000


def test_full_mode_limit(monkeypatch):
    import sarfc.core as core

    monkeypatch.setattr(core, "FULL_MATRIX_LIMIT", 10)
    with pytest.raises(InvalidParameterError):
        DistanceView(np.zeros((11, 1)), mode="full")
    assert DistanceView(np.zeros((11, 1))).mode == "streamed"


def test_precomputed_matrix_validation():
    DistanceView(matrix=[[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(InvalidInputError):
        DistanceView(matrix=[[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(InvalidInputError):
        DistanceView(matrix=[[1.0, 1.0], [1.0, 0.0]])


def test_only_euclidean_metric():
    with pytest.raises(InvalidParameterError):
        DistanceView(np.zeros((2, 1)), metric="cityblock")


@pytest.mark.parametrize(
    "r, expected",
    [(1, [1, 1, 1, 1, 1, 1]), (2, [2, 1, 2, 2, 1, 2])],
)
def test_rth_neighbor_examples(r, expected):
    dv = DistanceView(SIX)
    got = rth_neighbor_distance(dv, r)
    assert np.array_equal(got, expected)
    # same values without the KD-tree path
    assert np.array_equal(rth_neighbor_distance(DistanceView(matrix=dv.matrix), r), expected)


def test_rth_neighbor_coincident_points():
    assert np.array_equal(rth_neighbor_distance(DistanceView([[1.0, 1.0], [1.0, 1.0]]), 1), [0.0, 0.0])


@pytest.mark.parametrize("r", [0, 6, 7])
def test_rth_neighbor_rejects_bad_r(r):
    with pytest.raises(InvalidParameterError):
        rth_neighbor_distance(DistanceView(SIX), r)


def test_rth_neighbor_subset_and_monotone(rng):
    pts = rng.normal(size=(80, 2))
    dv = DistanceView(pts)
    vals = np.array([rth_neighbor_distance(dv, r) for r in range(1, 6)])
    assert np.all(np.diff(vals, axis=0) >= 0)
    sub = np.arange(0, 80, 3)
    brute = np.sort(dv.matrix[np.ix_(sub, sub)], axis=1)[:, 2]
    assert np.array_equal(rth_neighbor_distance(dv, 2, sub), brute)


def test_block_budget_constant_is_sane():
    assert BLOCK_ELEMENTS >= 1_000_000
