import numpy as np
import pytest

from sarfc.core import Dataset, DistanceView
from sarfc.data_io import generate_synthetic
from sarfc.metrics import accuracy
from sarfc.noise import MIN_POINTS
from sarfc.pipeline import PipelineError, assign_border, sarfc


def one_shot(labels, points):
    """Nearest originally labelled point for every unlabelled one."""
    labels = np.asarray(labels)
    done = np.flatnonzero(labels >= 0)
    out = labels.copy()
    for u in np.flatnonzero(labels < 0):
        d = np.linalg.norm(points[done] - points[u], axis=1)
        out[u] = labels[done[np.argmin(d)]]
    return out


def test_border_chain_follows_new_labels():
    # 3.5 joins cluster 1 first (1.9 < 2.0); 2.0 is then 1.5 from it
    pts = np.array([[0.0], [2.0], [3.5], [5.4]])
    labels = [0, -1, -1, 1]
    got = assign_border(labels, DistanceView(pts))
    assert got.tolist() == [0, 1, 1, 1]
    assert one_shot(labels, pts).tolist() == [0, 0, 1, 1]


def test_border_tie_prefers_smaller_labelled_index():
    pts = np.array([[0.0], [1.0], [2.0]])
    assert assign_border([0, -1, 1], DistanceView(pts)).tolist() == [0, 0, 1]
    assert assign_border([1, -1, 0], DistanceView(pts)).tolist() == [1, 1, 0]


def test_border_without_unlabelled_is_identity():
    labels = np.array([0, 1, 1])
    out = assign_border(labels, DistanceView(np.arange(3.0)[:, None]))
    assert np.array_equal(out, labels) and out is not labels


def test_border_needs_a_seed():
    with pytest.raises(ValueError):
        assign_border([-1, -1], DistanceView(np.arange(2.0)[:, None]))


@pytest.mark.parametrize("seed", range(5))
def test_border_keeps_dense_labels_and_is_total(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(120, 2))
    labels = np.where(rng.random(120) < 0.4, rng.integers(0, 3, 120), -1)
    labels[0] = 0
    out = assign_border(labels, DistanceView(pts))
    assert (out >= 0).all()
    assert np.array_equal(out[labels >= 0], labels[labels >= 0])


def test_border_streamed_equals_full(rng):
    pts = rng.normal(size=(400, 3))
    labels = np.where(rng.random(400) < 0.5, rng.integers(0, 4, 400), -1)
    a = assign_border(labels, DistanceView(pts, mode="full"))
    b = assign_border(labels, DistanceView(pts, mode="streamed"))
    assert np.array_equal(a, b)


def test_single_blob_is_one_cluster():
    pts = np.random.default_rng(0).normal(size=(500, 2))
    rep = sarfc(Dataset(pts))
    assert rep.k == 1
    assert rep.dense_count + rep.border_count == 500


@pytest.mark.parametrize("seed", range(3))
def test_two_blobs(seed):
    ds = generate_synthetic("blobs", n=200, k=2, seed=seed)
    rep = sarfc(ds)
    assert rep.k == 2 and accuracy(rep.labels, ds.labels) == 1.0


def test_deterministic():
    ds = generate_synthetic("blobs", n=300, k=3, seed=4)
    a, b = sarfc(ds, trace=True), sarfc(ds, trace=True)
    assert np.array_equal(a.labels, b.labels) and a.fission_trace == b.fission_trace


@pytest.mark.parametrize("scale", [1e-3, 7.0, 1e4])
def test_k_scale_invariant(scale):
    ds = generate_synthetic("blobs", n=200, k=3, seed=1)
    base = sarfc(ds)
    scaled = sarfc(Dataset(ds.points * scale + 5.0, ds.labels))
    assert scaled.k == base.k
    assert accuracy(scaled.labels, base.labels) == 1.0


def test_small_input_skips_noise_id():
    pts = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    rep = sarfc(Dataset(pts))
    assert rep.k == 2 and rep.diagnostics is None and rep.border_count == 0
    assert any(str(MIN_POINTS) in n for n in rep.notes)


def test_noise_id_off_clusters_everything():
    ds = generate_synthetic("blobs", n=200, k=2, seed=0)
    rep = sarfc(ds, noise_id=False)
    assert rep.dense_count == 200 and rep.assignment.dense_mask.all()


def test_stage_timings_recorded():
    rep = sarfc(generate_synthetic("blobs", n=200, k=2, seed=0))
    assert set(rep.timings) == {"distances", "density", "noise_id", "fission", "border"}


def test_identical_points_form_one_cluster():
    with pytest.warns(RuntimeWarning):
        rep = sarfc(Dataset(np.ones((40, 2))))
    assert rep.k == 1 and (rep.labels == 0).all()
    assert sum("zero range" in n for n in rep.notes) == 2


def test_r_beyond_subset_never_splits():
    ds = generate_synthetic("blobs", n=200, k=2, seed=0)
    rep = sarfc(ds, r=500)
    assert rep.k == 1 and rep.params.d0_r == np.inf


def test_bad_cut_fails_in_fission_stage():
    with pytest.raises(PipelineError) as info:
        sarfc(generate_synthetic("blobs", n=200, k=2, seed=0), cut="middle")
    assert info.value.stage == "fission"
