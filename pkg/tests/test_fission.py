import numpy as np
import pytest

from sarfc.checks import partition, random_chain, straggler_dataset
from sarfc.core import DistanceView, InvalidParameterError
from sarfc.fission import CrackWitness, exceeds, fission_params, mc_r, rfc, select_r, split_subset

SIX = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])


def brute_mc(points, r):
    """Largest r-span gap over all sorted rows, ties to smallest (row, k)."""
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    s = np.sort(d, axis=1)
    gaps = s[:, r:] - s[:, :-r]
    best = gaps.max()
    row, k = np.argwhere(gaps == best)[0]
    return best, row, k


@pytest.mark.parametrize("n, r", [(2, 1), (600, 1), (1000, 1), (1001, 2), (1500, 2), (2000, 2), (2001, 3), (50_000, 3)])
def test_select_r(n, r):
    assert select_r(n) == r


def test_select_r_capped():
    assert select_r(2) == 1


def test_mc_examples():
    dv = DistanceView(SIX)
    w = mc_r(np.arange(6), dv, 1)
    assert (w.gap, w.row, w.lo, w.hi) == (8.0, 0, 2, 3)
    w2 = mc_r(np.arange(6), dv, 2)
    assert w2.gap == 9.0 and w2.row == 0 and w2.k == 1


def test_mc_equilateral():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    dv = DistanceView(pts)
    w = mc_r(np.arange(3), dv, 1)
    d0 = fission_params(np.arange(3), dv, 1).d0_r
    assert not exceeds(w.gap, d0)


def test_mc_small_subset_is_none():
    assert mc_r([0, 1], DistanceView(SIX), 2) is None


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("r", [1, 2, 3])
def test_mc_matches_brute_force(seed, r):
    pts = np.random.default_rng(seed).normal(size=(40, 2))
    w = mc_r(np.arange(40), DistanceView(pts), r)
    gap, row, k = brute_mc(pts, r)
    assert (w.gap, w.row, w.k) == (gap, row, k)


def test_mc_tie_breaks_to_smallest_row():
    # rows 0 and 5 see the same 8-wide crack; point 0 wins
    assert mc_r(np.arange(6), DistanceView(SIX), 1).row == 0


def test_split_examples():
    dv = DistanceView(SIX)
    a, b = split_subset(np.arange(6), mc_r(np.arange(6), dv, 1), dv)
    assert a.tolist() == [0, 1, 2] and b.tolist() == [3, 4, 5]


@pytest.mark.parametrize("seed", range(5))
def test_split_partitions_and_keeps_row(seed):
    pts = np.random.default_rng(seed).normal(size=(50, 2))
    dv = DistanceView(pts)
    idx = np.arange(50)
    for r in (1, 2, 3):
        w = mc_r(idx, dv, r)
        for cut in ("crack", "span"):
            a, b = split_subset(idx, w, dv, cut)
            assert a.size and b.size
            assert np.array_equal(np.sort(np.concatenate([a, b])), idx)
            assert w.row in a


def test_cut_rules_agree_for_r1(rng):
    pts = rng.normal(size=(60, 2))
    dv = DistanceView(pts)
    w = mc_r(np.arange(60), dv, 1)
    assert w.edge("crack") == w.edge("span")


def test_crack_cut_uses_widest_inner_gap():
    w = CrackWitness(row=0, lo=1, hi=2, gap=5.0, k=1, window=(1.0, 5.5, 6.0))
    assert w.edge("crack") == 1.0
    assert w.edge("span") == 1.0
    w = CrackWitness(row=0, lo=1, hi=2, gap=5.0, k=1, window=(1.0, 1.5, 6.0))
    assert w.edge("crack") == 1.5
    with pytest.raises(InvalidParameterError):
        w.edge("middle")


@pytest.mark.parametrize(
    "points, expected",
    [
        (SIX, [{0, 1, 2}, {3, 4, 5}]),
        (np.arange(12.0)[:, None], [set(range(12))]),
        (np.array([[0.0], [7.0]]), [{0, 1}]),
    ],
)
def test_rfc_examples(points, expected):
    assign, params = rfc(np.arange(len(points)), DistanceView(points), r=1)
    assert partition(assign.labels) == expected


def test_rfc_collinear_points_do_not_split_on_rounding():
    for h in (0.1, 0.3, 0.7):
        pts = np.column_stack([np.arange(40) * h, np.arange(40) * h * np.sqrt(2)])
        assert rfc(np.arange(40), DistanceView(pts), r=1)[0].k == 1


def test_rfc_d0_fixed_from_input():
    dv = DistanceView(SIX)
    _, params = rfc(np.arange(6), dv, r=2)
    assert params.d0_r == 2.0
    assign, params = rfc(np.arange(6), dv, r=1, d0_override=8.0)
    assert assign.k == 1 and params.d0_r == 8.0


def test_rfc_rejects_unknown_cut():
    with pytest.raises(InvalidParameterError):
        rfc(np.arange(6), DistanceView(SIX), cut="middle")


def test_rfc_labels_follow_subset_order():
    dv = DistanceView(SIX)
    subset = np.array([5, 3, 0, 1])
    assign, _ = rfc(subset, dv, r=1)
    # labels align with sorted(subset) = [0, 1, 3, 5]
    assert assign.labels.tolist() == [0, 0, 1, 1]


@pytest.mark.parametrize("seed", range(4))
def test_rfc_invariant_to_point_order(seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, 30, (4, 2))
    pts = np.vstack([rng.normal(c, 0.5, (30, 2)) for c in centers])
    perm = rng.permutation(len(pts))
    a, _ = rfc(np.arange(len(pts)), DistanceView(pts), r=1)
    b, _ = rfc(np.arange(len(pts)), DistanceView(pts[perm]), r=1)
    mapped = partition(a.labels)
    inv = np.argsort(perm)
    assert partition(b.labels[inv]) == mapped


def test_rfc_trace_counts_splits():
    trace = []
    assign, _ = rfc(np.arange(6), DistanceView(np.array([[0.0], [1.0], [5.0], [6.0], [20.0], [21.0]])), r=1, trace=trace)
    assert assign.k == 3 and len(trace) == assign.k - 1
    assert trace[0]["size"] == 6 and sum(trace[0]["sizes"]) == 6


def test_rfc_largest_part_first():
    trace = []
    pts = np.array([[0.0], [1.0], [2.0], [3.0], [10.0], [11.0], [30.0], [31.0], [32.0], [33.0], [34.0]])
    rfc(np.arange(len(pts)), DistanceView(pts), r=1, trace=trace)
    sizes = [t["size"] for t in trace]
    assert sizes[0] == 11 and sizes[1] == 6


def test_rfc_streamed_equals_full():
    pts = np.random.default_rng(3).normal(size=(300, 2))
    pts[150:] += 8.0
    a, pa = rfc(np.arange(300), DistanceView(pts, mode="full"), r=2)
    b, pb = rfc(np.arange(300), DistanceView(pts, mode="streamed"), r=2)
    assert np.array_equal(a.labels, b.labels) and pa == pb


@pytest.mark.parametrize("seed", range(30))
def test_chain_bound(seed):
    rng = np.random.default_rng(seed)
    r = 1 + seed % 3
    n = int(rng.integers(10, 120))
    pts = random_chain(rng, r, n, dim=2)
    dv = DistanceView(pts)
    d0 = fission_params(np.arange(n), dv, r).d0_r
    assert not exceeds(mc_r(np.arange(n), dv, r).gap, d0)


def test_endpoint_only_chain_is_not_enough():
    # a path alternating between two far groups keeps f(x_p, x_{p+2}) small
    # while consecutive steps are long; the bound needs every pair in the window
    a = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [0.3, 0.0]])
    b = a + (10.0, 0.0)
    path = np.empty((8, 2))
    path[0::2] = a
    path[1::2] = b
    dv = DistanceView(path)
    d0 = fission_params(np.arange(8), dv, 2).d0_r
    assert all(np.linalg.norm(path[p] - path[p + 2]) <= d0 + 1e-12 for p in range(6))
    assert exceeds(mc_r(np.arange(8), dv, 2).gap, d0)


@pytest.mark.parametrize("stragglers, r, k", [(2, 1, 3), (2, 2, 2), (3, 1, 3), (3, 3, 2)])
def test_straggler_scenario(stragglers, r, k):
    pts, _ = straggler_dataset(stragglers)
    assert rfc(np.arange(len(pts)), DistanceView(pts), r=r)[0].k == k


def test_span_rule_strands_window_points():
    # cutting at the start of the span sends the stragglers inside it to the
    # far side, where they later split off on their own
    pts, _ = straggler_dataset(3)
    assert rfc(np.arange(len(pts)), DistanceView(pts), r=3, cut="span")[0].k > 2
