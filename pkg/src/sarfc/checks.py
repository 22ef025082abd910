"""Property checks that need no external data.

Used by the test-suite and by ``sarfc check``:

* randomized chains on which ``MC^(r) <= d0^(r)`` must hold,
* a two-blob set with a few stragglers that r = 1 splits off and larger
  ``r`` keeps attached,
* small hand-traced fixtures pinning the r = 1 behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .core import DistanceView
from .fission import exceeds, mc_r, rfc


def window_max(points: np.ndarray, r: int) -> float:
    """Largest distance between two path points at most ``r`` steps apart."""
    n = len(points)
    best = 0.0
    for s in range(1, min(r, n - 1) + 1):
        best = max(best, float(np.linalg.norm(points[s:] - points[:-s], axis=1).max()))
    return best


def d0(points: np.ndarray, r: int) -> float:
    """Largest r-th nearest-neighbour distance (brute force)."""
    dist = np.sort(cdist(points, points), axis=1)
    return float(dist[:, r].max())


def random_chain(rng: np.random.Generator, r: int, n: int, dim: int = 2, max_tries: int = 200) -> Optional[np.ndarray]:
    """Points along a path whose every r-step window is no longer than ``d0^(r)``.

    A random walk with uneven steps is followed by a straight tail whose
    spacing lifts the tail end's r-th neighbour distance to the longest
    window of the walk.  Draws that violate the window condition are
    rejected; ``None`` after ``max_tries`` rejections.
    """
    for _ in range(max_tries):
        n_tail = min(r + 1, n - 2)
        n_walk = n - n_tail
        steps = rng.normal(size=(n_walk - 1, dim))
        steps *= (rng.uniform(0.2, 1.0, n_walk - 1) / np.linalg.norm(steps, axis=1))[:, None]
        walk = np.vstack([np.zeros(dim), np.cumsum(steps, axis=0)])
        w = window_max(walk, r)
        direction = steps[-1] / np.linalg.norm(steps[-1])
        tail = walk[-1] + np.outer(np.arange(1, n_tail + 1), direction * (w / r))
        pts = np.vstack([walk, tail])
        if window_max(pts, r) <= d0(pts, r):
            return pts
    return None


@dataclass
class ChainResult:
    trials: int
    violations: int
    rejected: int
    worst_ratio: float


def chain_suite(trials: int = 1000, seed: int = 0, n_range=(10, 300), rs=(1, 2, 3)) -> ChainResult:
    """Check ``MC^(r)(C) <= d0^(r)(C)`` on ``trials`` accepted random chains.

    Comparison uses :func:`~sarfc.fission.exceeds`, the same rounding margin
    that decides splits.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    rejected = 0
    worst = 0.0
    done = 0
    while done < trials:
        r = int(rs[done % len(rs)])
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        pts = random_chain(rng, r, n, dim=int(rng.integers(1, 4)))
        if pts is None:
            rejected += 1
            continue
        dv = DistanceView(pts)
        wit = mc_r(np.arange(n), dv, r)
        limit = float(np.sort(dv.matrix, axis=1)[:, r].max())
        worst = max(worst, wit.gap / limit)
        violations += exceeds(wit.gap, limit)
        done += 1
    return ChainResult(trials=done, violations=violations, rejected=rejected, worst_ratio=worst)


def straggler_dataset(stragglers: int, gap: float = 1.8, spacing: float = 0.4) -> tuple:
    """Two 5 x 5 unit grids 6 apart plus a short column of stragglers.

    The stragglers sit ``gap`` to the right of the first grid, ``spacing``
    apart.  Returns ``(points, labels)`` with stragglers labelled as the
    first grid.
    """
    grid = np.array([(x, y) for x in range(5) for y in range(5)], dtype=np.float64)
    extra = np.array([(4.0 + gap, 1.5 + spacing * i) for i in range(stragglers)])
    pts = np.vstack([grid, grid + (10.0, 0.0), extra])
    labels = np.repeat([0, 1, 0], [25, 25, stragglers])
    return pts, labels


# (name, points, expected partition as sets of point indices).  Expected
# partitions are traced by hand from sorted distance rows with d0^(1).
FC_FIXTURES = (
    # d0 = 1; row 0 sorted (0,1,2,10,11,12) has one gap of 8.
    ("two_triples_1d", [[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]], [{0, 1, 2}, {3, 4, 5}]),
    # equally spaced: every gap equals d0 = 1, nothing splits.
    ("uniform_grid_1d", [[float(i)] for i in range(10)], [set(range(10))]),
    # the outlier at 20 lifts d0 to 14, which no gap exceeds.
    ("outlier_masks_gaps", [[0.0], [1.0], [2.0], [5.0], [6.0], [20.0]], [set(range(6))]),
    # three unit squares; d0 = 1, every inter-square gap is larger.
    ("three_squares_2d",
     [[0, 0], [0, 1], [1, 0], [1, 1], [5, 0], [5, 1], [6, 0], [6, 1], [0, 8], [1, 8], [0, 9], [1, 9]],
     [{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}]),
    # nested splits: gap 9 first, then 6, then 2 (all > d0 = 1).
    ("pairs_1d", [[0.0], [1.0], [3.0], [4.0], [10.0], [11.0], [20.0], [21.0]],
     [{0, 1}, {2, 3}, {4, 5}, {6, 7}]),
)


def partition(labels) -> list:
    """Clusters of a label vector as a sorted list of index sets."""
    labels = np.asarray(labels)
    return sorted((set(np.flatnonzero(labels == c).tolist()) for c in np.unique(labels)), key=min)


def fc_fixture_results() -> list:
    """``(name, ok, got, expected)`` for every r = 1 fixture."""
    out = []
    for name, pts, expected in FC_FIXTURES:
        pts = np.asarray(pts, dtype=np.float64)
        assign, _ = rfc(np.arange(len(pts)), DistanceView(pts), r=1)
        got = partition(assign.labels)
        want = sorted(expected, key=min)
        out.append((name, got == want, got, want))
    return out


def straggler_results() -> list:
    """``(description, ok, k)`` for the straggler scenario."""
    out = []
    for stragglers, r, want in ((2, 1, 3), (2, 2, 2), (3, 3, 2)):
        pts, _ = straggler_dataset(stragglers)
        assign, _ = rfc(np.arange(len(pts)), DistanceView(pts), r=r)
        out.append((f"{stragglers} stragglers, r={r}: expect k={want}", assign.k == want, assign.k))
    return out
