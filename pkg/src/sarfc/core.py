"""Shared types, error classes and Euclidean distance access.

Every module downstream works on point indices into a single
:class:`DistanceView`.  A view either holds the full symmetric matrix or
computes row blocks on demand from the coordinates, so large datasets can be
clustered without ever allocating an ``n x n`` array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

FULL_MATRIX_LIMIT = 20_000
# Upper bound on the number of float64 entries held by one streamed block.
BLOCK_ELEMENTS = 4_000_000


class SarfcError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SarfcError, ValueError):
    """Input data violates a precondition (shape, finiteness, labels)."""


class InvalidParameterError(SarfcError, ValueError):
    """A numeric parameter is outside its legal range."""


class DegenerateDataError(SarfcError, ValueError):
    """Data carries no usable spread (e.g. all samples identical)."""


class DatasetTooSmallError(SarfcError):
    """Too few points for the requested stage."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Points in R^d with optional integer ground-truth labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError(f"points must be an n x d array with n, d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            bad = np.argwhere(~np.isfinite(pts))[0]
            raise InvalidInputError(f"non-finite coordinate at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (pts.shape[0],):
                raise InvalidInputError(f"expected {pts.shape[0]} labels, got shape {lab.shape}")
            if lab.size and (not np.all(np.equal(np.mod(lab, 1), 0)) or lab.min() < 0):
                raise InvalidInputError("labels must be non-negative integers")
            object.__setattr__(self, "labels", lab.astype(np.int64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def k_true(self) -> Optional[int]:
        if self.labels is None:
            return None
        return int(np.unique(self.labels).size)


@dataclass
class ClusterAssignment:
    """Total labelling of a point set.

    ``labels`` hold ids ``0..k-1``; ``dense_mask`` marks members of the dense
    subset that was clustered directly (border points are ``False``).
    """

    labels: np.ndarray
    k: int
    dense_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.dense_mask is None:
            self.dense_mask = np.ones(self.labels.shape, dtype=bool)
        if self.labels.size and np.unique(self.labels).size != self.k:
            raise SarfcError(f"k={self.k} but labels contain {np.unique(self.labels).size} distinct ids")


class DistanceView:
    """Symmetric Euclidean distance access, full or row-streamed.

    Args:
        points: n x d coordinates.  May be ``None`` when ``matrix`` is given.
        mode: ``"full"``, ``"streamed"`` or ``"auto"`` (full up to
            :data:`FULL_MATRIX_LIMIT` points).
        metric: only ``"euclidean"`` is supported.
        matrix: optional precomputed distance matrix; forces full mode.

    All distances, whatever the mode, come from :func:`scipy.spatial.distance.cdist`
    evaluated pair by pair, so full and streamed views agree bit for bit.
    """

    def __init__(self, points=None, mode: str = "auto", metric: str = "euclidean", matrix=None):
        if metric != "euclidean":
            raise InvalidParameterError(f"unsupported metric {metric!r}; only 'euclidean' is available")
        self.metric = metric
        self.peak_block_elements = 0
        self._tree = None
        if matrix is not None:
            mat = np.asarray(matrix, dtype=np.float64)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise InvalidInputError("distance matrix must be square")
            if not np.all(np.isfinite(mat)):
                raise InvalidInputError("distance matrix contains non-finite entries")
            if np.any(np.diag(mat) != 0) or np.any(mat != mat.T) or np.any(mat < 0):
                raise InvalidInputError("distance matrix must be symmetric, non-negative, zero on the diagonal")
            self.points = None if points is None else np.asarray(points, dtype=np.float64)
            self.n = mat.shape[0]
            self.mode = "full"
            self._matrix = mat
            return
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("non-finite coordinate")
        self.points = pts
        self.n = pts.shape[0]
        if mode == "auto":
            mode = "full" if self.n <= FULL_MATRIX_LIMIT else "streamed"
        if mode not in ("full", "streamed"):
            raise InvalidParameterError(f"unknown mode {mode!r}")
        if mode == "full" and self.n > FULL_MATRIX_LIMIT:
            raise InvalidParameterError(
                f"full mode is limited to {FULL_MATRIX_LIMIT} points (got {self.n}); use streamed mode"
            )
        self.mode = mode
        self._matrix = cdist(pts, pts) if mode == "full" else None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            raise SarfcError("streamed view has no materialized matrix")
        return self._matrix

    def block(self, rows, cols=None) -> np.ndarray:
        """Distances from ``rows`` to ``cols`` (all points when ``cols`` is None)."""
        rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        if self._matrix is not None:
            out = self._matrix[rows] if cols is None else self._matrix[np.ix_(rows, np.asarray(cols, dtype=np.intp))]
        else:
            other = self.points if cols is None else self.points[np.asarray(cols, dtype=np.intp)]
            out = cdist(self.points[rows], other)
        self.peak_block_elements = max(self.peak_block_elements, out.size)
        return out

    def row(self, i: int, cols=None) -> np.ndarray:
        return self.block([i], cols)[0]

    def iter_blocks(self, rows=None, cols=None, max_elements: int = BLOCK_ELEMENTS) -> Iterator[tuple]:
        """Yield ``(row_indices, block)`` pairs covering ``rows`` in order."""
        rows = np.arange(self.n) if rows is None else np.asarray(rows, dtype=np.intp)
        width = self.n if cols is None else len(cols)
        step = max(1, max_elements // max(width, 1))
        for start in range(0, len(rows), step):
            chunk = rows[start:start + step]
            yield chunk, self.block(chunk, cols)

    def kdtree(self, subset=None):
        if self.points is None:
            return None
        if subset is None:
            if self._tree is None:
                self._tree = cKDTree(self.points)
            return self._tree
        return cKDTree(self.points[subset])


def pairwise_distances(dataset: Dataset, mode: str = "auto") -> DistanceView:
    """Build a :class:`DistanceView` over ``dataset.points``."""
    return DistanceView(dataset.points, mode=mode)


def rth_neighbor_distance(dv: DistanceView, r: int, subset=None) -> np.ndarray:
    """Distance from each point to its r-th nearest neighbour.

    Self is excluded; coincident points count as neighbours at distance 0.
    When ``subset`` is given, neighbours are searched within the subset only
    and the result is aligned with ``subset``.
    """
    idx = np.arange(dv.n) if subset is None else np.asarray(subset, dtype=np.intp)
    m = idx.size
    if not isinstance(r, (int, np.integer)) or r < 1 or r >= m:
        raise InvalidParameterError(f"r must satisfy 1 <= r <= n-1 (r={r}, n={m})")
    r = int(r)
    tree = dv.kdtree(None if subset is None else idx)
    if tree is not None:
        # The tree only picks the neighbour set; the value itself is recomputed
        # with cdist so it matches every other distance in the package exactly.
        _, nbr = tree.query(dv.points[idx], k=r + 1)
        pts = dv.points
        vals = np.array([cdist(pts[idx[j]][None], pts[idx[nbr[j]]])[0] for j in range(m)])
        return np.sort(vals, axis=1)[:, r]
    out = np.empty(m)
    pos = 0
    for _, blk in dv.iter_blocks(idx, idx):
        out[pos:pos + blk.shape[0]] = np.partition(blk, r, axis=1)[:, r]
        pos += blk.shape[0]
    return out
