"""End-to-end SARFC: dense subset, fission on it, then border absorption."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BLOCK_ELEMENTS, ClusterAssignment, Dataset, DistanceView, SarfcError, pairwise_distances
from .density import point_densities
from .fission import FissionParams, rfc
from .noise import MIN_POINTS, SplitDiagnostics, identify_dense


class PipelineError(SarfcError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class _Stage:
    """Time a stage and tag any error it raises with the stage name."""

    def __init__(self, name: str, timings: dict):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, PipelineError) and isinstance(exc, (SarfcError, ValueError, MemoryError)):
            raise PipelineError(self.name, exc) from exc
        return False


@dataclass
class PipelineReport:
    assignment: ClusterAssignment
    diagnostics: Optional[SplitDiagnostics]
    dense_count: int
    border_count: int
    params: FissionParams
    fission_trace: Optional[list] = None
    timings: dict = field(default_factory=dict)
    density: object = None
    notes: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.assignment.k

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels


def assign_border(labels, dv: DistanceView) -> np.ndarray:
    """Absorb unlabelled points (label ``-1``) one at a time.

    Each step takes the globally closest (labelled, unlabelled) pair, ties
    broken by the smaller labelled index and then the smaller unlabelled
    index, and copies the label across.  Newly labelled points immediately
    become candidates for the remaining ones.
    """
    labels = np.array(labels, dtype=np.int64, copy=True)
    todo = np.flatnonzero(labels < 0)
    if todo.size == 0:
        return labels
    done = np.flatnonzero(labels >= 0)
    if done.size == 0:
        raise ValueError("no labelled point to grow from")
    best_d = np.full(todo.size, np.inf)
    best_a = np.full(todo.size, np.iinfo(np.int64).max, dtype=np.int64)
    # initial nearest labelled point, scanned in increasing labelled index so
    # that strict '<' keeps the smallest index on ties
    for start in range(0, done.size, max(1, BLOCK_ELEMENTS // todo.size)):
        cols = done[start:start + max(1, BLOCK_ELEMENTS // todo.size)]
        blk = dv.block(todo, cols)
        j = np.argmin(blk, axis=1)
        d = blk[np.arange(todo.size), j]
        better = d < best_d
        best_d[better] = d[better]
        best_a[better] = cols[j[better]]
    active = np.ones(todo.size, dtype=bool)
    for _ in range(todo.size):
        cand = np.flatnonzero(active)
        # lexicographic min over (distance, labelled index, unlabelled index)
        order = np.lexsort((todo[cand], best_a[cand], best_d[cand]))
        pick = cand[order[0]]
        u = todo[pick]
        labels[u] = labels[best_a[pick]]
        active[pick] = False
        rest = np.flatnonzero(active)
        if rest.size == 0:
            break
        d = dv.row(u, todo[rest])
        upd = (d < best_d[rest]) | ((d == best_d[rest]) & (u < best_a[rest]))
        best_d[rest[upd]] = d[upd]
        best_a[rest[upd]] = u
    return labels


def sarfc(
    dataset: Dataset,
    *,
    r: Optional[int] = None,
    noise_id: bool = True,
    mode: str = "auto",
    trace: bool = False,
    dv: Optional[DistanceView] = None,
    cut: str = "crack",
) -> PipelineReport:
    """Cluster ``dataset`` without user parameters.

    Args:
        r: override of the robustness order (default: chosen from |C|).
        noise_id: when False, fission runs on every point.
        mode: distance storage, see :class:`~sarfc.core.DistanceView`.
        trace: record one entry per split in ``fission_trace``.
        cut: where qualifying subsets are cut, see :mod:`sarfc.fission`.

    Raises:
        PipelineError: a stage failed; ``.stage`` is one of ``distances``,
            ``density``, ``noise_id``, ``fission`` or ``border``.
    """
    timings = {}
    notes = []
    with _Stage("distances", timings):
        if dv is None:
            dv = pairwise_distances(dataset, mode=mode)

    diag = None
    profile = None
    if noise_id and dataset.n >= MIN_POINTS:
        with _Stage("density", timings):
            profile = point_densities(dataset)
            notes.extend(profile.flags)
        with _Stage("noise_id", timings):
            dense, diag = identify_dense(profile)
            notes.extend(diag.warnings)
    else:
        if noise_id:
            notes.append(f"n={dataset.n} < {MIN_POINTS}: noise identification skipped")
        dense = np.arange(dataset.n)

    steps = [] if trace else None
    with _Stage("fission", timings):
        dense_assign, params = rfc(dense, dv, r=r, trace=steps, cut=cut)

    with _Stage("border", timings):
        labels = np.full(dataset.n, -1, dtype=np.int64)
        labels[dense] = dense_assign.labels
        labels = assign_border(labels, dv)

    mask = np.zeros(dataset.n, dtype=bool)
    mask[dense] = True
    assignment = ClusterAssignment(labels=labels, k=dense_assign.k, dense_mask=mask)
    return PipelineReport(
        assignment=assignment,
        diagnostics=diag,
        dense_count=int(dense.size),
        border_count=int(dataset.n - dense.size),
        params=params,
        fission_trace=steps,
        timings=timings,
        density=profile,
        notes=notes,
    )
