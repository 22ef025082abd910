"""Robust fission clustering.

A set is split along its widest *crack*: for every point, sort its distances
to the rest of the set and look at the spread between sorted positions ``k``
and ``k + r``.  The largest such spread, ``MC^(r)``, is compared with
``d0^(r)``, the largest r-th nearest-neighbour distance of the input set.
Subsets keep splitting while ``MC^(r) > d0^(r)``; with ``r = 1`` this is
plain fission clustering, larger ``r`` stops groups of up to ``r`` stray
points from being cut off as clusters of their own.

Where a qualifying subset is cut is controlled by ``cut``:

* ``"crack"`` (default): at the widest single gap among the ``r + 1``
  sorted distances spanned by the witness, so the ``r - 1`` points inside
  the span stay with the side they are closer to.
* ``"span"``: at the near end of the span; the points inside it go to the
  far side.  For ``r = 1`` both rules coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    BLOCK_ELEMENTS,
    ClusterAssignment,
    DistanceView,
    InvalidParameterError,
    SarfcError,
    rth_neighbor_distance,
)


@dataclass(frozen=True)
class FissionParams:
    r: int
    d0_r: float


CUT_RULES = ("crack", "span")
# Gaps within this relative margin of d0 count as equal: a difference of two
# computed distances carries rounding error, and collinear points make the
# gap equal d0 in exact arithmetic.
SPLIT_RTOL = 1e-9


def exceeds(gap: float, d0: float) -> bool:
    """``gap > d0`` beyond floating-point rounding."""
    return gap > d0 * (1.0 + SPLIT_RTOL)


@dataclass(frozen=True)
class CrackWitness:
    """Row point ``row`` and the two points ``lo``/``hi`` bounding the widest r-span gap.

    ``window`` holds the ``r + 1`` sorted distances from ``row`` that the span
    covers, starting at sorted position ``k``.
    """

    row: int
    lo: int
    hi: int
    gap: float
    k: int = 0
    window: tuple = ()

    def edge(self, cut: str = "crack") -> float:
        """Largest distance from ``row`` that stays on the near side."""
        if cut == "span":
            return self.window[0]
        if cut != "crack":
            raise InvalidParameterError(f"unknown cut rule {cut!r}; choose from {CUT_RULES}")
        steps = np.diff(self.window)
        return self.window[int(np.argmax(steps))]


def select_r(n: int) -> int:
    """Robustness order chosen from the size of the set being clustered."""
    if n <= 1000:
        r = 1
    elif n <= 2000:
        r = 2
    else:
        r = 3
    return max(1, min(r, n - 1))


def mc_r(subset, dv: DistanceView, r: int) -> Optional[CrackWitness]:
    """Widest r-span gap over all sorted distance rows of ``subset``.

    Returns ``None`` for subsets with at most ``r`` points.  Ties go to the
    smallest row point, then the smallest sorted position.
    """
    idx = np.sort(np.asarray(subset, dtype=np.intp))
    m = idx.size
    if m <= r:
        return None
    best_gap = -1.0
    best_row = -1
    best_k = -1
    for rows, blk in dv.iter_blocks(idx, idx, max_elements=BLOCK_ELEMENTS):
        blk.sort(axis=1)
        gaps = blk[:, r:] - blk[:, :-r]
        kk = np.argmax(gaps, axis=1)
        vals = gaps[np.arange(len(rows)), kk]
        j = int(np.argmax(vals))
        if vals[j] > best_gap:
            best_gap = float(vals[j])
            best_row = int(rows[j])
            best_k = int(kk[j])
    row_d = dv.row(best_row, idx)
    order = np.argsort(row_d, kind="stable")
    window = tuple(float(x) for x in row_d[order[best_k:best_k + r + 1]])
    return CrackWitness(
        row=best_row, lo=int(idx[order[best_k]]), hi=int(idx[order[best_k + r]]), gap=best_gap, k=best_k, window=window
    )


def split_subset(subset, witness: CrackWitness, dv: DistanceView, cut: str = "crack") -> tuple:
    """Cut ``subset`` around the witness row point.

    Points no farther from the row point than ``witness.edge(cut)`` form the
    first part.  With ``cut="span"`` the edge is ``min(f(x_i, x_lo), f(x_i, x_hi))``.
    """
    idx = np.sort(np.asarray(subset, dtype=np.intp))
    row_d = dv.row(witness.row, idx)
    inner = row_d <= witness.edge(cut)
    a, b = idx[inner], idx[~inner]
    if a.size == 0 or b.size == 0:
        raise SarfcError("crack split produced an empty side")
    return a, b


def fission_params(subset, dv: DistanceView, r: Optional[int] = None, d0_override: Optional[float] = None) -> FissionParams:
    idx = np.asarray(subset, dtype=np.intp)
    if r is None:
        r = select_r(idx.size)
    if d0_override is not None:
        d0 = float(d0_override)
    elif idx.size > r:
        d0 = float(rth_neighbor_distance(dv, r, None if idx.size == dv.n else idx).max())
    else:
        d0 = float("inf")
    return FissionParams(r=int(r), d0_r=d0)


def rfc(
    subset,
    dv: DistanceView,
    r: Optional[int] = None,
    d0_override: Optional[float] = None,
    trace=None,
    cut: str = "crack",
):
    """Split ``subset`` until no part has ``MC^(r) > d0^(r)``.

    ``d0^(r)`` is fixed once from the whole input set.  The largest qualifying
    part is split first (ties: smallest first point).  Labels are aligned with
    ``np.sort(subset)`` and numbered by each cluster's smallest point index.

    If ``trace`` is a list, one dict per split is appended to it.

    Returns:
        (ClusterAssignment, FissionParams)
    """
    if cut not in CUT_RULES:
        raise InvalidParameterError(f"unknown cut rule {cut!r}; choose from {CUT_RULES}")
    idx = np.sort(np.asarray(subset, dtype=np.intp))
    if idx.size == 0:
        raise SarfcError("cannot cluster an empty set")
    params = fission_params(idx, dv, r, d0_override)
    r, d0 = params.r, params.d0_r
    parts = [(idx, mc_r(idx, dv, r))]
    while True:
        live = [i for i, (p, w) in enumerate(parts) if w is not None and exceeds(w.gap, d0)]
        if not live:
            break
        pick = min(live, key=lambda i: (-parts[i][0].size, parts[i][0][0]))
        part, wit = parts.pop(pick)
        a, b = split_subset(part, wit, dv, cut)
        if trace is not None:
            trace.append({
                "size": int(part.size), "mc": wit.gap, "d0": d0, "row": wit.row,
                "lo": wit.lo, "hi": wit.hi, "edge": wit.edge(cut), "sizes": [int(a.size), int(b.size)],
            })
        parts.append((a, mc_r(a, dv, r)))
        parts.append((b, mc_r(b, dv, r)))
    parts.sort(key=lambda pw: pw[0][0])
    labels = np.empty(idx.size, dtype=np.int64)
    for lab, (p, _) in enumerate(parts):
        labels[np.searchsorted(idx, p)] = lab
    return ClusterAssignment(labels=labels, k=len(parts)), params
