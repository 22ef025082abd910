"""Self-adaptive split of points into a dense subset and border points.

Densities sorted in descending order are smoothed with a width-5 moving
mean ``V``.  A two-piece linear fit over ``V`` locates the change of trend
``p_r`` (minimum sum of absolute residuals), and the largest turning angle of
the ``V`` polyline at or after ``p_r`` sets the density threshold.

Indices exposed by this module follow the 1-based convention in which ``V``
starts at index 5, i.e. ``v_i`` averages sorted densities ``i-4 .. i`` and is
stored at array position ``i - 5``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import DatasetTooSmallError, InvalidParameterError
from .density import DensityProfile

WINDOW = 5
# Points left at each end of V for the regressions.
BOUNDARY = 5
MIN_POINTS = 2 * BOUNDARY + 6


@dataclass(frozen=True)
class SmoothedSequence:
    v: np.ndarray
    offset: int = WINDOW

    def index(self, pos: int) -> int:
        """1-based sorted-order index of array position ``pos``."""
        return pos + self.offset


@dataclass
class SplitDiagnostics:
    """Indices (1-based) and curves produced while locating the threshold."""

    p_r: int
    p_max: int
    soar_curve: np.ndarray
    soar_index: np.ndarray
    tan_alpha: np.ndarray
    tan_index: np.ndarray
    warnings: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        """Write the SoAR and turning-angle curves as ``curve,index,value`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["curve", "index", "value"])
            for i, v in zip(self.soar_index, self.soar_curve):
                w.writerow(["soar", int(i), f"{v:.6g}"])
            for i, v in zip(self.tan_index, self.tan_alpha):
                w.writerow(["tan_alpha", int(i), f"{v:.6g}"])
            w.writerow(["p_r", self.p_r, ""])
            w.writerow(["p_max", self.p_max, ""])


def smooth_density(profile) -> SmoothedSequence:
    """Width-5 trailing mean of the descending densities.

    Accepts a :class:`DensityProfile` or a descending 1-D array.
    """
    rho_sorted = profile.rho_sorted if isinstance(profile, DensityProfile) else np.asarray(profile, float)
    n = rho_sorted.size
    if n < WINDOW:
        raise DatasetTooSmallError(f"need at least {WINDOW} points to smooth, got {n}")
    # summed in the written order so that v_i is exactly the mean of its window
    v = rho_sorted[WINDOW - 1:].copy()
    for j in range(1, WINDOW):
        v += rho_sorted[WINDOW - 1 - j:n - j]
    return SmoothedSequence(v=v / WINDOW)


def _candidates(m: int) -> np.ndarray:
    """Array positions p (0-based) for which the left fit ends at p."""
    # 1-based index p ranges over [10, n-5]; with n = m + 4 and position = p - 5
    lo = 2 * BOUNDARY - WINDOW
    hi = m - 1 - BOUNDARY
    return np.arange(lo, hi + 1)


def _ols_abs_residuals(x, y) -> float:
    slope, intercept = np.polyfit(x, y, 1)
    return float(np.abs(slope * x + intercept - y).sum())


def soar_scan_naive(v) -> np.ndarray:
    """Reference SoAR curve: one independent pair of fits per split point."""
    v = np.asarray(v.v if isinstance(v, SmoothedSequence) else v, dtype=np.float64)
    x = np.arange(v.size, dtype=np.float64)
    return np.array(
        [_ols_abs_residuals(x[:p + 1], v[:p + 1]) + _ols_abs_residuals(x[p + 1:], v[p + 1:]) for p in _candidates(v.size)]
    )


@numba.njit(cache=True)
def _soar_scan_kernel(v, cands):
    m = v.size
    # prefix sums for closed-form least squares on each side
    sx = np.zeros(m + 1)
    sy = np.zeros(m + 1)
    sxx = np.zeros(m + 1)
    sxy = np.zeros(m + 1)
    for i in range(m):
        x = float(i)
        sx[i + 1] = sx[i] + x
        sy[i + 1] = sy[i] + v[i]
        sxx[i + 1] = sxx[i] + x * x
        sxy[i + 1] = sxy[i] + x * v[i]
    out = np.empty(cands.size)
    for c in range(cands.size):
        p = cands[c]
        total = 0.0
        for lo, hi in ((0, p + 1), (p + 1, m)):
            cnt = hi - lo
            mx = (sx[hi] - sx[lo]) / cnt
            my = (sy[hi] - sy[lo]) / cnt
            # centred sums: exact for the small integer abscissae used here
            cxx = 0.0
            cxy = 0.0
            for i in range(lo, hi):
                dx = i - mx
                cxx += dx * dx
                cxy += dx * (v[i] - my)
            slope = cxy / cxx
            icpt = my - slope * mx
            for i in range(lo, hi):
                total += abs(slope * i + icpt - v[i])
        out[c] = total
    return out


def soar_scan(v) -> np.ndarray:
    """SoAR value for every legal split position (aligned with ``_candidates``)."""
    arr = np.ascontiguousarray(v.v if isinstance(v, SmoothedSequence) else v, dtype=np.float64)
    return _soar_scan_kernel(arr, _candidates(arr.size))


def soar_split(v: SmoothedSequence) -> tuple:
    """Return ``(p_r, soar_curve, soar_index)``; ``p_r`` is the 1-based argmin.

    Ties resolve to the smallest split index.
    """
    if not isinstance(v, SmoothedSequence):
        v = SmoothedSequence(np.asarray(v, dtype=np.float64))
    cands = _candidates(v.v.size)
    if cands.size == 0:
        raise DatasetTooSmallError(f"no legal split for a smoothed sequence of length {v.v.size}")
    curve = soar_scan(v)
    best = int(np.argmin(curve))
    return v.index(int(cands[best])), curve, cands + v.offset


def turning_angles(v: SmoothedSequence) -> np.ndarray:
    """``tan`` of the turning angle at every interior vertex of the V polyline.

    Entry ``j`` belongs to 1-based index ``v.index(j + 1)``.  A right-angle
    turn (``1 + k_i k_{i-1} == 0``) yields ``inf``.
    """
    arr = v.v if isinstance(v, SmoothedSequence) else np.asarray(v, dtype=np.float64)
    if arr.size < 3:
        raise InvalidParameterError("turning angles need at least 3 values")
    k = np.diff(arr)  # unit spacing along the horizontal axis
    num = k[1:] - k[:-1]
    den = 1.0 + k[1:] * k[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        tan = np.abs(num / den)
    tan[den == 0] = np.inf
    return tan


def find_pmax(tan_alpha, p_r: int, first_index: int = WINDOW + 1) -> tuple:
    """Position of the largest turning angle at or after ``p_r``.

    Maxima located before ``p_r`` are zeroed one by one.  ``first_index`` is
    the 1-based index of ``tan_alpha[0]``.  Returns ``(p_max, warning)``;
    ``warning`` is ``None`` unless no positive angle remains, in which case
    ``p_r`` itself is returned.
    """
    tan = np.array(tan_alpha, dtype=np.float64)
    if tan.size == 0:
        raise InvalidParameterError("empty tangent sequence")
    for _ in range(tan.size):
        pos = int(np.argmax(tan))
        if tan[pos] <= 0:
            break
        if pos + first_index >= p_r:
            return pos + first_index, None
        tan[pos] = 0.0
    return p_r, "no positive turning angle at or after p_r; using p_r"


def dense_subset(profile: DensityProfile, p_max: int) -> np.ndarray:
    """Indices of points whose density is at least the ``p_max``-th largest."""
    n = profile.rho_sorted.size
    if not 1 <= p_max <= n:
        raise InvalidParameterError(f"p_max={p_max} outside 1..{n}")
    threshold = profile.rho_sorted[p_max - 1]
    return np.flatnonzero(profile.rho >= threshold)


def identify_dense(profile: DensityProfile) -> tuple:
    """Run the full threshold search; returns ``(dense_indices, SplitDiagnostics)``."""
    v = smooth_density(profile)
    p_r, curve, soar_idx = soar_split(v)
    tan = turning_angles(v)
    first = v.index(1)
    p_max, warn = find_pmax(tan, p_r, first)
    notes = []
    if warn:
        warnings.warn(warn, RuntimeWarning)
        notes.append(warn)
    diag = SplitDiagnostics(
        p_r=p_r,
        p_max=p_max,
        soar_curve=curve,
        soar_index=soar_idx,
        tan_alpha=tan,
        tan_index=np.arange(tan.size) + first,
        warnings=notes,
    )
    return dense_subset(profile, p_max), diag
