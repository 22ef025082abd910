"""Dataset loading, manifests, normalization and synthetic generators.

Benchmark files are not shipped with the package.  :func:`fetch` downloads
them into a cache directory (``$SARFC_DATA_DIR``, default
``~/.cache/sarfc``) and :func:`resolve` loads a dataset by manifest name,
by file path, or, for Iris and Wine, from scikit-learn when it is installed.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
import re
import shutil
import urllib.request
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Dataset, InvalidInputError, InvalidParameterError, SarfcError

CACHE_ENV = "SARFC_DATA_DIR"


class DataFormatError(InvalidInputError):
    """A data file could not be parsed."""


class ManifestMismatchError(InvalidInputError):
    """A loaded dataset disagrees with the shape pinned by its manifest."""


class DatasetUnavailableError(SarfcError):
    """A dataset could not be located locally or downloaded."""


class ZeroRangeWarning(UserWarning):
    """Emitted when a dimension with zero range is normalized."""


@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset comes from and the shape it must have.

    ``source`` is a file name (looked up in the cache directory unless it is
    an existing path), ``sklearn:<name>`` or ``generate:<kind>``.
    ``label_column`` indexes the label column of the data file; ``None``
    means labels come from ``label_source`` (a sidecar file) or are absent.
    """

    name: str
    source: str
    expected_n: Optional[int] = None
    expected_d: Optional[int] = None
    expected_k: Optional[int] = None
    has_labels: bool = True
    label_column: Optional[int] = -1
    label_source: Optional[str] = None
    url: Optional[str] = None
    label_url: Optional[str] = None
    label_offset: int = 0

    def check(self, dataset: Dataset) -> None:
        """Raise :class:`ManifestMismatchError` if ``dataset`` has the wrong shape."""
        problems = []
        if self.expected_n is not None and dataset.n != self.expected_n:
            problems.append(f"n={dataset.n}, expected {self.expected_n}")
        if self.expected_d is not None and dataset.d != self.expected_d:
            problems.append(f"d={dataset.d}, expected {self.expected_d}")
        if self.has_labels and dataset.labels is None:
            problems.append("labels missing")
        if self.expected_k is not None and dataset.labels is not None and dataset.k_true != self.expected_k:
            problems.append(f"k={dataset.k_true}, expected {self.expected_k}")
        if problems:
            raise ManifestMismatchError(f"{self.name}: " + "; ".join(problems))


_SIPU = "http://cs.joensuu.fi/sipu/datasets/"
_UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases/"

# The ten benchmark datasets, in the order results tables list them.
BENCHMARK_MANIFESTS = (
    DatasetManifest("r15", "R15.txt", 600, 2, 15, url=_SIPU + "R15.txt"),
    DatasetManifest("d31", "D31.txt", 3100, 2, 31, url=_SIPU + "D31.txt"),
    DatasetManifest("agg", "Aggregation.txt", 788, 2, 7, url=_SIPU + "Aggregation.txt"),
    DatasetManifest("a1", "a1.txt", 3000, 2, 20, label_column=None, label_source="a1-ga.pa",
                    url=_SIPU + "a1.txt", label_url=_SIPU + "a1-ga.pa"),
    DatasetManifest("s1", "s1.txt", 5000, 2, 15, label_column=None, label_source="s1-label.pa",
                    url=_SIPU + "s1.txt", label_url=_SIPU + "s1-label.pa"),
    DatasetManifest("supole", "generate:supole_like", 513, 2, 2),
    DatasetManifest("squcir", "generate:squcir_like", 50_000, 2, 2),
    DatasetManifest("iris", "sklearn:iris", 150, 4, 3, url=_UCI + "iris/iris.data"),
    DatasetManifest("seeds", "seeds_dataset.txt", 210, 7, 3, url=_UCI + "00236/seeds_dataset.txt"),
    DatasetManifest("wine", "sklearn:wine", 178, 13, 3, label_column=0, url=_UCI + "wine/wine.data"),
)

_ALIASES = {"aggregation": "agg", "seed": "seeds"}


def find_manifest(name: str, manifests=BENCHMARK_MANIFESTS) -> Optional[DatasetManifest]:
    key = name.lower()
    key = _ALIASES.get(key, key)
    for m in manifests:
        if m.name.lower() == key:
            return m
    return None


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "sarfc")


# ---------------------------------------------------------------- parsing

def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _split(line: str, delim: Optional[str]) -> list:
    return [t.strip() for t in line.split(delim)] if delim else line.split()


def _sniff_delimiter(line: str) -> Optional[str]:
    for d in (",", ";"):
        if d in line:
            return d
    return None


def load_csv(path, label_column: Optional[int] = None, manifest: Optional[DatasetManifest] = None,
             name: Optional[str] = None) -> Dataset:
    """Read numeric rows from a comma, semicolon or whitespace separated file.

    Blank lines and lines starting with ``#`` are skipped, as is a first row
    that contains no numeric field (a header).  Non-numeric labels such as
    ``Iris-setosa`` are mapped to integers in order of first appearance.

    Args:
        label_column: index (negative allowed) of the ground-truth column.
        manifest: when given, the result is checked against its pinned shape.

    Raises:
        DataFormatError: empty file, ragged rows or a non-numeric coordinate.
        ManifestMismatchError: shape disagrees with ``manifest``.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DataFormatError(f"{path}: no data rows")
    delim = _sniff_delimiter(lines[0][1])
    rows = [(no, _split(ln, delim)) for no, ln in lines]
    if not any(_is_number(t) for t in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise DataFormatError(f"{path}: header only, no data rows")
    width = len(rows[0][1])
    if label_column is not None and not -width <= label_column < width:
        raise DataFormatError(f"{path}: label column {label_column} out of range for {width} columns")
    lab_idx = None if label_column is None else label_column % width
    points = np.empty((len(rows), width - (lab_idx is not None)))
    raw_labels = []
    for r, (no, fields) in enumerate(rows):
        if len(fields) != width:
            raise DataFormatError(f"{path}: line {no} has {len(fields)} fields, expected {width}")
        c = 0
        for col, tok in enumerate(fields):
            if col == lab_idx:
                raw_labels.append(tok)
                continue
            try:
                points[r, c] = float(tok)
            except ValueError:
                raise DataFormatError(f"{path}: line {no}, column {col + 1}: non-numeric value {tok!r}") from None
            c += 1
    labels = _encode_labels(raw_labels) if lab_idx is not None else None
    ds = Dataset(points, labels, name=name or path.stem)
    if manifest is not None:
        manifest.check(ds)
    return ds


def _encode_labels(raw: list) -> np.ndarray:
    if all(_is_number(t) for t in raw):
        vals = np.array([float(t) for t in raw])
        if np.all(vals == np.round(vals)) and vals.min() >= 0:
            return vals.astype(np.int64)
    codes = {}
    return np.array([codes.setdefault(t, len(codes)) for t in raw], dtype=np.int64)


def load_labels(path) -> np.ndarray:
    """Read a sidecar label file: one integer per line after any header lines."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            tok = ln.strip()
            if re.fullmatch(r"[+-]?\d+", tok):
                out.append(int(tok))
    if not out:
        raise DataFormatError(f"{path}: no integer labels found")
    return np.asarray(out, dtype=np.int64)


def save_csv(dataset: Dataset, path) -> None:
    """Write comma-separated rows; labels, if any, go in the last column.

    Floats are written with ``repr`` so a reload is bit-identical.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.points[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            w.writerow(row)


def min_max_normalize(dataset: Dataset) -> Dataset:
    """Map every dimension affinely onto [0, 1].

    Zero-range dimensions become the constant 0.5 and trigger a
    :class:`ZeroRangeWarning`.
    """
    pts = dataset.points
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    out = np.empty_like(pts)
    flat = span == 0
    if flat.any():
        warnings.warn(f"zero-range dimension(s) {np.flatnonzero(flat).tolist()} set to 0.5", ZeroRangeWarning)
    out[:, flat] = 0.5
    ok = ~flat
    out[:, ok] = (pts[:, ok] - lo[ok]) / span[ok]
    out[:, ok] = np.clip(out[:, ok], 0.0, 1.0)
    return replace(dataset, points=out)


# ------------------------------------------------------------- generators

def _split_counts(n: int, parts: int) -> list:
    base, extra = divmod(n, parts)
    return [base + (i < extra) for i in range(parts)]


def _uniform_disc(rng, count, radius, center=(0.0, 0.0), inner=0.0):
    # area-uniform radius
    r = np.sqrt(rng.uniform(inner ** 2, radius ** 2, count))
    a = rng.uniform(0.0, 2 * math.pi, count)
    return np.column_stack([center[0] + r * np.cos(a), center[1] + r * np.sin(a)])


def _blobs(rng, n, k, spread, separation):
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    # centres on a circle, neighbours `separation` apart
    radius = 0.0 if k == 1 else separation / (2 * math.sin(math.pi / k))
    ang = 2 * math.pi * np.arange(k) / k
    centers = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    counts = _split_counts(n, k)
    pts = np.vstack([rng.normal(c, spread, (m, 2)) for c, m in zip(centers, counts)])
    return pts, np.repeat(np.arange(k), counts)


def _ring_s(rng, n, noise):
    n_ring, n_core, n_s = _split_counts(n, 3)
    ring = _uniform_disc(rng, n_ring, 5.0, inner=4.4)
    core = _uniform_disc(rng, n_core, 1.5)
    # "S": two 270-degree arcs meeting at (9, 0)
    t = rng.uniform(0.0, 1.0, n_s)
    upper = t < 0.5
    theta = np.where(upper, 3 * math.pi * t, math.pi / 2 - 3 * math.pi * (t - 0.5))
    cy = np.where(upper, 1.5, -1.5)
    sx = 9.0 + 1.5 * np.cos(theta)
    sy = cy + 1.5 * np.sin(theta)
    s = np.column_stack([sx, sy]) + rng.normal(0.0, noise, (n_s, 2))
    return np.vstack([ring, core, s]), np.repeat([0, 1, 2], [n_ring, n_core, n_s])


def _imbalance(rng, n1, n2, distance):
    dense = rng.normal((0.0, 0.0), 0.5, (n1, 2))
    sparse = rng.normal((distance, 0.0), 2.0, (n2, 2))
    return np.vstack([dense, sparse]), np.repeat([0, 1], [n1, n2])


def _supole_like(rng, n):
    # a round disc next to a thin upright pole
    n_disc, n_pole = _split_counts(n, 2)
    disc = _uniform_disc(rng, n_disc, 1.0)
    pole = np.column_stack([rng.uniform(1.6, 1.9, n_pole), rng.uniform(-2.4, 2.4, n_pole)])
    return np.vstack([disc, pole]), np.repeat([0, 1], [n_disc, n_pole])


def _squcir_like(rng, n):
    # a filled square and a filled disc side by side
    n_circ, n_sq = _split_counts(n, 2)
    circ = _uniform_disc(rng, n_circ, 1.5, center=(4.0, 0.0))
    square = rng.uniform(-1.5, 1.5, (n_sq, 2))
    return np.vstack([circ, square]), np.repeat([0, 1], [n_circ, n_sq])


GENERATORS = ("blobs", "ring_s", "imbalance", "supole_like", "squcir_like")
_DEFAULT_N = {"blobs": 200, "ring_s": 600, "imbalance": 1050, "supole_like": 513, "squcir_like": 5000}


def generate_synthetic(kind: str, n: Optional[int] = None, k: Optional[int] = None, seed: int = 0, **params) -> Dataset:
    """Labelled 2-D test shapes.

    Kinds and their extra keyword parameters:

    * ``blobs``: ``k`` Gaussian blobs (``spread``=1, ``separation``=10).
    * ``ring_s``: annulus, inner disc and an S-shaped band (``noise``=0.05).
    * ``imbalance``: dense blob of ``n1``=1000 points and a sparse one of
      ``n2``=50 points at ``distance``=20.
    * ``supole_like``: disc beside a thin upright bar.
    * ``squcir_like``: filled square beside a filled disc; any ``n``.

    Equal seeds give bit-identical output.
    """
    if kind not in GENERATORS:
        raise InvalidParameterError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")
    rng = np.random.default_rng(seed)
    if kind == "imbalance":
        n1 = int(params.pop("n1", 1000))
        n2 = int(params.pop("n2", 50))
        distance = float(params.pop("distance", 20.0))
        if n1 < 1 or n2 < 1:
            raise InvalidParameterError("imbalance needs n1, n2 >= 1")
        pts, lab = _imbalance(rng, n1, n2, distance)
    else:
        n = _DEFAULT_N[kind] if n is None else int(n)
        if n < 2:
            raise InvalidParameterError(f"n must be at least 2, got {n}")
        if kind == "blobs":
            k = 2 if k is None else int(k)
            if not 1 <= k <= n:
                raise InvalidParameterError(f"need 1 <= k <= n, got k={k}")
            spread = float(params.pop("spread", 1.0))
            separation = float(params.pop("separation", 10.0))
            if spread <= 0 or separation <= 0:
                raise InvalidParameterError("spread and separation must be positive")
            pts, lab = _blobs(rng, n, k, spread, separation)
        elif kind == "ring_s":
            if n < 3:
                raise InvalidParameterError("ring_s needs n >= 3")
            pts, lab = _ring_s(rng, n, float(params.pop("noise", 0.05)))
        elif kind == "supole_like":
            pts, lab = _supole_like(rng, n)
        else:
            pts, lab = _squcir_like(rng, n)
    if params:
        raise InvalidParameterError(f"unexpected parameters for {kind}: {sorted(params)}")
    return Dataset(pts, lab, name=f"{kind}-seed{seed}")


# -------------------------------------------------------------- manifests

def load_manifests(path) -> list:
    """Read manifests from an INI-style file, one ``[name]`` section each.

    Keys: ``source`` (required), ``n``, ``d``, ``k``, ``labels`` (yes/no),
    ``label_column`` (integer or ``none``), ``label_source``, ``url``,
    ``label_url``, ``label_offset``.  Section order is preserved.
    """
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    out = []
    for name in cp.sections():
        sec = cp[name]
        if "source" not in sec:
            raise DataFormatError(f"{path}: section [{name}] has no source")

        def opt_int(key):
            val = sec.get(key)
            return None if val is None or val.strip().lower() in ("", "none") else int(val)

        out.append(DatasetManifest(
            name=name,
            source=sec["source"],
            expected_n=opt_int("n"),
            expected_d=opt_int("d"),
            expected_k=opt_int("k"),
            has_labels=sec.getboolean("labels", True),
            label_column=opt_int("label_column") if "label_column" in sec else -1,
            label_source=sec.get("label_source"),
            url=sec.get("url"),
            label_url=sec.get("label_url"),
            label_offset=int(sec.get("label_offset", 0)),
        ))
    return out


def write_manifests(manifests, path) -> None:
    cp = configparser.ConfigParser()
    for m in manifests:
        sec = {"source": m.source, "labels": "yes" if m.has_labels else "no",
               "label_column": "none" if m.label_column is None else str(m.label_column)}
        for key, val in (("n", m.expected_n), ("d", m.expected_d), ("k", m.expected_k),
                         ("label_source", m.label_source), ("url", m.url), ("label_url", m.label_url)):
            if val is not None:
                sec[key] = str(val)
        if m.label_offset:
            sec["label_offset"] = str(m.label_offset)
        cp[m.name] = sec
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


# ---------------------------------------------------------- acquisition

def _download(url: str, dest: Path, timeout: float) -> None:
    tmp = dest.with_suffix(dest.suffix + ".part")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp, open(tmp, "wb") as fh:
            shutil.copyfileobj(resp, fh)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise DatasetUnavailableError(f"download of {url} failed: {exc}") from exc
    tmp.replace(dest)


def fetch(manifest: DatasetManifest, directory=None, timeout: float = 30.0, force: bool = False) -> list:
    """Download a manifest's data (and label) file into the cache directory.

    Files already present are kept unless ``force``.  Returns the local paths.
    """
    directory = Path(directory) if directory is not None else cache_dir()
    directory.mkdir(parents=True, exist_ok=True)
    jobs = []
    if manifest.source.startswith("sklearn:"):
        # raw UCI file, read when scikit-learn is not installed
        if manifest.url:
            jobs.append((manifest.url, Path(manifest.url).name))
    elif not manifest.source.startswith("generate:"):
        jobs.append((manifest.url, manifest.source))
    if manifest.label_source:
        jobs.append((manifest.label_url, manifest.label_source))
    paths = []
    for url, fname in jobs:
        dest = directory / fname
        if dest.exists() and not force:
            paths.append(dest)
            continue
        if not url:
            raise DatasetUnavailableError(f"{manifest.name}: no download URL for {fname}")
        _download(url, dest, timeout)
        paths.append(dest)
    return paths


def _load_sklearn(which: str, manifest: DatasetManifest, directory: Path) -> Dataset:
    try:
        from sklearn import datasets as skd  # optional; UCI file in the cache is the fallback
    except ImportError:
        skd = None
    if skd is not None:
        bunch = {"iris": skd.load_iris, "wine": skd.load_wine}[which]()
        return Dataset(bunch.data, bunch.target, name=manifest.name)
    local = directory / Path(manifest.url).name
    if not local.exists():
        raise DatasetUnavailableError(
            f"{manifest.name}: scikit-learn is not installed and {local} is missing; run `sarfc fetch {manifest.name}`"
        )
    return load_csv(local, manifest.label_column, name=manifest.name)


def load_manifest(manifest: DatasetManifest, directory=None, seed: int = 0) -> Dataset:
    """Materialize the dataset a manifest describes and validate its shape."""
    directory = Path(directory) if directory is not None else cache_dir()
    src = manifest.source
    if src.startswith("generate:"):
        ds = generate_synthetic(src.split(":", 1)[1], n=manifest.expected_n, seed=seed)
        ds = replace(ds, name=manifest.name)
    elif src.startswith("sklearn:"):
        ds = _load_sklearn(src.split(":", 1)[1], manifest, directory)
    else:
        path = Path(src) if Path(src).exists() else directory / src
        if not path.exists():
            raise DatasetUnavailableError(f"{manifest.name}: {path} not found; run `sarfc fetch {manifest.name}`")
        ds = load_csv(path, manifest.label_column if manifest.has_labels else None, name=manifest.name)
        if manifest.label_source:
            lpath = Path(manifest.label_source)
            lpath = lpath if lpath.exists() else directory / manifest.label_source
            if not lpath.exists():
                raise DatasetUnavailableError(f"{manifest.name}: label file {lpath} not found")
            labels = load_labels(lpath)
            if labels.size != ds.n:
                raise ManifestMismatchError(f"{manifest.name}: {labels.size} labels for {ds.n} points")
            ds = replace(ds, labels=labels)
    if manifest.label_offset and ds.labels is not None:
        ds = replace(ds, labels=ds.labels - manifest.label_offset)
    manifest.check(ds)
    return ds


def resolve(ref: str, label_column: Optional[int] = None, directory=None, manifests=BENCHMARK_MANIFESTS) -> Dataset:
    """Load ``ref`` as a manifest name or, failing that, as a file path."""
    m = find_manifest(ref, manifests)
    if m is not None:
        return load_manifest(m, directory)
    path = Path(ref)
    if path.is_file():
        return load_csv(path, label_column)
    raise DatasetUnavailableError(f"{ref!r} is neither a known dataset nor a readable file")
