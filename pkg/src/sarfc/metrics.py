"""External validity scores against ground-truth labels.

Accuracy and F1 use the one-to-one matching of predicted to true clusters
that maximizes the number of agreeing points (Hungarian algorithm), ties
broken towards the larger F1.  ARI is
the pair-counting Hubert-Arabie index; NMI is normalized by the geometric
mean of the two entropies.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .core import InvalidInputError


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts, rows = predicted clusters, columns = true classes."""

    counts: np.ndarray
    n: int

    @classmethod
    def build(cls, pred, truth) -> "ContingencyTable":
        pred = np.asarray(pred)
        truth = np.asarray(truth)
        if pred.ndim != 1 or truth.ndim != 1 or pred.shape != truth.shape:
            raise InvalidInputError(f"label vectors must be 1-D and of equal length, got {pred.shape} and {truth.shape}")
        _, p = np.unique(pred, return_inverse=True)
        _, t = np.unique(truth, return_inverse=True)
        counts = np.zeros((p.max(initial=-1) + 1, t.max(initial=-1) + 1), dtype=np.int64)
        np.add.at(counts, (p, t), 1)
        return cls(counts=counts, n=int(pred.size))

    def matching(self) -> tuple:
        """Row/column index arrays of the maximum-agreement matching.

        Ties in agreement are broken by the larger summed pairwise F1, which
        keeps the F1 score independent of how clusters are numbered.  The
        tie-break term sums to less than one, so it never outweighs a
        difference of one agreeing point.
        """
        c = self.counts.astype(np.float64)
        if c.size == 0:
            return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
        pair_f1 = 2 * c / (c.sum(axis=1)[:, None] + c.sum(axis=0)[None, :])
        return linear_sum_assignment(c + pair_f1 / (min(c.shape) + 1), maximize=True)


def _table(pred, truth) -> ContingencyTable:
    table = ContingencyTable.build(pred, truth)
    if table.n == 0:
        raise InvalidInputError("empty label vectors")
    return table


def accuracy(pred, truth) -> float:
    """Fraction of points whose predicted cluster is matched to their class.

    Predicted clusters left without a partner count all their points wrong.
    """
    table = _table(pred, truth)
    rows, cols = table.matching()
    return float(table.counts[rows, cols].sum() / table.n)


def f1_score(pred, truth) -> float:
    """Macro-averaged F1 over true classes under the accuracy matching.

    A class with no matched cluster scores 0.
    """
    table = _table(pred, truth)
    rows, cols = table.matching()
    c = table.counts
    per_class = np.zeros(c.shape[1])
    for r, t in zip(rows, cols):
        hit = c[r, t]
        if hit:
            precision = hit / c[r].sum()
            recall = hit / c[:, t].sum()
            per_class[t] = 2 * precision * recall / (precision + recall)
    return float(per_class.mean())


def ari(pred, truth) -> float:
    """Adjusted Rand index; two single-cluster partitions score 1."""
    table = _table(pred, truth)
    c = table.counts
    sum_cells = comb(c, 2).sum()
    sum_rows = comb(c.sum(axis=1), 2).sum()
    sum_cols = comb(c.sum(axis=0), 2).sum()
    total = comb(table.n, 2)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """Mutual information over ``sqrt(H(pred) H(truth))``.

    If either side has zero entropy the score is 1 when both partitions are
    trivial and 0 otherwise.
    """
    table = _table(pred, truth)
    c = table.counts.astype(np.float64)
    h_p = _entropy(c.sum(axis=1))
    h_t = _entropy(c.sum(axis=0))
    if h_p == 0 or h_t == 0:
        return 1.0 if h_p == h_t else 0.0
    n = table.n
    nz = c > 0
    outer = np.outer(c.sum(axis=1), c.sum(axis=0))
    mi = float((c[nz] / n * np.log(c[nz] * n / outer[nz])).sum())
    return float(min(1.0, max(0.0, mi / math.sqrt(h_p * h_t))))


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one run; values in [0, 1] (ARI may be negative)."""

    dataset: str
    k_true: Optional[int]
    k_pred: int
    acc: float
    f1: float
    ari: float
    nmi: float

    FIELDS = ("dataset", "k_true", "k_pred", "acc", "f1", "ari", "nmi")

    @classmethod
    def compute(cls, name: str, pred, truth) -> "MetricsReport":
        pred = np.asarray(pred)
        truth = np.asarray(truth)
        return cls(
            dataset=name,
            k_true=int(np.unique(truth).size),
            k_pred=int(np.unique(pred).size),
            acc=accuracy(pred, truth),
            f1=f1_score(pred, truth),
            ari=ari(pred, truth),
            nmi=nmi(pred, truth),
        )

    def as_row(self) -> list:
        """CSV fields with scores as percentages to one decimal."""
        return [self.dataset, "" if self.k_true is None else str(self.k_true), str(self.k_pred)] + [
            f"{100 * v:.1f}" for v in (self.acc, self.f1, self.ari, self.nmi)
        ]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.FIELDS)
        w.writerow(self.as_row())
        return buf.getvalue()
