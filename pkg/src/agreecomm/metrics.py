"""Partition comparison by ARI and NMI over a contingency table.

Counts stay integral until the last step; ARI is assembled from exact
Python integers and divided once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, Partition


class CarrierMismatch(GraphError):
    """The two partitions do not cover the same vertices."""

    def __init__(self, only_left, only_right):
        self.only_left = sorted(only_left)
        self.only_right = sorted(only_right)
        super().__init__(
            f"carriers differ: {len(self.only_left)} vertex(es) only in the first "
            f"partition {_preview(self.only_left)}, {len(self.only_right)} only in the "
            f"second {_preview(self.only_right)}"
        )

    @property
    def symmetric_difference(self) -> list[int]:
        return sorted(self.only_left + self.only_right)


def _preview(ids, limit=10):
    head = ", ".join(str(i) for i in ids[:limit])
    return f"[{head}{', ...' if len(ids) > limit else ''}]"


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(np.asarray(p))


@dataclass(frozen=True)
class ContingencyTable:
    """``counts[i, j]`` = size of the intersection of cluster i of P and cluster j of Q."""

    counts: np.ndarray
    row_labels: np.ndarray
    col_labels: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(p, q) -> ContingencyTable:
    """Contingency table of two partitions of the same carrier.

    Accepts :class:`Partition` objects or plain label sequences (then the
    carrier is the position index).
    """
    p, q = _as_partition(p), _as_partition(q)
    if not np.array_equal(p.vertices, q.vertices):
        left, right = set(p.vertices.tolist()), set(q.vertices.tolist())
        raise CarrierMismatch(left - right, right - left)
    rows, ri = np.unique(p.labels, return_inverse=True)
    cols, ci = np.unique(q.labels, return_inverse=True)
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    np.add.at(counts, (ri.ravel(), ci.ravel()), 1)
    return ContingencyTable(counts, rows, cols)


def _pairs(x: np.ndarray) -> int:
    x = x.astype(object)
    return int((x * (x - 1) // 2).sum())


def ari(p, q) -> float:
    """Adjusted Rand index (Hubert and Arabie).

    1 for identical partitions, about 0 for independent random ones.
    When both partitions are all-singletons or both a single block the
    index is undefined; those pairs are identical and score 1.
    """
    table = contingency(p, q)
    index = _pairs(table.counts.ravel())
    sum_a, sum_b = _pairs(table.row_sums), _pairs(table.col_sums)
    total = _pairs(np.array([table.total]))
    # scaled by 2 * C(N, 2) so everything stays integral
    num = 2 * total * index - 2 * sum_a * sum_b
    den = total * (sum_a + sum_b) - 2 * sum_a * sum_b
    if den == 0:
        return 1.0
    return num / den


def _entropy(counts: np.ndarray, total: int) -> float:
    pr = counts[counts > 0] / total
    return float(-(pr * np.log(pr)).sum())


def nmi(p, q) -> float:
    """Mutual information normalised by the mean of the two entropies.

    If both entropies vanish the partitions are both the whole carrier and
    score 1; if only one vanishes they share no information and score 0.
    """
    table = contingency(p, q)
    n = table.total
    h_p = _entropy(table.row_sums, n)
    h_q = _entropy(table.col_sums, n)
    if h_p == 0 and h_q == 0:
        return 1.0
    if h_p == 0 or h_q == 0:
        return 0.0
    nonzero = table.counts > 0
    if np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1):
        return 1.0
    i, j = np.nonzero(table.counts)
    nij = table.counts[i, j].astype(np.float64)
    outer = table.row_sums[i].astype(np.float64) * table.col_sums[j]
    mi = float((nij / n * np.log(n * nij / outer)).sum())
    return min(1.0, max(0.0, mi / ((h_p + h_q) / 2)))
