"""Community detection from agreement between neighbouring candidate lists.

Three steps, each local to a vertex or an edge:

1. every vertex ``v`` keeps its ``k_v`` highest-degree neighbours as its
   candidate list ``S_v``;
2. every vertex picks the neighbour ``a_v`` whose list shares the most
   members with its own, provided the overlap reaches
   ``tau * min(d_u, d_v)``; otherwise it falls back to its highest-degree
   neighbour;
3. communities are the merge-closure of all pairs ``(v, a_v)``.

The per-vertex functions (:func:`compile_candidates`, :func:`agreement`,
:func:`select_preferred`) are the readable reference. :func:`detect` runs
the same rules vectorised over CSR arrays.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .graph import Graph, Partition, ValidationError, validate

KRule = Union[str, Callable[[np.ndarray], np.ndarray]]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _mix(x: int) -> int:
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * _MUL1) & _MASK
    x = ((x ^ (x >> 27)) * _MUL2) & _MASK
    return x ^ (x >> 31)


def _mix_array(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MUL1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MUL2)
    return x ^ (x >> np.uint64(31))


def tie_key(seed: int, v: int, u: int) -> int:
    """Pseudo-random rank of neighbour ``u`` in vertex ``v``'s private stream.

    Depends only on ``(seed, v, u)``, so the winner of a tie does not
    depend on the order in which vertices are processed.
    """
    return _mix(_mix(_mix(seed & _MASK) ^ v) ^ u)


def tie_keys(seed: int, v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`tie_key`."""
    base = np.uint64(_mix(seed & _MASK))
    h = _mix_array(base ^ np.asarray(v).astype(np.uint64))
    return _mix_array(h ^ np.asarray(u).astype(np.uint64))


_K_RULES = {
    "ceil_half": lambda d: np.maximum(1, (d + 1) // 2),
    "floor_half": lambda d: np.maximum(1, d // 2),
    "one": lambda d: np.ones_like(d),
    "all": lambda d: d,
}


class Provenance(IntEnum):
    AGREEMENT = 0
    DEGREE_FALLBACK = 1


@dataclass(frozen=True)
class DetectionParams:
    """Parameters of the detection pipeline.

    Parameters
    ----------
    tau : float
        Agreement acceptance threshold in ``[0, 1]``. It is read as the
        decimal it prints as, so ``0.2`` means exactly 1/5.
    k_rule : str or callable
        Candidate list size as a function of degree. One of
        ``"ceil_half"`` (default), ``"floor_half"``, ``"one"``, ``"all"``,
        or a vectorised callable mapping a degree array to sizes in
        ``[1, d]``.
    tie_policy : {"seeded_random", "lowest_id"}
        How ties between equally good neighbours are broken.
    seed : int
        Seed of the per-vertex tie-breaking streams.
    normalization : {"min_degree", "min_list"}
        Whether the threshold scales with ``min(d_u, d_v)`` or with the
        attainable overlap ``min(k_u, k_v)``.
    """

    tau: float = 0.2
    k_rule: KRule = "ceil_half"
    tie_policy: str = "seeded_random"
    seed: int = 0
    normalization: str = "min_degree"

    def __post_init__(self):
        if not 0 <= self.tau <= 1:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if isinstance(self.k_rule, str) and self.k_rule not in _K_RULES:
            raise ValueError(f"unknown k_rule {self.k_rule!r}")
        if self.tie_policy not in ("seeded_random", "lowest_id"):
            raise ValueError(f"unknown tie_policy {self.tie_policy!r}")
        if self.normalization not in ("min_degree", "min_list"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def tau_fraction(self) -> Fraction:
        return Fraction(str(self.tau)).limit_denominator(10**6)

    def list_sizes(self, degrees) -> np.ndarray:
        degrees = np.asarray(degrees, dtype=np.int64)
        rule = _K_RULES[self.k_rule] if isinstance(self.k_rule, str) else self.k_rule
        k = np.asarray(rule(degrees), dtype=np.int64)
        if np.any((k < 1) | (k > degrees)):
            raise ValueError("k_rule must return sizes in [1, degree]")
        return k

    def passes(self, agreement: int, d_u: int, d_v: int, k_u: int, k_v: int) -> bool:
        """Threshold test for one pair, in exact integer arithmetic."""
        tau = self.tau_fraction
        norm = min(d_u, d_v) if self.normalization == "min_degree" else min(k_u, k_v)
        return agreement * tau.denominator >= tau.numerator * norm

    def choose(self, v: int, candidates: Sequence[int]) -> int:
        if self.tie_policy == "lowest_id":
            return min(candidates)
        return min(candidates, key=lambda u: (tie_key(self.seed, v, u), u))


@dataclass(frozen=True)
class CandidateList:
    """The ``k`` highest-degree neighbours of ``owner``, best first."""

    owner: int
    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)

    def __contains__(self, u):
        return u in self.members


class CandidateLists:
    """Candidate lists of every vertex, packed CSR-style."""

    def __init__(self, indptr: np.ndarray, members: np.ndarray):
        self.indptr = indptr
        self.members = members

    def __len__(self):
        return len(self.indptr) - 1

    def __getitem__(self, v: int) -> CandidateList:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return CandidateList(int(v), tuple(self.members[lo:hi].tolist()))

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def to_csr(self, dtype=np.int32) -> sp.csr_matrix:
        n = len(self)
        data = np.ones(len(self.members), dtype=dtype)
        order = np.argsort(self.members + np.repeat(np.arange(n) * n, self.sizes), kind="stable")
        return sp.csr_matrix((data[order], self.members[order], self.indptr), shape=(n, n))

    def __eq__(self, other):
        if not isinstance(other, CandidateLists):
            return NotImplemented
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(
            self.members, other.members
        )


@dataclass(frozen=True, eq=False)
class Assignment:
    """Preferred neighbour ``a_v`` of every vertex, with how it was chosen."""

    preferred: np.ndarray
    provenance: np.ndarray

    def __len__(self):
        return len(self.preferred)

    def __getitem__(self, v: int) -> tuple[int, Provenance]:
        return int(self.preferred[v]), Provenance(int(self.provenance[v]))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, Provenance]]) -> "Assignment":
        return cls(
            np.array([a for a, _ in pairs], dtype=np.int64),
            np.array([int(p) for _, p in pairs], dtype=np.uint8),
        )

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return np.array_equal(self.preferred, other.preferred) and np.array_equal(
            self.provenance, other.provenance
        )

    __hash__ = None


def _ranked_neighbors(graph: Graph, v: int) -> list[int]:
    deg = graph.degrees
    return sorted(graph.neighbors(v).tolist(), key=lambda u: (-deg[u], u))


def compile_candidates(graph: Graph, v: int, params: DetectionParams | None = None) -> CandidateList:
    """Candidate list of one vertex: its ``k_v`` highest-degree neighbours.

    Degree ties are broken by ascending vertex id.
    """
    params = params or DetectionParams()
    k = int(params.list_sizes([graph.degree(v)])[0])
    return CandidateList(v, tuple(_ranked_neighbors(graph, v)[:k]))


def agreement(list_u: CandidateList, list_v: CandidateList) -> int:
    return len(set(list_u.members) & set(list_v.members))


def select_preferred(
    graph: Graph, v: int, all_lists, params: DetectionParams | None = None
) -> tuple[int, Provenance]:
    """Choose ``a_v`` among the neighbours of ``v``.

    Neighbours whose agreement with ``v`` reaches the threshold compete on
    agreement; if none qualifies the highest-degree neighbour is taken.
    Remaining ties go through ``params.tie_policy``.
    """
    params = params or DetectionParams()
    deg = graph.degrees
    own = all_lists[v]
    best, qualified = -1, []
    for u in graph.neighbors(v).tolist():
        other = all_lists[u]
        agr = agreement(own, other)
        if not params.passes(agr, int(deg[u]), int(deg[v]), len(other), len(own)):
            continue
        if agr > best:
            best, qualified = agr, [u]
        elif agr == best:
            qualified.append(u)
    if qualified:
        return params.choose(v, qualified), Provenance.AGREEMENT
    nbrs = graph.neighbors(v)
    top = int(deg[nbrs].max())
    return params.choose(v, [u for u in nbrs.tolist() if deg[u] == top]), Provenance.DEGREE_FALLBACK


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by rank and path halving.

    With ``threadsafe=True`` every operation holds a lock, which makes
    concurrent unions linearizable.
    """

    def __init__(self, n: int, threadsafe: bool = False):
        self.parent = list(range(n))
        self.rank = [0] * n
        self._lock = threading.Lock() if threadsafe else None

    def __len__(self):
        return len(self.parent)

    def _find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def find(self, x: int) -> int:
        if self._lock is None:
            return self._find(x)
        with self._lock:
            return self._find(x)

    def _union(self, x: int, y: int) -> bool:
        rx, ry = self._find(x), self._find(y)
        if rx == ry:
            return False
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1
        return True

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of ``x`` and ``y``; False if already merged."""
        if self._lock is None:
            return self._union(x, y)
        with self._lock:
            return self._union(x, y)

    def roots(self) -> np.ndarray:
        return np.fromiter((self._find(x) for x in range(len(self.parent))), np.int64, len(self.parent))

    def labels(self) -> np.ndarray:
        """Set label of every element: the smallest element of its set."""
        roots = self.roots()
        smallest = np.full(len(roots), len(roots), dtype=np.int64)
        np.minimum.at(smallest, roots, np.arange(len(roots)))
        return smallest[roots]


def merge_pairs(n: int, src, dst) -> np.ndarray:
    """Component labels after merging every pair ``(src[i], dst[i])``.

    Vectorised union-find: each round hooks the larger of two differing
    roots under the smaller one, then compresses paths by pointer jumping.
    Every vertex ends labelled by the smallest vertex of its component.
    """
    parent = np.arange(n, dtype=np.int64)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    while True:
        ps, pd = parent[src], parent[dst]
        differ = ps != pd
        if not differ.any():
            return parent
        src, dst = src[differ], dst[differ]
        lo = np.minimum(ps[differ], pd[differ])
        hi = np.maximum(ps[differ], pd[differ])
        np.minimum.at(parent, hi, lo)
        while True:
            jumped = parent[parent]
            if np.array_equal(jumped, parent):
                break
            parent = jumped


def uncover(assignment, n: int | None = None) -> Partition:
    """Merge every vertex's community with that of its preferred neighbour.

    Each community is labelled by its smallest vertex id, so the result
    does not depend on merge order.
    """
    preferred = assignment.preferred if isinstance(assignment, Assignment) else np.asarray(assignment)
    n = len(preferred) if n is None else n
    if len(preferred) != n:
        raise ValueError(f"assignment covers {len(preferred)} vertices, expected {n}")
    return Partition(merge_pairs(n, np.arange(n), preferred))


_BLOCK_ROWS = 16384


def _blocks(n: int, workers: int) -> list[tuple[int, int]]:
    count = max(workers, -(-n // _BLOCK_ROWS), 1)
    bounds = np.linspace(0, n, count + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_blocks(fn, n: int, workers: int) -> list:
    blocks = _blocks(n, workers)
    if workers <= 1 or len(blocks) == 1:
        return [fn(lo, hi) for lo, hi in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def compile_all(graph: Graph, params: DetectionParams | None = None, *, workers: int = 1) -> CandidateLists:
    """Candidate lists of every vertex (vectorised :func:`compile_candidates`)."""
    params = params or DetectionParams()
    deg = graph.degrees
    k = params.list_sizes(deg)

    def block(lo, hi):
        start, stop = graph.indptr[lo], graph.indptr[hi]
        nbrs = graph.indices[start:stop]
        rows = np.repeat(np.arange(lo, hi), deg[lo:hi])
        # rows arrive sorted by neighbour id, so a stable sort keeps id order among equal degrees
        top = int(deg.max())
        order = np.argsort((rows - lo) * (top + 1) + (top - deg[nbrs]), kind="stable")
        rank = np.arange(stop - start) - (graph.indptr[rows] - start)
        return nbrs[order][rank < k[rows]]

    members = np.concatenate(_run_blocks(block, graph.n, workers) or [np.zeros(0, np.int64)])
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    np.cumsum(k, out=indptr[1:])
    return CandidateLists(indptr, members)


try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


def _marker_agreements(indptr, indices, list_ptr, list_members, lo, hi):
    # mark S_v, then count marked members of each neighbour's list
    n = len(indptr) - 1
    mark = np.full(n, -1, np.int32)
    out = np.empty(indptr[hi] - indptr[lo], np.int64)
    base = indptr[lo]
    for v in range(lo, hi):
        for j in range(list_ptr[v], list_ptr[v + 1]):
            mark[list_members[j]] = v
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            count = 0
            for j in range(list_ptr[u], list_ptr[u + 1]):
                if mark[list_members[j]] == v:
                    count += 1
            out[e - base] = count
    return out


if numba is not None:
    _marker_agreements = numba.njit(cache=True, nogil=True)(_marker_agreements)


def _sparse_agreements(graph: Graph, lists: CandidateLists, lo: int, hi: int, mats=None) -> np.ndarray:
    adj, s, s_t = mats if mats is not None else _agreement_mats(graph, lists)
    block = adj[lo:hi]
    overlap = s[lo:hi] @ s_t
    shifted = (block + block.multiply(overlap)).tocsr()
    shifted.sort_indices()
    if not np.array_equal(shifted.indptr, block.indptr):
        raise AssertionError("agreement pattern diverged from adjacency")
    return shifted.data.astype(np.int64) - 1


def _agreement_mats(graph: Graph, lists: CandidateLists):
    # overlaps never exceed the longest list, so a narrow dtype is safe
    dtype = np.int16 if len(lists) == 0 or lists.sizes.max() < 2**15 - 1 else np.int32
    s = lists.to_csr(dtype)
    adj = graph.to_csr().astype(dtype)
    return adj, s, s.T.tocsr()


def _agreement_source(graph: Graph, lists: CandidateLists, method: str):
    """Callable ``(lo, hi) -> agreements`` with per-graph setup done once."""
    if method == "auto":
        method = "marker" if numba is not None else "sparse"
    if method == "sparse":
        mats = _agreement_mats(graph, lists)
        return lambda lo, hi: _sparse_agreements(graph, lists, lo, hi, mats)
    if method == "marker":
        narrow = len(lists) < 2**31
        indices = graph.indices.astype(np.int32) if narrow else graph.indices
        members = lists.members.astype(np.int32) if narrow else lists.members
        return lambda lo, hi: _marker_agreements(
            graph.indptr, indices, lists.indptr, members, lo, hi
        )
    raise ValueError(f"unknown agreement method {method!r}")


def edge_agreements(
    graph: Graph, lists: CandidateLists, lo: int = 0, hi: int | None = None, *, method: str = "auto"
) -> np.ndarray:
    """``|S_v & S_u|`` for every CSR entry ``(v, u)`` with ``lo <= v < hi``.

    ``method="marker"`` walks each neighbour's list against a per-vertex
    mark array (compiled with numba when available); ``method="sparse"``
    extracts the entries of the sparse product ``S @ S.T`` on the edges.
    ``"auto"`` picks the marker walk if numba is installed.
    """
    hi = graph.n if hi is None else hi
    return _agreement_source(graph, lists, method)(lo, hi)


def assign(
    graph: Graph,
    params: DetectionParams | None = None,
    lists: CandidateLists | None = None,
    *,
    workers: int = 1,
    method: str = "auto",
) -> Assignment:
    """Preferred neighbour of every vertex (vectorised :func:`select_preferred`).

    ``method`` selects how agreements are computed, see :func:`edge_agreements`.
    """
    params = params or DetectionParams()
    lists = lists if lists is not None else compile_all(graph, params, workers=workers)
    deg = graph.degrees
    k = lists.sizes
    tau = params.tau_fraction
    norm_of = deg if params.normalization == "min_degree" else k
    agreements = _agreement_source(graph, lists, method)

    def block(lo, hi):
        start, stop = graph.indptr[lo], graph.indptr[hi]
        dst = graph.indices[start:stop]
        src = np.repeat(np.arange(lo, hi), deg[lo:hi])
        agr = agreements(lo, hi)
        ok = agr * tau.denominator >= tau.numerator * np.minimum(norm_of[src], norm_of[dst])

        local_ptr = graph.indptr[lo : hi + 1] - start
        score = np.where(ok, agr, -1)
        best = np.maximum.reduceat(score, local_ptr[:-1])
        top_deg = np.maximum.reduceat(deg[dst], local_ptr[:-1])
        has_ok = best[src - lo] >= 0
        cand = np.where(
            has_ok, ok & (score == best[src - lo]), deg[dst] == top_deg[src - lo]
        )
        if params.tie_policy == "lowest_id":
            keys = dst.astype(np.uint64)
        else:
            keys = tie_keys(params.seed, src, dst)
        keys = np.where(cand, keys, np.uint64(_MASK))
        row_min = np.minimum.reduceat(keys, local_ptr[:-1])
        hit = np.flatnonzero(cand & (keys == row_min[src - lo]))
        # CSR order is ascending dst, so the first hit of a row has the lowest id
        pick = hit[np.r_[True, src[hit][1:] != src[hit][:-1]]]
        prov = np.where(has_ok[pick], Provenance.AGREEMENT, Provenance.DEGREE_FALLBACK)
        return dst[pick], prov.astype(np.uint8)

    parts = _run_blocks(block, graph.n, workers)
    preferred = np.concatenate([p for p, _ in parts]) if parts else np.zeros(0, np.int64)
    provenance = np.concatenate([q for _, q in parts]) if parts else np.zeros(0, np.uint8)
    return Assignment(preferred, provenance)


def check_graph(graph: Graph):
    report = validate(graph)
    if not report.is_valid:
        raise ValidationError(report)


def detect(
    graph: Graph, params: DetectionParams | None = None, *, workers: int = 1
) -> tuple[Partition, Assignment]:
    """Run the three steps on ``graph``.

    Parameters
    ----------
    graph : Graph
        Must satisfy :func:`~agreecomm.graph.validate`.
    params : DetectionParams, optional
    workers : int
        Threads used for the per-vertex steps. The output does not
        depend on this value.

    Returns
    -------
    partition : Partition
        Communities labelled by their smallest vertex id.
    assignment : Assignment
    """
    check_graph(graph)
    params = params or DetectionParams()
    lists = compile_all(graph, params, workers=workers)
    assignment = assign(graph, params, lists, workers=workers)
    return uncover(assignment, graph.n), assignment
