"""Graphs and partitions, plus their text formats.

Graphs are simple undirected graphs stored as CSR arrays with
each neighbour list sorted by vertex id. Loaders map arbitrary external
integer ids onto dense internal ids ``0..n-1`` and keep the table so that
results can be written back in the caller's numbering.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Base class for malformed input and invariant violations."""


class ParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line.rstrip()!r}")


class ValidationError(GraphError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(f"graph violates invariants: {report.counts}")


class GraphWarning(UserWarning):
    """Emitted when a loader silently repairs its input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in CSR form.

    ``indices[indptr[v]:indptr[v + 1]]`` holds the neighbours of ``v`` in
    ascending order.
    """

    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_edges(cls, n: int, src, dst) -> "Graph":
        """Build a graph from endpoint arrays.

        Self-loops are discarded, both directions are added and parallel
        edges are collapsed.
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise GraphError("endpoint arrays differ in length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise GraphError(f"vertex id out of range [0, {n})")
        keep = src != dst
        src, dst = src[keep], dst[keep]
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        keys = np.unique(rows * n + cols)
        rows, cols = np.divmod(keys, n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        graph = cls(indptr, cols)
        # symmetric, sorted, loop- and duplicate-free by construction
        object.__setattr__(graph, "_canonical", True)
        return graph

    @classmethod
    def from_adjacency(cls, adjacency: Sequence[Iterable[int]]) -> "Graph":
        src, dst = [], []
        for v, nbrs in enumerate(adjacency):
            for u in nbrs:
                src.append(v)
                dst.append(u)
        return cls.from_edges(len(adjacency), src, dst)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edge_sources(self) -> np.ndarray:
        """Row index of every directed CSR entry."""
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``, sorted."""
        src = self.edge_sources()
        upper = src < self.indices
        return src[upper], self.indices[upper]

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def relabel(self, perm) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        u, v = self.edges()
        return Graph.from_edges(self.n, perm[u], perm[v])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(
            self.indices, other.indices
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of each vertex of a carrier set to one community label.

    ``vertices`` defaults to ``0..len(labels)-1``. Two partitions compare
    equal when they have the same carrier and group it the same way,
    whatever the label values.
    """

    labels: np.ndarray
    vertices: np.ndarray = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.vertices is None:
            vertices = np.arange(len(labels), dtype=np.int64)
        else:
            vertices = np.asarray(self.vertices, dtype=np.int64)
            if vertices.shape != labels.shape:
                raise GraphError("vertices and labels differ in length")
            order = np.argsort(vertices, kind="stable")
            vertices, labels = vertices[order], labels[order]
            if len(vertices) > 1 and np.any(vertices[1:] == vertices[:-1]):
                raise GraphError("a vertex appears twice in the partition")
        if labels.size and labels.min() < 0:
            raise GraphError("community labels must be non-negative")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Partition":
        items = sorted(mapping.items())
        return cls([lab for _, lab in items], [v for v, _ in items])

    @classmethod
    def from_communities(cls, communities: Iterable[Iterable[int]]) -> "Partition":
        mapping = {}
        for label, members in enumerate(communities):
            for v in members:
                if v in mapping:
                    raise GraphError(f"vertex {v} belongs to two communities")
                mapping[v] = label
        return cls.from_mapping(mapping)

    def __len__(self):
        return len(self.labels)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.vertices.tolist(), self.labels.tolist()))

    def canonical_labels(self) -> np.ndarray:
        """Labels renumbered 0, 1, ... in order of first appearance."""
        _, first, inverse = np.unique(self.labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        return rank[inverse.ravel()]

    @property
    def num_communities(self) -> int:
        return len(np.unique(self.labels))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.canonical_labels())

    def communities(self) -> list[set[int]]:
        groups: dict[int, set[int]] = {}
        for v, lab in zip(self.vertices.tolist(), self.labels.tolist()):
            groups.setdefault(lab, set()).add(v)
        return sorted(groups.values(), key=min)

    def restrict(self, vertices) -> "Partition":
        vertices = np.asarray(vertices, dtype=np.int64)
        pos = np.searchsorted(self.vertices, vertices)
        pos = np.minimum(pos, len(self.vertices) - 1)
        if len(vertices) and not np.array_equal(self.vertices[pos], vertices):
            raise GraphError("restriction to vertices outside the carrier")
        return Partition(self.labels[pos], vertices)

    def map_vertices(self, table) -> "Partition":
        """Rename carrier elements through ``table`` (array or mapping)."""
        if isinstance(table, Mapping):
            new = [table[v] for v in self.vertices.tolist()]
        else:
            new = np.asarray(table)[self.vertices]
        return Partition(self.labels, new)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.canonical_labels(), other.canonical_labels()
        )

    __hash__ = None

    def __repr__(self):
        return f"Partition(n={len(self)}, communities={self.num_communities})"


@dataclass
class IdRemap:
    """Bijection between external vertex ids and dense internal ids."""

    external: np.ndarray
    internal: dict[int, int] = field(default=None, repr=False)

    def __post_init__(self):
        self.external = np.asarray(self.external, dtype=np.int64)
        if self.internal is None:
            self.internal = {e: i for i, e in enumerate(self.external.tolist())}
        if len(self.internal) != len(self.external):
            raise GraphError("external ids are not unique")

    @classmethod
    def identity(cls, n: int) -> "IdRemap":
        return cls(np.arange(n))

    def __len__(self):
        return len(self.external)

    def to_internal(self, ext: int) -> int:
        return self.internal[ext]

    def to_external(self, v: int) -> int:
        return int(self.external[v])


@dataclass
class ValidationReport:
    """Counts of violated graph invariants; empty ``counts`` means valid."""

    counts: dict[str, int] = field(default_factory=dict)

    @property
    def is_valid(self) -> bool:
        return not self.counts

    def add(self, kind: str, count: int):
        if count:
            self.counts[kind] = self.counts.get(kind, 0) + int(count)

    def __str__(self):
        if self.is_valid:
            return "valid"
        return ", ".join(f"{k}: {v}" for k, v in sorted(self.counts.items()))


def _looks_valid(graph: Graph) -> bool:
    """Cheap sufficient test: strictly increasing rows, no loops, A == A.T."""
    n, idx = graph.n, graph.indices
    if n == 0:
        return True
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        return False
    if np.any(graph.degrees == 0):
        return False
    if getattr(graph, "_canonical", False):
        return True
    src = graph.edge_sources()
    if np.any(src == idx):
        return False
    same_row = src[1:] == src[:-1]
    if np.any(same_row & (idx[1:] <= idx[:-1])):
        return False
    adj = graph.to_csr()
    flipped = adj.T.tocsr()
    flipped.sort_indices()
    return np.array_equal(flipped.indptr, adj.indptr) and np.array_equal(flipped.indices, idx)


def validate(graph) -> ValidationReport:
    """Check a graph or a raw adjacency list against the model assumptions.

    Reports ``out_of_range``, ``self_loops``, ``duplicates``, ``unsorted``,
    ``asymmetric`` (directed entries without their reverse) and ``isolated``.
    Never raises.
    """
    report = ValidationReport()
    if isinstance(graph, Graph) and _looks_valid(graph):
        return report
    if isinstance(graph, Graph):
        indptr, dst = graph.indptr, graph.indices
    else:
        lists = [np.asarray(list(nbrs), dtype=np.int64) for nbrs in graph]
        indptr = np.zeros(len(lists) + 1, dtype=np.int64)
        np.cumsum([len(a) for a in lists], out=indptr[1:])
        dst = np.concatenate(lists) if lists else np.zeros(0, dtype=np.int64)
    n = len(indptr) - 1
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))

    # a descent between consecutive entries of the same row
    same_row = src[1:] == src[:-1]
    descents = np.flatnonzero(same_row & (dst[1:] < dst[:-1]))
    report.add("unsorted", len(np.unique(src[descents])))

    bad = (dst < 0) | (dst >= n)
    report.add("out_of_range", bad.sum())
    src, dst = src[~bad], dst[~bad]
    loops = src == dst
    report.add("self_loops", loops.sum())

    keys = src[~loops] * n + dst[~loops]
    if len(keys) > 1 and not np.all(keys[1:] >= keys[:-1]):
        keys = np.sort(keys)
    fresh = np.r_[True, keys[1:] != keys[:-1]] if len(keys) else np.zeros(0, dtype=bool)
    uniq = keys[fresh]
    report.add("duplicates", len(keys) - len(uniq))
    u, v = np.divmod(uniq, n) if n else (uniq, uniq)
    reverse = np.sort(v * n + u)
    pos = np.minimum(np.searchsorted(uniq, reverse), max(len(uniq) - 1, 0))
    found = uniq[pos] == reverse if len(uniq) else np.zeros(0, dtype=bool)
    report.add("asymmetric", (~found).sum())

    deg = np.bincount(u, minlength=n) if n else np.zeros(0, dtype=np.int64)
    report.add("isolated", (deg == 0).sum())
    return report


def _parse_pairs(stream: IO[str]):
    pairs = []
    for lineno, line in enumerate(stream, 1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) != 2:
            raise ParseError(lineno, line, f"expected 2 fields, got {len(tokens)}")
        try:
            pairs.append((int(tokens[0]), int(tokens[1])))
        except ValueError:
            raise ParseError(lineno, line, "vertex ids must be integers") from None
    return pairs


def _text_stream(source) -> IO[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_edge_list(
    stream,
    *,
    strip_isolated: bool = True,
    dedupe: bool = True,
    remap: str = "first_seen",
) -> tuple[Graph, IdRemap]:
    """Parse a whitespace-separated edge list.

    Parameters
    ----------
    stream : text stream or str
        One ``u v`` pair per line; blank lines and lines starting with
        ``#`` are skipped.
    strip_isolated : bool
        Drop vertices left without neighbours (only possible through
        self-loops) with a warning. When False they raise
        :class:`ValidationError`.
    dedupe : bool
        Collapse repeated edges. When False a repeated edge is an error.
    remap : {"first_seen", "sorted"}
        Order in which external ids receive internal ids.

    Returns
    -------
    graph : Graph
    remap : IdRemap
    """
    pairs = _parse_pairs(_text_stream(stream))
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)

    if remap == "first_seen":
        flat = arr.ravel()
        ext, first = np.unique(flat, return_index=True)
        ext = ext[np.argsort(first, kind="stable")]
    elif remap == "sorted":
        ext = np.unique(arr)
    else:
        raise ValueError(f"unknown remap order {remap!r}")

    loops = arr[:, 0] == arr[:, 1]
    if loops.any():
        warnings.warn(f"dropped {int(loops.sum())} self-loop(s)", GraphWarning, stacklevel=2)
    edges = arr[~loops]

    lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
    canon = np.stack([lo, hi], axis=1)
    n_unique = len(np.unique(canon, axis=0)) if len(canon) else 0
    if n_unique != len(canon) and not dedupe:
        raise ValidationError(ValidationReport({"duplicates": len(canon) - n_unique}))

    present = np.isin(ext, edges)
    if not present.all():
        if not strip_isolated:
            raise ValidationError(ValidationReport({"isolated": int((~present).sum())}))
        warnings.warn(
            f"dropped {int((~present).sum())} isolated vertex(es)", GraphWarning, stacklevel=2
        )
        ext = ext[present]

    table = IdRemap(ext)
    order = np.argsort(ext)
    internal = order[np.searchsorted(ext, edges, sorter=order)]
    graph = Graph.from_edges(len(ext), internal[:, 0], internal[:, 1])
    return graph, table


def write_edge_list(graph: Graph, stream: IO[str], remap: IdRemap | None = None):
    """Write each undirected edge once as ``u v``."""
    u, v = graph.edges()
    if remap is not None:
        u, v = remap.external[u], remap.external[v]
    stream.write(f"# n={graph.n} m={graph.m}\n")
    stream.writelines(f"{a} {b}\n" for a, b in zip(u.tolist(), v.tolist()))


def read_partition(stream) -> Partition:
    """Parse ``vertex label`` lines into a Partition over external ids."""
    mapping = {}
    for lineno, line in enumerate(_text_stream(stream), 1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) != 2:
            raise ParseError(lineno, line, f"expected 2 fields, got {len(tokens)}")
        try:
            v, label = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(lineno, line, "vertex and label must be integers") from None
        if v in mapping:
            raise ParseError(lineno, line, f"vertex {v} listed twice")
        mapping[v] = label
    return Partition.from_mapping(mapping)


def write_partition(partition: Partition, stream: IO[str], remap: IdRemap | None = None):
    vertices = partition.vertices
    if remap is not None:
        vertices = remap.external[vertices]
    labels = partition.canonical_labels()
    stream.writelines(f"{v} {c}\n" for v, c in zip(vertices.tolist(), labels.tolist()))


def _resource(name: str) -> str:
    return resources.files("agreecomm").joinpath("data").joinpath(name).read_text()


def karate_remap() -> IdRemap:
    """Internal id ``v`` is club member ``#(v + 1)``."""
    return IdRemap(np.arange(1, 35))


def karate() -> tuple[Graph, Partition]:
    """Zachary's karate club and its two-faction split.

    Internal vertex ``v`` is member ``#(v + 1)`` in Zachary's numbering.
    Label 0 is the instructor's faction, label 1 the administrator's.
    """
    graph, remap = load_edge_list(_resource("karate.edges"), remap="sorted")
    truth = read_partition(_resource("karate.truth"))
    return graph, truth.map_vertices(remap.internal)
