"""Benchmark graphs with planted communities.

* :func:`gen_planted` - equal-size groups with independent Bernoulli edges,
  parametrised by the expected total degree ``z`` and the expected number
  of inter-group neighbours ``z_out``.
* :func:`gen_lfr_like` - power-law degrees and community sizes with a
  mixing fraction ``mu``, built by stub matching. It approximates the LFR
  benchmark; use :func:`load_lfr_files` to read output of the reference
  LFR tool.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np
from scipy.optimize import brentq

from .graph import (
    Graph,
    GraphError,
    IdRemap,
    Partition,
    _text_stream,
    load_edge_list,
    read_partition,
    write_edge_list,
    write_partition,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Generator parameters violate a constraint."""


@dataclass(frozen=True)
class PlantedConfig:
    n: int = 128
    groups: int = 4
    z: float = 16.0
    z_out: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.groups < 1 or self.n % self.groups:
            raise ConfigError(f"n={self.n} must be divisible by groups={self.groups}")
        if self.group_size < 2:
            raise ConfigError("groups need at least 2 vertices")
        if not 0 <= self.z_out <= self.z:
            raise ConfigError(f"z_out must lie in [0, z={self.z}], got {self.z_out}")
        if not 0 <= self.p_in <= 1:
            raise ConfigError(f"p_in = z_in/(group_size-1) = {self.p_in:.4g} is outside [0, 1]")
        if not 0 <= self.p_out <= 1:
            raise ConfigError(f"p_out = z_out/(n-group_size) = {self.p_out:.4g} is outside [0, 1]")

    @property
    def group_size(self) -> int:
        return self.n // self.groups

    @property
    def z_in(self) -> float:
        return self.z - self.z_out

    @property
    def p_in(self) -> float:
        return self.z_in / (self.group_size - 1)

    @property
    def p_out(self) -> float:
        if self.groups == 1:
            return 0.0
        return self.z_out / (self.n - self.group_size)


def _repair_isolated(rng, src, dst, membership, n, max_degree=None):
    """Give each isolated vertex one edge to a member of its own community."""
    src, dst = list(src), list(dst)
    deg = np.bincount(np.concatenate([src, dst]).astype(np.int64), minlength=n)
    members: dict[int, np.ndarray] = {}
    for v in np.flatnonzero(deg == 0).tolist():
        if deg[v]:
            continue
        c = membership[v]
        if c not in members:
            members[c] = np.flatnonzero(membership == c)
        pool = members[c][members[c] != v]
        if max_degree is not None:
            pool = pool[deg[pool] < max_degree]
        if not len(pool):
            raise ConfigError(f"cannot connect isolated vertex {v} inside its community")
        u = int(rng.choice(pool))
        src.append(v)
        dst.append(u)
        deg[v] += 1
        deg[u] += 1
    return np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)


def gen_planted(config: PlantedConfig | None = None, **kwargs) -> tuple[Graph, Partition]:
    """Planted partition graph and its ground truth.

    Every pair inside a group is joined with probability ``p_in`` and every
    pair across groups with ``p_out``, independently. Vertex ``v`` belongs
    to group ``v // group_size``.
    """
    config = config or PlantedConfig(**kwargs)
    rng = np.random.default_rng(config.seed)
    s, g = config.group_size, config.groups
    membership = np.arange(config.n) // s
    iu, ju = np.triu_indices(s, 1)
    src, dst = [], []
    for a in range(g):
        hit = rng.random(len(iu)) < config.p_in
        src.append(iu[hit] + a * s)
        dst.append(ju[hit] + a * s)
        for b in range(a + 1, g):
            hit = np.flatnonzero(rng.random(s * s) < config.p_out)
            i, j = np.divmod(hit, s)
            src.append(i + a * s)
            dst.append(j + b * s)
    src, dst = _repair_isolated(rng, np.concatenate(src), np.concatenate(dst), membership, config.n)
    return Graph.from_edges(config.n, src, dst), Partition(membership)


@dataclass(frozen=True)
class LfrLikeConfig:
    n: int = 1000
    mu: float = 0.3
    degree_exponent: float = 2.0
    community_exponent: float = 1.0
    avg_degree: float = 20.0
    max_degree: int = 50
    min_community: int = 10
    max_community: int = 50
    seed: int = 0
    max_retries: int = 20

    def __post_init__(self):
        if not 0 <= self.mu <= 1:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu}")
        if not 1 <= self.avg_degree <= self.max_degree < self.n:
            raise ConfigError(
                f"need 1 <= avg_degree ({self.avg_degree}) <= max_degree "
                f"({self.max_degree}) < n ({self.n})"
            )
        if not 2 <= self.min_community <= self.max_community <= self.n:
            raise ConfigError(
                f"need 2 <= min_community ({self.min_community}) <= max_community "
                f"({self.max_community}) <= n ({self.n})"
            )


def _powerlaw_mean(lo: float, hi: float, exponent: float) -> float:
    """Mean of the density proportional to ``x**-exponent`` on ``[lo, hi]``."""
    if hi - lo < 1e-12:
        return lo

    def moment(p):
        # integral of x**(p - exponent) over [lo, hi]
        e = p - exponent + 1
        if abs(e) < 1e-12:
            return math.log(hi / lo)
        return (hi**e - lo**e) / e

    return moment(1) / moment(0)


def _powerlaw_sample(rng, size, lo: float, hi: float, exponent: float) -> np.ndarray:
    u = rng.random(size)
    if hi - lo < 1e-12:
        return np.full(size, lo)
    e = 1 - exponent
    if abs(e) < 1e-12:
        return lo * (hi / lo) ** u
    return (lo**e + u * (hi**e - lo**e)) ** (1 / e)


def _degree_floor(config: LfrLikeConfig) -> float:
    hi = float(config.max_degree)
    if _powerlaw_mean(1.0, hi, config.degree_exponent) > config.avg_degree:
        raise ConfigError(
            f"avg_degree {config.avg_degree} is unreachable with exponent "
            f"{config.degree_exponent} below max_degree {config.max_degree}"
        )
    if config.avg_degree >= hi:
        return hi
    return brentq(lambda x: _powerlaw_mean(x, hi, config.degree_exponent) - config.avg_degree, 1.0, hi)


def _community_sizes(rng, config: LfrLikeConfig) -> np.ndarray:
    lo, hi = config.min_community, config.max_community
    sizes = []
    total = 0
    while total < config.n:
        s = int(round(_powerlaw_sample(rng, 1, lo, hi + 0.5, config.community_exponent)[0]))
        s = min(max(s, lo), hi)
        sizes.append(s)
        total += s
    sizes = np.array(sizes, dtype=np.int64)
    excess = total - config.n
    while excess > 0:
        shrinkable = np.flatnonzero(sizes > lo)
        if len(shrinkable):
            i = rng.choice(shrinkable)
            cut = min(excess, int(sizes[i] - lo), 1 + excess // max(1, len(shrinkable)))
            sizes[i] -= cut
            excess -= cut
            continue
        # every community at the minimum: dissolve one and spread its members
        i = rng.integers(len(sizes))
        excess -= int(sizes[i])
        sizes = np.delete(sizes, i)
        while excess < 0:
            growable = np.flatnonzero(sizes < hi)
            if not len(growable):
                raise ConfigError("community size bounds cannot tile n vertices")
            sizes[rng.choice(growable)] += 1
            excess += 1
    return sizes


def _place(rng, sizes: np.ndarray, internal: np.ndarray):
    """Assign vertices to communities so that internal degrees fit.

    Vertices are processed by decreasing internal degree; each takes a
    uniformly random free slot among communities large enough to host it.
    Returns the membership and the number of vertices whose internal
    degree had to be clipped.
    """
    n = len(internal)
    by_size = np.argsort(-sizes, kind="stable")
    order = np.lexsort((rng.random(n), -internal))
    picks = rng.random(n).tolist()
    free: list[int] = []
    membership = np.empty(n, dtype=np.int64)
    clipped = 0
    ptr = 0
    remaining = sizes.copy()
    for v, r in zip(order.tolist(), picks):
        need = internal[v]
        while ptr < len(by_size) and sizes[by_size[ptr]] - 1 >= need:
            c = int(by_size[ptr])
            free.extend([c] * int(remaining[c]))
            ptr += 1
        if free:
            i = int(r * len(free))
            c = free[i]
            free[i] = free[-1]
            free.pop()
        else:
            # nobody large enough has room: take the biggest community left
            c = int(next(c for c in by_size[ptr:] if remaining[c] > 0))
            clipped += 1
        remaining[c] -= 1
        membership[v] = c
    return membership, clipped


def _match_stubs(rng, stubs: np.ndarray, groups: np.ndarray, rounds: int, forbid_same=None):
    """Random stub matching within each group, rejecting loops and repeats.

    ``groups`` gives each stub's matching pool (all zeros for a global
    pool). ``forbid_same`` optionally gives a per-vertex label; pairs
    sharing it are rejected. Returns accepted ``(src, dst)``.
    """
    accepted = np.zeros(0, dtype=np.int64)
    n_key = int(stubs.max()) + 1 if len(stubs) else 1
    for _ in range(rounds):
        if len(stubs) < 2:
            break
        order = np.lexsort((rng.random(len(stubs)), groups))
        stubs, groups = stubs[order], groups[order]
        # pair consecutive stubs; a pool with an odd count leaves one over
        starts = np.flatnonzero(np.r_[True, groups[1:] != groups[:-1]])
        offset = np.arange(len(stubs)) - np.repeat(starts, np.diff(np.r_[starts, len(stubs)]))
        first = np.flatnonzero((offset % 2 == 0))
        first = first[first + 1 < len(stubs)]
        first = first[groups[first] == groups[first + 1]]
        a, b = stubs[first], stubs[first + 1]
        ok = a != b
        if forbid_same is not None:
            ok &= forbid_same[a] != forbid_same[b]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n_key + hi
        fresh = ok & ~np.isin(keys, accepted)
        # first occurrence wins among repeats in this round
        _, idx = np.unique(np.where(fresh, keys, -1), return_index=True)
        keep = np.zeros(len(keys), dtype=bool)
        keep[idx] = True
        keep &= fresh
        accepted = np.union1d(accepted, keys[keep])
        used = np.zeros(len(stubs), dtype=bool)
        used[first[keep]] = True
        used[first[keep] + 1] = True
        stubs, groups = stubs[~used], groups[~used]
    return np.divmod(accepted, n_key), len(stubs)


def gen_lfr_like(config: LfrLikeConfig | None = None, **kwargs) -> tuple[Graph, Partition]:
    """LFR-style graph: power-law degrees and community sizes, mixing ``mu``.

    Each vertex's degree is split into ``(1 - mu) * d`` internal and
    ``mu * d`` external stubs (randomised rounding keeps the expectation
    exact). Internal stubs are matched inside the community, external
    stubs across communities. A pair that would create a loop or a repeated
    edge is re-drawn a few times and then dropped, and so is an external
    pair that lands inside one community.

    Vertices whose internal degree does not fit in any community lose the
    excess. If that happens to more than 1% of the vertices the community
    sizes are redrawn, and after ``max_retries`` failures a
    :class:`ConfigError` is raised.
    """
    config = config or LfrLikeConfig(**kwargs)
    rng = np.random.default_rng(config.seed)
    n = config.n
    floor = _degree_floor(config)
    degrees = np.rint(_powerlaw_sample(rng, n, floor, config.max_degree, config.degree_exponent))
    degrees = np.clip(degrees, 1, config.max_degree).astype(np.int64)
    raw_internal = (1 - config.mu) * degrees
    internal = np.floor(raw_internal).astype(np.int64)
    internal += rng.random(n) < raw_internal - internal

    for attempt in range(config.max_retries):
        sizes = _community_sizes(rng, config)
        need = np.minimum(internal, sizes.max() - 1)
        membership, clipped = _place(rng, sizes, need)
        clipped += int(np.count_nonzero(need < internal))
        if clipped <= 0.01 * n:
            break
        log.debug("attempt %d: %d vertices did not fit, retrying", attempt, clipped)
    else:
        raise ConfigError(
            f"could not fit internal degrees into communities after {config.max_retries} attempts"
        )
    # clipped vertices lose the internal stubs that did not fit; turning them
    # into external stubs would shift the mixing away from mu
    external = degrees - internal
    internal = np.minimum(need, sizes[membership] - 1)
    # an internal pool with an odd stub count drops one stub
    parity = np.bincount(membership, weights=internal, minlength=len(sizes)).astype(np.int64) % 2
    for c in np.flatnonzero(parity):
        cand = np.flatnonzero((membership == c) & (internal > 0))
        internal[rng.choice(cand)] -= 1

    in_stubs = np.repeat(np.arange(n), internal)
    (si, di), _ = _match_stubs(rng, in_stubs, membership[in_stubs], rounds=30)
    out_stubs = np.repeat(np.arange(n), external)
    (so, do), left = _match_stubs(
        rng, out_stubs, np.zeros(len(out_stubs), dtype=np.int64), rounds=30, forbid_same=membership
    )
    if left:
        log.debug("dropped %d unmatched external stubs", left)
    src, dst = _repair_isolated(
        rng, np.r_[si, so], np.r_[di, do], membership, n, max_degree=config.max_degree
    )
    return Graph.from_edges(n, src, dst), Partition(membership)


def inter_edge_fraction(graph: Graph, truth: Partition) -> float:
    u, v = graph.edges()
    labels = truth.labels
    return float(np.mean(labels[u] != labels[v])) if len(u) else 0.0


def save_benchmark(prefix, graph: Graph, truth: Partition, remap: IdRemap | None = None):
    """Write ``<prefix>.edges`` and ``<prefix>.truth``."""
    prefix = Path(prefix)
    edges_path = prefix.with_name(prefix.name + ".edges")
    truth_path = prefix.with_name(prefix.name + ".truth")
    with open(edges_path, "w") as f:
        write_edge_list(graph, f, remap)
    with open(truth_path, "w") as f:
        write_partition(truth, f, remap)
    return edges_path, truth_path


def load_benchmark(prefix) -> tuple[Graph, Partition, IdRemap]:
    prefix = Path(prefix)
    with open(prefix.with_name(prefix.name + ".edges")) as f:
        graph, remap = load_edge_list(f, remap="sorted")
    with open(prefix.with_name(prefix.name + ".truth")) as f:
        truth = read_partition(f)
    return graph, truth.restrict(remap.external).map_vertices(remap.internal), remap


def write_lfr_files(graph: Graph, truth: Partition, network: IO[str], community: IO[str]):
    """Write in the reference LFR tool's layout: 1-based, both directions."""
    src = graph.edge_sources() + 1
    dst = graph.indices + 1
    network.writelines(f"{a}\t{b}\n" for a, b in zip(src.tolist(), dst.tolist()))
    labels = truth.canonical_labels() + 1
    community.writelines(f"{v + 1}\t{c}\n" for v, c in zip(truth.vertices.tolist(), labels.tolist()))


def load_lfr_files(network, community) -> tuple[Graph, Partition]:
    """Read ``network.dat`` / ``community.dat`` as written by the LFR tool.

    Vertex ids are remapped to ``0..n-1`` in ascending order. Weighted
    network files are accepted (extra columns ignored). A vertex listed
    with several communities keeps the first one.
    """
    lines = []
    for lineno, line in enumerate(_text_stream(network), 1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) < 2:
            raise GraphError(f"network line {lineno}: expected 'u v', got {line.rstrip()!r}")
        lines.append(f"{tokens[0]} {tokens[1]}\n")
    graph, remap = load_edge_list("".join(lines), remap="sorted")

    mapping = {}
    for lineno, line in enumerate(_text_stream(community), 1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) < 2:
            raise GraphError(f"community line {lineno}: expected 'v label', got {line.rstrip()!r}")
        mapping.setdefault(int(tokens[0]), int(tokens[1]))
    missing = [int(e) for e in remap.external if int(e) not in mapping]
    if missing:
        raise GraphError(f"vertices without a community: {missing}")
    labels = [mapping[int(e)] for e in remap.external]
    return graph, Partition(labels)
