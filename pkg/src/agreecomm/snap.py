"""Loader for SNAP networks with ground-truth communities."""
from __future__ import annotations

import numpy as np

from .graph import Graph, GraphError, IdRemap, Partition, _text_stream, load_edge_list

AMAZON_HINT = (
    "download com-amazon.ungraph.txt.gz and com-amazon.all.dedup.cmty.txt.gz from "
    "https://snap.stanford.edu/data/com-Amazon.html and gunzip them"
)


def read_communities(stream) -> tuple[np.ndarray, np.ndarray]:
    """Parse one community per line (whitespace-separated member ids).

    Returns
    -------
    members, community : ndarray
        Parallel arrays with one entry per (vertex, community) membership.
    """
    members, community = [], []
    c = 0
    for line in _text_stream(stream):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        members.extend(int(t) for t in tokens)
        community.extend([c] * len(tokens))
        c += 1
    return np.array(members, dtype=np.int64), np.array(community, dtype=np.int64)


def single_membership(members: np.ndarray, community: np.ndarray, seed=None) -> dict:
    """Keep one community per vertex, chosen uniformly among its memberships."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(members))
    vertices, first = np.unique(members[order], return_index=True)
    return dict(zip(vertices.tolist(), community[order][first].tolist()))


def induced(graph: Graph, keep: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on the vertices where ``keep`` is true, minus isolated ones.

    Returns the subgraph and the old id of each new vertex.
    """
    u, v = graph.edges()
    both = keep[u] & keep[v]
    u, v = u[both], v[both]
    old = np.unique(np.concatenate([u, v]))
    new = np.full(graph.n, -1, dtype=np.int64)
    new[old] = np.arange(len(old))
    return Graph.from_edges(len(old), new[u], new[v]), old


def load_with_communities(edges, communities, seed=None) -> tuple[Graph, Partition, IdRemap]:
    """Graph restricted to vertices with a ground-truth community.

    Vertices with several communities keep one at random (seeded).
    Vertices without any community are dropped, as are vertices left
    without neighbours afterwards.
    """
    graph, remap = load_edge_list(edges, remap="sorted")
    members, community = read_communities(communities)
    if len(members) == 0:
        raise GraphError("community file lists no members")
    chosen = single_membership(members, community, seed)
    ext = remap.external
    keep = np.fromiter((int(e) in chosen for e in ext), bool, len(ext))
    sub, old = induced(graph, keep)
    external = ext[old]
    truth = Partition(np.array([chosen[int(e)] for e in external], dtype=np.int64))
    return sub, truth, IdRemap(external)
