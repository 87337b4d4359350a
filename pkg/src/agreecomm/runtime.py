"""Detection as a two-round message protocol between vertex actors.

Every vertex is an actor that only knows its own neighbour ids and what
arrives in its inbox. Round one announces degrees, round two announces
candidate lists; after the second barrier each actor picks its preferred
neighbour with the same rules as :mod:`agreecomm.detection`. Communities
are then formed by pollers, external entities that each visit a subset
of vertices and merge ``v`` with ``a_v`` in a shared union-find.
"""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .detection import (
    Assignment,
    DetectionParams,
    Provenance,
    UnionFind,
    check_graph,
)
from .graph import Graph, Partition


class ProtocolError(RuntimeError):
    """An actor broke the message discipline (non-neighbour or repeated send)."""


class CoverError(ValueError):
    """A poller plan leaves some vertices unvisited."""

    def __init__(self, missing):
        self.missing = sorted(int(v) for v in missing)
        head = ", ".join(map(str, self.missing[:10]))
        more = ", ..." if len(self.missing) > 10 else ""
        super().__init__(f"{len(self.missing)} vertex(es) in no poller subset: [{head}{more}]")


@dataclass(frozen=True)
class DegreeAnnounce:
    sender: int
    degree: int


@dataclass(frozen=True)
class ListAnnounce:
    sender: int
    members: frozenset


Message = Union[DegreeAnnounce, ListAnnounce]


class MessageBus:
    """Reliable in-process bus with round barriers.

    Sends are only allowed along edges, and each sender may address a
    given receiver with a given message kind once per run. Messages sent
    during a round become visible at the next :meth:`barrier`, sorted by
    sender so that delivery order never depends on scheduling.
    """

    def __init__(self, graph: Graph):
        self._graph = graph
        self._pending: dict[int, list[tuple[int, Message]]] = {}
        self._sent: set[tuple[int, int, type]] = set()
        self.inboxes: list[list[Message]] = [[] for _ in range(graph.n)]
        self.rounds = 0
        self.per_round: list[int] = []
        self.kinds: Counter = Counter()

    @property
    def messages(self) -> int:
        return sum(self.per_round)

    def _outbox(self, sender: int) -> list:
        # one list per sender, so concurrent actors never share a container
        return self._pending.setdefault(sender, [])

    def send(self, sender: int, receiver: int, message: Message):
        if message.sender != sender:
            raise ProtocolError(f"vertex {sender} forged a message from {message.sender}")
        nbrs = self._graph.neighbors(sender)
        pos = np.searchsorted(nbrs, receiver)
        if pos == len(nbrs) or nbrs[pos] != receiver:
            raise ProtocolError(f"vertex {sender} sent to non-neighbour {receiver}")
        key = (sender, receiver, type(message))
        if key in self._sent:
            raise ProtocolError(
                f"vertex {sender} sent {type(message).__name__} to {receiver} twice"
            )
        self._outbox(sender).append((receiver, message))

    def barrier(self):
        """Close the current round and deliver its messages."""
        for inbox in self.inboxes:
            inbox.clear()
        count = 0
        for sender in sorted(self._pending):
            for receiver, message in self._pending[sender]:
                self._sent.add((sender, receiver, type(message)))
                self.inboxes[receiver].append(message)
                self.kinds[type(message).__name__] += 1
                count += 1
        self._pending = {}
        self.rounds += 1
        self.per_round.append(count)


@dataclass
class VertexActor:
    """State of one vertex during the protocol."""

    id: int
    neighbours: tuple
    params: DetectionParams
    neighbour_degrees: dict = field(default_factory=dict)
    neighbour_lists: dict = field(default_factory=dict)
    candidates: tuple = ()
    chosen: tuple | None = None

    @property
    def degree(self) -> int:
        return len(self.neighbours)

    def announce_degree(self, bus: MessageBus):
        for u in self.neighbours:
            bus.send(self.id, u, DegreeAnnounce(self.id, self.degree))

    def receive_degrees(self, inbox: Sequence[Message]):
        for msg in inbox:
            if isinstance(msg, DegreeAnnounce):
                self.neighbour_degrees[msg.sender] = msg.degree
        k = int(self.params.list_sizes([self.degree])[0])
        ranked = sorted(self.neighbour_degrees, key=lambda u: (-self.neighbour_degrees[u], u))
        self.candidates = tuple(ranked[:k])

    def announce_list(self, bus: MessageBus):
        members = frozenset(self.candidates)
        for u in self.neighbours:
            bus.send(self.id, u, ListAnnounce(self.id, members))

    def receive_lists(self, inbox: Sequence[Message]):
        for msg in inbox:
            if isinstance(msg, ListAnnounce):
                self.neighbour_lists[msg.sender] = msg.members
        own = set(self.candidates)
        best, qualified = -1, []
        for u in self.neighbours:
            other = self.neighbour_lists[u]
            agr = len(own & other)
            d_u = self.neighbour_degrees[u]
            if not self.params.passes(agr, d_u, self.degree, len(other), len(own)):
                continue
            if agr > best:
                best, qualified = agr, [u]
            elif agr == best:
                qualified.append(u)
        if qualified:
            self.chosen = (self.params.choose(self.id, qualified), Provenance.AGREEMENT)
            return
        top = max(self.neighbour_degrees.values())
        pool = [u for u in self.neighbours if self.neighbour_degrees[u] == top]
        self.chosen = (self.params.choose(self.id, pool), Provenance.DEGREE_FALLBACK)


def _each(fn, actors, workers: int):
    if workers <= 1:
        for actor in actors:
            fn(actor)
        return
    with ThreadPoolExecutor(workers) as pool:
        list(pool.map(fn, actors))


def run_rounds(
    graph: Graph,
    params: DetectionParams | None = None,
    *,
    bus: MessageBus | None = None,
    workers: int = 1,
) -> Assignment:
    """Compute every ``a_v`` by exchanging messages along edges only.

    Parameters
    ----------
    graph : Graph
    params : DetectionParams, optional
    bus : MessageBus, optional
        Pass one in to inspect message and round counts afterwards.
    workers : int
        Threads that step the actors within a round.
    """
    check_graph(graph)
    params = params or DetectionParams()
    bus = bus if bus is not None else MessageBus(graph)
    actors = [
        VertexActor(v, tuple(graph.neighbors(v).tolist()), params) for v in range(graph.n)
    ]

    _each(lambda a: a.announce_degree(bus), actors, workers)
    bus.barrier()
    _each(lambda a: a.receive_degrees(bus.inboxes[a.id]), actors, workers)

    _each(lambda a: a.announce_list(bus), actors, workers)
    bus.barrier()
    _each(lambda a: a.receive_lists(bus.inboxes[a.id]), actors, workers)

    return Assignment.from_pairs([a.chosen for a in actors])


@dataclass(frozen=True)
class PollerPlan:
    """Vertex subsets visited by the pollers, one subset per poller."""

    subsets: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "subsets", tuple(np.asarray(s, dtype=np.int64) for s in self.subsets)
        )

    def __len__(self):
        return len(self.subsets)

    def uncovered(self, n: int) -> np.ndarray:
        seen = np.zeros(n, dtype=bool)
        for s in self.subsets:
            seen[s[(s >= 0) & (s < n)]] = True
        return np.flatnonzero(~seen)

    @classmethod
    def whole(cls, n: int, pollers: int = 1) -> "PollerPlan":
        """Every poller visits every vertex."""
        return cls(tuple(np.arange(n) for _ in range(pollers)))

    @classmethod
    def blocks(cls, n: int, pollers: int) -> "PollerPlan":
        """Contiguous id ranges of near-equal size."""
        if pollers < 1:
            raise ValueError("need at least one poller")
        return cls(tuple(np.array_split(np.arange(n), pollers)))

    @classmethod
    def random(cls, n: int, pollers: int, seed=None, overlap: float = 0.1) -> "PollerPlan":
        """Random cover: each vertex goes to one poller, plus extra visits.

        Each vertex is additionally handed to each other poller with
        probability ``overlap``.
        """
        if pollers < 1:
            raise ValueError("need at least one poller")
        rng = np.random.default_rng(seed)
        owner = rng.integers(pollers, size=n)
        extra = rng.random((pollers, n)) < overlap
        return cls(
            tuple(rng.permutation(np.flatnonzero((owner == p) | extra[p])) for p in range(pollers))
        )


def poll_and_merge(
    assignment: Assignment, plan: PollerPlan, *, workers: int = 1
) -> Partition:
    """Form communities by letting each poller merge ``v`` with ``a_v``.

    Pollers share one union-find; with ``workers > 1`` they run
    concurrently and the union-find serialises its operations. The result
    is the same for every plan that covers all vertices.

    Raises
    ------
    CoverError
        If some vertex belongs to no subset of ``plan``.
    """
    n = len(assignment)
    missing = plan.uncovered(n)
    if len(missing):
        raise CoverError(missing)
    uf = UnionFind(n, threadsafe=workers > 1)
    preferred = assignment.preferred

    def poll(subset):
        for v in subset.tolist():
            if 0 <= v < n:
                uf.union(v, int(preferred[v]))

    _each(poll, plan.subsets, workers)
    return Partition(uf.labels())
