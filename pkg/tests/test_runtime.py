import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agreecomm.detection import DetectionParams, Provenance, detect, uncover
from agreecomm.graph import Graph, karate
from agreecomm.runtime import (
    CoverError,
    DegreeAnnounce,
    ListAnnounce,
    MessageBus,
    PollerPlan,
    ProtocolError,
    poll_and_merge,
    run_rounds,
)
from oracles import random_graph
from strategies import graphs

TRIANGLE = Graph.from_adjacency([[1, 2], [0, 2], [0, 1]])
STAR = Graph.from_adjacency([[1, 2, 3, 4], [0], [0], [0], [0]])


class RecordingBus(MessageBus):
    """Bus that remembers every (sender, receiver) pair it carried."""

    def __init__(self, graph):
        super().__init__(graph)
        self.log = []

    def send(self, sender, receiver, message):
        self.log.append((sender, receiver, type(message).__name__))
        super().send(sender, receiver, message)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_triangle_matches_pipeline(seed):
    params = DetectionParams(seed=seed)
    assert run_rounds(TRIANGLE, params) == detect(TRIANGLE, params)[1]


def test_star_leaves_choose_center():
    assignment = run_rounds(STAR)
    for leaf in range(1, 5):
        assert assignment[leaf] == (0, Provenance.DEGREE_FALLBACK)


@given(graphs(max_n=40), st.integers(0, 2**32))
@settings(max_examples=80, deadline=None)
def test_message_audit(g, seed):
    bus = RecordingBus(g)
    assignment = run_rounds(g, DetectionParams(seed=seed), bus=bus)
    assert bus.rounds == 2
    assert bus.per_round == [2 * g.m, 2 * g.m]
    assert bus.messages == 4 * g.m
    assert bus.kinds == {"DegreeAnnounce": 2 * g.m, "ListAnnounce": 2 * g.m}
    # locality: every message travelled along an edge, once per kind and direction
    for sender, receiver, _ in bus.log:
        assert receiver in g.neighbors(sender)
    assert len(set(bus.log)) == len(bus.log)
    assert assignment == detect(g, DetectionParams(seed=seed))[1]


def test_bus_rejects_non_neighbour_send():
    bus = MessageBus(Graph.from_adjacency([[1], [0, 2], [1]]))
    with pytest.raises(ProtocolError, match="non-neighbour"):
        bus.send(0, 2, DegreeAnnounce(0, 1))


def test_bus_rejects_repeated_kind():
    bus = MessageBus(TRIANGLE)
    bus.send(0, 1, DegreeAnnounce(0, 2))
    bus.barrier()
    with pytest.raises(ProtocolError, match="twice"):
        bus.send(0, 1, DegreeAnnounce(0, 2))
    bus.send(0, 1, ListAnnounce(0, frozenset({1})))


def test_bus_rejects_forged_sender():
    with pytest.raises(ProtocolError, match="forged"):
        MessageBus(TRIANGLE).send(0, 1, DegreeAnnounce(2, 2))


def test_delivery_is_sorted_by_sender():
    bus = MessageBus(TRIANGLE)
    bus.send(2, 0, DegreeAnnounce(2, 2))
    bus.send(1, 0, DegreeAnnounce(1, 2))
    bus.barrier()
    assert [m.sender for m in bus.inboxes[0]] == [1, 2]


@pytest.mark.parametrize("workers", [1, 4])
def test_actor_engine_on_karate(workers):
    g, _ = karate()
    for seed in range(5):
        params = DetectionParams(seed=seed)
        assert run_rounds(g, params, workers=workers) == detect(g, params)[1]


@pytest.mark.parametrize("ties", ["lowest_id", "seeded_random"])
def test_actor_engine_matches_pipeline_on_random_graphs(ties):
    rng = np.random.default_rng(8)
    for _ in range(30):
        g = Graph.from_adjacency(random_graph(rng, int(rng.integers(3, 80)), 0.08))
        params = DetectionParams(seed=int(rng.integers(2**32)), tie_policy=ties)
        assert run_rounds(g, params) == detect(g, params)[1]


def test_single_full_plan_equals_uncover():
    g, _ = karate()
    assignment = run_rounds(g)
    assert poll_and_merge(assignment, PollerPlan.whole(g.n)) == uncover(assignment)


def test_duplicated_full_plan_equals_uncover():
    g, _ = karate()
    assignment = run_rounds(g)
    assert poll_and_merge(assignment, PollerPlan.whole(g.n, 2)) == uncover(assignment)


def test_uncovered_vertices_are_named():
    g, _ = karate()
    plan = PollerPlan([np.arange(0, 20), np.arange(22, 34)])
    with pytest.raises(CoverError) as info:
        poll_and_merge(run_rounds(g), plan)
    assert info.value.missing == [20, 21]
    assert "20, 21" in str(info.value)


def test_blocks_plan_partitions_ids():
    plan = PollerPlan.blocks(10, 3)
    assert sorted(np.concatenate(plan.subsets).tolist()) == list(range(10))
    assert len(plan) == 3


def test_random_plan_covers():
    for seed in range(20):
        assert len(PollerPlan.random(50, 4, seed=seed).uncovered(50)) == 0


def test_plan_needs_a_poller():
    with pytest.raises(ValueError):
        PollerPlan.blocks(5, 0)


def test_random_covers_match_uncover():
    rng = np.random.default_rng(99)
    for i in range(50):
        g = Graph.from_adjacency(random_graph(rng, int(rng.integers(3, 150)), 0.05))
        assignment = detect(g, DetectionParams(seed=i))[1]
        plan = PollerPlan.random(g.n, int(rng.integers(1, 6)), seed=i, overlap=float(rng.random()))
        expected = uncover(assignment)
        got = poll_and_merge(assignment, plan, workers=int(rng.integers(1, 4)))
        assert got == expected
        assert np.array_equal(got.labels, expected.labels)


@given(graphs(max_n=40), st.integers(1, 5), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_poll_and_merge_is_idempotent(g, pollers, seed):
    assignment = detect(g)[1]
    plan = PollerPlan.random(g.n, pollers, seed=seed)
    once = poll_and_merge(assignment, plan)
    assert poll_and_merge(assignment, plan) == once == uncover(assignment)
