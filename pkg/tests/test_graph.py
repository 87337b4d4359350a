import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from agreecomm.graph import (
    Graph,
    GraphWarning,
    IdRemap,
    ParseError,
    Partition,
    ValidationError,
    karate,
    load_edge_list,
    read_partition,
    validate,
    write_edge_list,
    write_partition,
)
from strategies import graphs


def test_path_from_two_lines():
    g, remap = load_edge_list("0 1\n1 2")
    assert (g.n, g.m) == (3, 2)
    assert g.adjacency() == [[1], [0, 2], [1]]


def test_self_loop_dropped_with_warning():
    with pytest.warns(GraphWarning, match="1 self-loop"):
        g, _ = load_edge_list("0 0\n0 1")
    assert (g.n, g.m) == (2, 1)


def test_first_appearance_remap():
    g, remap = load_edge_list("5 9\n9 7")
    assert (g.n, g.m) == (3, 2)
    assert remap.internal == {5: 0, 9: 1, 7: 2}
    assert remap.to_external(2) == 7


def test_sorted_remap():
    _, remap = load_edge_list("5 9\n9 7", remap="sorted")
    assert remap.external.tolist() == [5, 7, 9]


def test_comments_and_blank_lines_skipped():
    g, _ = load_edge_list("# header\n\n0 1\n  # indented comment\n1 2\n")
    assert g.m == 2


@pytest.mark.parametrize(
    "text, lineno",
    [("0 1\n1\n", 2), ("0 1\n1 x\n", 2), ("0 1 2\n", 1)],
)
def test_malformed_line_reports_line_number(text, lineno):
    with pytest.raises(ParseError) as info:
        load_edge_list(text)
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)


def test_duplicates_collapsed_by_default():
    g, _ = load_edge_list("0 1\n1 0\n0 1\n1 2")
    assert g.m == 2


def test_duplicates_rejected_without_dedupe():
    with pytest.raises(ValidationError):
        load_edge_list("0 1\n1 0", dedupe=False)


def test_vertex_only_on_self_loop_is_stripped():
    with pytest.warns(GraphWarning):
        g, remap = load_edge_list("0 1\n2 2")
    assert g.n == 2 and 2 not in remap.internal


def test_vertex_only_on_self_loop_rejected_in_strict_mode():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GraphWarning)
        with pytest.raises(ValidationError) as info:
            load_edge_list("0 1\n2 2", strip_isolated=False)
    assert info.value.report.counts == {"isolated": 1}


def test_validate_triangle_is_clean():
    g = Graph.from_adjacency([[1, 2], [0, 2], [0, 1]])
    assert validate(g).is_valid
    assert str(validate(g)) == "valid"


def test_validate_counts_asymmetric_edge():
    report = validate([[1, 2], [0, 2], [1]])
    assert report.counts == {"asymmetric": 1}


def test_validate_counts_isolated_vertex():
    report = validate([[1], [0], []])
    assert report.counts == {"isolated": 1}


def test_validate_reports_loops_duplicates_and_order():
    report = validate([[0, 2, 1], [0, 0], [0]])
    assert report.counts["self_loops"] == 1
    assert report.counts["duplicates"] == 1
    assert report.counts["unsorted"] == 1


def test_validate_out_of_range():
    assert validate([[1], [0, 5]]).counts["out_of_range"] == 1


def test_graph_arrays_are_read_only():
    g = Graph.from_edges(2, [0], [1])
    with pytest.raises(ValueError):
        g.indices[0] = 1


def test_karate_counts():
    g, truth = karate()
    assert (g.n, g.m) == (34, 78)
    assert truth.num_communities == 2
    assert validate(g).is_valid


def test_karate_member_34_has_max_degree():
    g, _ = karate()
    deg = g.degrees
    assert int(np.argmax(deg)) == 33
    assert deg[33] == 17
    assert np.sum(deg == deg.max()) == 1


def test_karate_factions_sizes():
    _, truth = karate()
    assert sorted(truth.sizes().tolist()) == [17, 17]
    # members 1 and 34 lead opposite factions
    assert truth.labels[0] != truth.labels[33]


def test_karate_matches_networkx():
    nx = pytest.importorskip("networkx")
    ref = nx.karate_club_graph()
    g, truth = karate()
    assert sorted(map(tuple, np.stack(g.edges(), 1).tolist())) == sorted(
        tuple(sorted(e)) for e in ref.edges()
    )
    clubs = [ref.nodes[v]["club"] for v in range(34)]
    assert all((c == "Mr. Hi") == (truth.labels[v] == truth.labels[0]) for v, c in enumerate(clubs))


def test_partition_file_round_trip():
    p = Partition([3, 3, 7, 7, 1], [10, 11, 12, 13, 14])
    buf = io.StringIO()
    write_partition(p, buf)
    assert read_partition(buf.getvalue()) == p


def test_partition_rejects_repeated_vertex():
    with pytest.raises(ParseError, match="twice"):
        read_partition("1 0\n1 1\n")


def test_partition_equality_ignores_label_values():
    assert Partition([5, 5, 2]) == Partition([0, 0, 1])
    assert Partition([0, 0, 1]) != Partition([0, 1, 1])


def test_idremap_rejects_duplicates():
    from agreecomm.graph import GraphError

    with pytest.raises(GraphError):
        IdRemap(np.array([1, 1]))


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_loaded_graphs_satisfy_invariants(g):
    buf = io.StringIO()
    write_edge_list(g, buf)
    loaded, _ = load_edge_list(buf.getvalue())
    assert validate(loaded).is_valid
    assert loaded.degrees.sum() == 2 * loaded.m
    for v in range(loaded.n):
        nbrs = loaded.neighbors(v)
        assert np.all(np.diff(nbrs) > 0)
        for u in nbrs:
            assert v in loaded.neighbors(u)


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_serialise_then_load_is_a_fixed_point(g):
    buf = io.StringIO()
    write_edge_list(g, buf, IdRemap(np.arange(g.n) * 3 + 100))
    once, remap1 = load_edge_list(buf.getvalue())
    buf2 = io.StringIO()
    write_edge_list(once, buf2, remap1)
    twice, remap2 = load_edge_list(buf2.getvalue())
    # same graph up to the external names, and identical under the sorted order
    perm = np.array([remap1.internal[int(e)] for e in remap2.external])
    assert twice.relabel(perm) == once
    sorted_once, _ = load_edge_list(buf.getvalue(), remap="sorted")
    sorted_twice, _ = load_edge_list(buf2.getvalue(), remap="sorted")
    assert sorted_once == sorted_twice == g
