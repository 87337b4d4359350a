import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agreecomm.generators import (
    ConfigError,
    LfrLikeConfig,
    PlantedConfig,
    gen_lfr_like,
    gen_planted,
    inter_edge_fraction,
    load_benchmark,
    load_lfr_files,
    save_benchmark,
    write_lfr_files,
)
from agreecomm.graph import GraphError, Partition, validate


def split_degrees(graph, truth):
    """Per-vertex intra and inter degrees, counted independently of the library."""
    labels = truth.labels
    src = np.repeat(np.arange(graph.n), graph.degrees)
    same = labels[src] == labels[graph.indices]
    intra = np.bincount(src[same], minlength=graph.n)
    return intra, graph.degrees - intra


def test_planted_without_inter_edges():
    g, truth = gen_planted(z_out=0, seed=1)
    assert inter_edge_fraction(g, truth) == 0.0


def test_planted_derived_intra_degree():
    c = PlantedConfig(z_out=6)
    assert c.z_in == 10
    assert c.group_size == 32
    assert c.p_in == pytest.approx(10 / 31)
    assert c.p_out == pytest.approx(6 / 96)


def test_planted_groups_have_equal_size():
    g, truth = gen_planted(z_out=4, seed=2)
    assert truth.sizes().tolist() == [32, 32, 32, 32]
    assert validate(g).is_valid


@pytest.mark.parametrize("z_out", [1.0, 4.0, 8.0])
def test_planted_expected_degrees(z_out):
    intra, inter, total = [], [], []
    for seed in range(200):
        g, truth = gen_planted(z_out=z_out, seed=seed)
        i, o = split_degrees(g, truth)
        intra.append(i.mean())
        inter.append(o.mean())
        total.append(g.degrees.mean())
    assert abs(np.mean(total) - 16) <= 0.5
    for values, target in ((intra, 16 - z_out), (inter, z_out)):
        se = np.std(values, ddof=1) / np.sqrt(len(values))
        assert abs(np.mean(values) - target) <= 3 * se + 0.02


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"z_out": 20}, "z_out"),
        ({"n": 130}, "divisible"),
        ({"n": 8, "groups": 8}, "at least 2"),
        ({"n": 8, "groups": 4}, "p_in"),
    ],
)
def test_planted_config_errors(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        PlantedConfig(**kwargs)


@given(st.integers(0, 2**32), st.floats(0, 16))
@settings(max_examples=25, deadline=None)
def test_planted_is_deterministic_and_valid(seed, z_out):
    a = gen_planted(z_out=z_out, seed=seed)
    b = gen_planted(z_out=z_out, seed=seed)
    assert a[0] == b[0] and a[1] == b[1]
    assert validate(a[0]).is_valid


def test_lfr_zero_mixing_is_all_internal():
    g, truth = gen_lfr_like(mu=0.0, seed=3)
    assert inter_edge_fraction(g, truth) == 0.0


def test_lfr_mixing_fraction_close_to_mu():
    fractions = [inter_edge_fraction(*gen_lfr_like(n=1000, mu=0.3, seed=s)) for s in range(20)]
    assert 0.25 <= np.mean(fractions) <= 0.35


@given(st.integers(0, 2**32), st.sampled_from([0.1, 0.4, 0.7]))
@settings(max_examples=15, deadline=None)
def test_lfr_respects_bounds_and_is_deterministic(seed, mu):
    config = LfrLikeConfig(n=600, mu=mu, seed=seed)
    g, truth = gen_lfr_like(config)
    assert validate(g).is_valid
    assert g.degrees.max() <= config.max_degree
    sizes = truth.sizes()
    assert sizes.min() >= config.min_community and sizes.max() <= config.max_community
    assert sizes.sum() == config.n
    g2, truth2 = gen_lfr_like(config)
    assert g == g2 and truth == truth2


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mu": 1.5},
        {"avg_degree": 60},
        {"max_degree": 1000},
        {"min_community": 1},
        {"min_community": 60, "max_community": 50},
    ],
)
def test_lfr_config_errors(kwargs):
    with pytest.raises(ConfigError):
        LfrLikeConfig(**kwargs)


def test_lfr_infeasible_communities_raise_after_retries():
    with pytest.raises(ConfigError, match="attempts"):
        gen_lfr_like(mu=0.0, min_community=10, max_community=10, avg_degree=30, max_retries=3)


def test_lfr_files_small_example():
    g, truth = load_lfr_files("1 2\n2 1\n2 3\n", "1 1\n2 1\n3 2\n")
    assert (g.n, g.m) == (3, 2)
    assert truth == Partition.from_communities([{0, 1}, {2}])


def test_lfr_files_collapse_both_directions():
    g, _ = load_lfr_files("1\t2\n2\t1\n1\t3\n3\t1\n", "1 1\n2 1\n3 1\n")
    assert g.m == 2


def test_lfr_files_missing_community_listed():
    with pytest.raises(GraphError, match=r"\[3\]"):
        load_lfr_files("1 2\n2 3\n", "1 1\n2 1\n")


def test_lfr_files_round_trip():
    g, truth = gen_lfr_like(n=500, mu=0.2, seed=5)
    net, com = io.StringIO(), io.StringIO()
    write_lfr_files(g, truth, net, com)
    g2, truth2 = load_lfr_files(net.getvalue(), com.getvalue())
    assert g2 == g
    assert truth2 == truth


def test_benchmark_files_round_trip(tmp_path):
    g, truth = gen_planted(z_out=3, seed=7)
    edges, labels = save_benchmark(tmp_path / "bench", g, truth)
    assert edges.exists() and labels.exists()
    g2, truth2, _ = load_benchmark(tmp_path / "bench")
    assert g2 == g and truth2 == truth
