import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import T, random_graph
from kgwalks.community import (
    export_partition_tsv,
    load_partition,
    louvain,
    louvain_adjacency,
    modularity,
    partition_from_assignment,
    save_partition,
    undirected_projection,
)
from kgwalks.rdf_graph import build_graph
from oracles import brute_force_modularity, nx_modularity, same_partition, set_partitions, to_networkx

# two triangles {0,1,2} and {3,4,5} bridged by the edge 2-3
TWO_TRIANGLES = [
    {1: 1.0, 2: 1.0}, {0: 1.0, 2: 1.0}, {0: 1.0, 1: 1.0, 3: 1.0},
    {2: 1.0, 4: 1.0, 5: 1.0}, {3: 1.0, 5: 1.0}, {3: 1.0, 4: 1.0},
]
# frozen from brute_force_modularity(TWO_TRIANGLES): 2 * (3/7 - (7/14)^2)
TWO_TRIANGLES_OPTIMUM = 5 / 14


def random_adjacency(rng, n, p):
    adj = [{} for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                adj[u][v] = adj[v][u] = 1.0
    return adj


def test_set_partition_enumeration_counts_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


def test_two_triangle_oracle_value_is_frozen():
    q, part = brute_force_modularity(TWO_TRIANGLES)
    assert q == pytest.approx(TWO_TRIANGLES_OPTIMUM, abs=1e-12)
    assert same_partition(part, (0, 0, 0, 1, 1, 1))


@pytest.mark.parametrize("seed", range(10))
def test_louvain_finds_two_triangles(seed):
    assert same_partition(louvain_adjacency(TWO_TRIANGLES, 1.0, seed), (0, 0, 0, 1, 1, 1))


def test_edgeless_graph_keeps_singletons():
    assert louvain_adjacency([{}, {}, {}]) == [0, 1, 2]


def test_modularity_examples():
    g = build_graph([T("a", "p", "b"), T("b", "q", "c")])
    assert modularity(g, partition_from_assignment([0] * len(g))) == pytest.approx(0.0, abs=1e-12)
    assert modularity(build_graph([]), partition_from_assignment([])) == 0.0
    # two disconnected 2-edge paths, each one community
    g2 = build_graph([T("a", "p", "b"), T("c", "q", "d")])
    halves = [0 if g2.labels[v].rsplit("/", 1)[-1] in ("a", "p", "b") else 1 for v in range(len(g2))]
    assert modularity(g2, partition_from_assignment(halves)) == pytest.approx(0.5)


def test_modularity_two_disconnected_triangles_is_half():
    adj = [dict(d) for d in TWO_TRIANGLES]
    del adj[2][3], adj[3][2]
    G = to_networkx(adj)
    assert nx_modularity(G, (0, 0, 0, 1, 1, 1)) == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.3, 2.0))
def test_modularity_matches_networkx(seed, resolution):
    g = random_graph(seed, 60)
    rng = random.Random(seed)
    part = partition_from_assignment([rng.randrange(4) for _ in range(len(g))])
    G = to_networkx(undirected_projection(g))
    assert modularity(g, part, resolution) == pytest.approx(nx_modularity(G, part.assignment, resolution), abs=1e-12)


def test_projection_merges_parallel_edges():
    from kgwalks.rdf_graph import Triple, iri
    g = build_graph([Triple(iri("s"), "p", iri("s"))])
    adj = undirected_projection(g)
    s = g.entity("s")
    [p] = g.out_edges[s]
    assert adj[s][p] == 2.0


def small_test_graphs():
    """Generic random graphs and small expanded graphs, all with at most 8 vertices."""
    rng = random.Random(1234)
    graphs = [TWO_TRIANGLES]
    for n in range(2, 9):
        for _ in range(6):
            graphs.append(random_adjacency(rng, n, rng.uniform(0.2, 0.7)))
    for seed in range(40):
        g = random_graph(seed, 8)
        graphs.append(undirected_projection(g))
    return graphs


def test_louvain_close_to_brute_force_optimum():
    for adj in small_test_graphs()[:30]:
        best, _ = brute_force_modularity(adj)
        got = nx_modularity(to_networkx(adj), louvain_adjacency(adj, 1.0, 0))
        assert got >= 0.95 * best - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_louvain_never_worse_than_singletons(seed):
    g = random_graph(seed, 120)
    part = louvain(g, 1.0, seed)
    singles = partition_from_assignment(range(len(g)))
    assert modularity(g, part) >= modularity(g, singles) - 1e-12
    assert sorted(set(part.assignment)) == list(range(len(part)))


def test_louvain_deterministic_for_seed():
    g = random_graph(77, 300)
    assert louvain(g, 1.0, 5) == louvain(g, 1.0, 5)


def test_resolution_changes_granularity():
    g = random_graph(21, 300)
    assert len(louvain(g, 0.2, 0)) <= len(louvain(g, 5.0, 0))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        louvain(build_graph([]))
    with pytest.raises(ValueError):
        louvain_adjacency(TWO_TRIANGLES, resolution=0.0)


def test_partition_consistency_checked():
    from kgwalks.community import CommunityPartition
    with pytest.raises(ValueError):
        CommunityPartition((0, 1), ((0,), (0,)))
    with pytest.raises(ValueError):
        CommunityPartition((0, 0), ((0,),))


def test_partition_cache_round_trip(tmp_path):
    g = random_graph(4, 100)
    part = louvain(g)
    path = tmp_path / "part.txt"
    save_partition(part, path, g.fingerprint())
    assert load_partition(path, g.fingerprint()) == part
    with pytest.raises(ValueError, match="different graph"):
        load_partition(path, "0" * 64)


def test_export_tsv(tmp_path):
    g = build_graph([T("a", "p", "b")])
    path = tmp_path / "p.tsv"
    export_partition_tsv(g, louvain(g), path)
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert [r[0] for r in rows] == list(g.labels)


@pytest.mark.parametrize("seed", range(10))
def test_local_moving_pass_does_not_lower_modularity(seed):
    import numpy as np
    from kgwalks.community import _one_level
    adj = random_adjacency(random.Random(seed), 30, 0.15)
    m = sum(w for d in adj for w in d.values()) / 2
    comm, _ = _one_level(adj, [0.0] * len(adj), m, 1.0, np.random.default_rng(seed))
    G = to_networkx(adj)
    assert nx_modularity(G, comm) >= nx_modularity(G, range(len(adj))) - 1e-12
