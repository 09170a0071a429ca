import numpy as np
import pytest
from numpy.testing import assert_allclose

from entryscope import netgraph, synthgen
from entryscope.netgraph import (
    DisconnectedGraphError,
    GraphError,
    betweenness_centrality,
    build_graph,
    edge_measures,
    eigenvector_centrality,
    global_measures,
    node_measures,
    read_edge_list,
)


def complete_graph(n):
    return build_graph([(i, j) for i in range(n) for j in range(i + 1, n)])


def test_build_graph_dedup_and_counts():
    g = build_graph(synthgen.ILLUSTRATIVE_EDGES)
    assert (g.n, g.m) == (6, 8)
    g2 = build_graph([(1, 2), (2, 1), (1, 2), (2, 3)])
    assert g2.m == 2


def test_build_graph_rejects_self_loop():
    with pytest.raises(GraphError, match="self-loop"):
        build_graph([(1, 1), (1, 2)])


def test_build_graph_rejects_disconnected():
    with pytest.raises(DisconnectedGraphError):
        build_graph([(1, 2), (3, 4)])


def test_largest_component_option():
    g = build_graph([(1, 2), (2, 3), (7, 8)], on_disconnected="largest")
    assert g.nodes == (1, 2, 3)
    assert g.m == 2


def test_read_edge_list(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("NODE_A,NODE_B\nDEN,SNA\nSNA,LAS\n")
    g = build_graph(read_edge_list(path))
    assert g.nodes == ("DEN", "LAS", "SNA")


def test_triangle_globals():
    gm = global_measures(complete_graph(3))
    assert gm.density == 1.0
    assert gm.diameter == 1
    assert gm.apl == 1.0
    assert gm.transitivity == 1.0
    assert gm.avg_clustering == 1.0
    assert gm.assortativity is None  # regular graph: zero excess-degree variance


def test_path_graph_globals():
    # Hand evaluation for 1-2-3: lengths (1,1,2); one connected triple, no
    # triangles; both end nodes have degree 1.
    gm = global_measures(build_graph([(1, 2), (2, 3)]))
    assert_allclose(gm.density, 2 / 3, rtol=0, atol=1e-15)
    assert gm.diameter == 2
    assert_allclose(gm.apl, 4 / 3, rtol=0, atol=1e-15)
    assert gm.transitivity == 0.0
    assert gm.avg_clustering == 0.0
    assert_allclose(gm.assortativity, -1.0, rtol=0, atol=1e-15)


def test_star_graph_clustering_and_eigenvector():
    # A star is bipartite: the eigenvector iteration must still converge,
    # and every node has clustering 0 (leaves by the degree<2 rule).
    g = build_graph([(0, i) for i in range(1, 6)])
    gm = global_measures(g)
    assert gm.avg_clustering == 0.0
    assert gm.transitivity == 0.0
    eig, lam = eigenvector_centrality(g)
    a = g.adjacency_matrix().astype(float)
    x = np.array([eig[v] for v in g.nodes])
    assert np.linalg.norm(a @ x - lam * x) <= 1e-8
    assert_allclose(lam, np.sqrt(5.0), atol=1e-9)


def test_complete_graph_node_measures():
    nm = node_measures(complete_graph(4))
    for v in range(4):
        assert nm.degree[v] == 1.0
        assert nm.closeness[v] == 1.0
        assert nm.betweenness[v] == 0.0
        assert_allclose(nm.eigenvector[v], 0.5, atol=1e-10)
        assert nm.neighbor_degree[v] == 3.0


def test_complete_graph_edge_betweenness():
    # Brute-force check: in K4 each adjacent pair has its own direct
    # geodesic, so every edge carries exactly one pair out of six.
    em = edge_measures(complete_graph(4))
    for e, value in em.edge_betweenness.items():
        assert_allclose(value, 1 / 6, rtol=0, atol=1e-12)


def test_two_node_graph_betweenness_defined_zero():
    node_bc, edge_bc = betweenness_centrality(build_graph([(1, 2)]))
    assert node_bc == {1: 0.0, 2: 0.0}
    assert_allclose(edge_bc[(1, 2)], 1.0)


def test_betweenness_matches_enumeration_on_random_graphs():
    rng = np.random.default_rng(5)
    for _ in range(40):
        g = synthgen.random_connected_graph(rng)
        node_fast, edge_fast = betweenness_centrality(g)
        node_slow, edge_slow = synthgen.brute_force_betweenness(g)
        for v in g.nodes:
            assert abs(node_fast[v] - node_slow[v]) <= 1e-9
        for e in g.edges:
            assert abs(edge_fast[e] - edge_slow[e]) <= 1e-9


def test_degree_sum_and_density_identity():
    rng = np.random.default_rng(11)
    for _ in range(25):
        g = synthgen.random_connected_graph(rng)
        degrees = [g.degree(v) for v in g.nodes]
        assert sum(degrees) == 2 * g.m
        gm = global_measures(g)
        assert_allclose(gm.density * g.n * (g.n - 1) / 2, g.m, rtol=0, atol=1e-9)


def test_global_measure_ranges():
    rng = np.random.default_rng(12)
    for _ in range(25):
        g = synthgen.random_connected_graph(rng)
        gm = global_measures(g)
        if g.n >= 3:
            assert gm.apl <= gm.diameter
        assert gm.apl >= 1.0
        assert 0.0 <= gm.transitivity <= 1.0
        assert 0.0 <= gm.avg_clustering <= 1.0
        assert 0.0 < gm.density <= 1.0
        if gm.assortativity is not None:
            assert -1.0 - 1e-12 <= gm.assortativity <= 1.0 + 1e-12


def test_eigenvector_invariants():
    rng = np.random.default_rng(13)
    for _ in range(25):
        g = synthgen.random_connected_graph(rng)
        eig, lam = eigenvector_centrality(g)
        x = np.array([eig[v] for v in g.nodes])
        a = g.adjacency_matrix().astype(float)
        assert abs(np.linalg.norm(x) - 1.0) <= 1e-10
        assert np.all(x >= 0.0)
        assert np.linalg.norm(a @ x - lam * x) <= 1e-8


def test_permutation_equivariance():
    rng = np.random.default_rng(14)
    g = synthgen.random_connected_graph(rng, max_nodes=7)
    perm = {v: f"n{(3 * i + 1) % g.n:02d}" for i, v in enumerate(g.nodes)}
    h = build_graph([(perm[a], perm[b]) for a, b in g.edges])

    gm_g, gm_h = global_measures(g), global_measures(h)
    for name in ("density", "diameter", "apl", "transitivity", "avg_clustering"):
        assert_allclose(getattr(gm_g, name), getattr(gm_h, name), atol=1e-12)
    if gm_g.assortativity is None:
        assert gm_h.assortativity is None
    else:
        assert_allclose(gm_g.assortativity, gm_h.assortativity, atol=1e-12)

    nm_g, nm_h = node_measures(g), node_measures(h)
    for name in ("degree", "closeness", "betweenness", "neighbor_degree"):
        for v in g.nodes:
            assert_allclose(
                getattr(nm_g, name)[v], getattr(nm_h, name)[perm[v]], atol=1e-9
            )
    for v in g.nodes:
        assert_allclose(nm_g.eigenvector[v], nm_h.eigenvector[perm[v]], atol=1e-7)


def test_endpoint_max_profile():
    em = edge_measures(synthgen.illustrative_graph())
    nm = node_measures(synthgen.illustrative_graph())
    for (u, v) in synthgen.ILLUSTRATIVE_EDGES:
        e = netgraph.normalize_edge(u, v)
        assert em.degree[e] == max(nm.degree[u], nm.degree[v])
        assert em.neighbor_degree[e] == max(nm.neighbor_degree[u], nm.neighbor_degree[v])
    profile = em.local_profile((4, 6))
    assert set(profile) == set(netgraph.LOCAL_MEASURE_NAMES)
    assert_allclose(profile["max_degree"], 0.6)
