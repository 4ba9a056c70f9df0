import heapq
import itertools
from math import fsum

import networkx as nx
import numpy as np
import pytest

from embimpute import (
    NeighborGraph,
    ValidationError,
    assert_anchor_reachability,
    augment_to_min_degree,
    build_graph,
    build_mst,
    euclidean_distance_matrix,
    graph_stats,
    in_neighbors,
    is_connected,
)


def decode_prufer(seq, n):
    degree = [1] * n
    for s in seq:
        degree[s] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, s))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, s)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def exhaustive_min_tree_weight(D):
    """Minimum spanning-tree weight by enumerating every tree (n <= 6)."""
    n = D.shape[0]
    if n == 2:
        return D[0, 1]
    best = None
    for seq in itertools.product(range(n), repeat=n - 2):
        weight = fsum(D[u, v] for u, v in decode_prufer(seq, n))
        if best is None or weight < best:
            best = weight
    return best


def points(coords):
    data = np.asarray(coords, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return euclidean_distance_matrix(data)


class TestBuildMst:
    def test_collinear_path(self):
        edges = build_mst(points([0.0, 1.0, 3.0]))
        assert edges == [(0, 1, 1.0), (1, 2, 2.0)]

    def test_two_vertices(self):
        edges = build_mst(points([[0.0, 0.0], [1.0, 1.0]]))
        assert len(edges) == 1
        assert edges[0][:2] == (0, 1)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(10)
        D = euclidean_distance_matrix(rng.normal(size=(6, 3)))
        tree = build_mst(D)
        assert fsum(D[u, v] for u, v, _ in tree) == exhaustive_min_tree_weight(D)

    def test_rejects_tiny_input(self):
        with pytest.raises(ValidationError):
            build_mst(np.zeros((1, 1)))

    def test_rejects_asymmetric(self):
        D = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            build_mst(D)

    def test_zero_weight_edges_allowed(self):
        # duplicate points produce legal zero-weight tree edges
        edges = build_mst(points([[0.0], [0.0], [5.0]]))
        assert sorted(w for _, _, w in edges) == [0.0, 5.0]


class TestAugmentToMinDegree:
    def test_collinear_delta_two(self):
        D = points([0.0, 1.0, 3.0])
        g = augment_to_min_degree(build_mst(D), D, 2)
        assert in_neighbors(g, 0).tolist() == [1, 2]
        assert in_neighbors(g, 1).tolist() == [0, 2]
        assert in_neighbors(g, 2).tolist() == [0, 1]

    def test_delta_one_keeps_tree(self):
        rng = np.random.default_rng(11)
        D = euclidean_distance_matrix(rng.normal(size=(9, 2)))
        mst = build_mst(D)
        g = augment_to_min_degree(mst, D, 1)
        expected = set()
        for u, v, _ in mst:
            expected.add((u, v))
            expected.add((v, u))
        assert g.directed_edges() == expected

    def test_added_sources_are_nearest_nonneighbors(self):
        rng = np.random.default_rng(12)
        D = euclidean_distance_matrix(rng.normal(size=(20, 3)))
        mst = build_mst(D)
        delta = 4
        g = augment_to_min_degree(mst, D, delta)
        assert g.in_degrees().min() >= delta

        tree_in = [set() for _ in range(20)]
        for u, v, _ in mst:
            tree_in[u].add(v)
            tree_in[v].add(u)
        for i in range(20):
            need = delta - len(tree_in[i])
            added = set(in_neighbors(g, i).tolist()) - tree_in[i]
            if need <= 0:
                assert not added
                continue
            # brute-force scan: expected sources in (distance, index) order
            candidates = sorted(
                (D[i, j], j) for j in range(20) if j != i and j not in tree_in[i]
            )
            assert added == {j for _, j in candidates[:need]}

    def test_delta_at_vertex_count_rejected(self):
        D = points([0.0, 1.0, 3.0])
        with pytest.raises(ValidationError):
            augment_to_min_degree(build_mst(D), D, 3)

    def test_no_self_loops(self):
        rng = np.random.default_rng(13)
        D = euclidean_distance_matrix(rng.normal(size=(15, 2)))
        g = build_graph(D, 5)
        assert all((j, j) not in g.directed_edges() for j in range(15))


class TestGraphQueries:
    def test_in_neighbors_path_middle(self):
        D = points([0.0, 1.0, 2.5])
        g = augment_to_min_degree(build_mst(D), D, 1)
        assert in_neighbors(g, 1).tolist() == [0, 2]

    def test_in_neighbors_invalid_index(self):
        D = points([0.0, 1.0])
        g = build_graph(D, 1)
        with pytest.raises(ValidationError):
            in_neighbors(g, 7)

    def test_in_neighbors_matches_edge_scan(self):
        rng = np.random.default_rng(14)
        D = euclidean_distance_matrix(rng.normal(size=(25, 4)))
        g = build_graph(D, 6)
        edges = g.directed_edges()
        for i in range(25):
            assert in_neighbors(g, i).tolist() == sorted(
                j for j, dst in edges if dst == i
            )


class TestAnchorReachability:
    def test_constructed_graphs_always_reachable(self):
        rng = np.random.default_rng(15)
        D = euclidean_distance_matrix(rng.normal(size=(30, 3)))
        g = build_graph(D, 4)
        for p in (1, 3, 29):
            assert assert_anchor_reachability(g, p)

    def test_handbuilt_disconnected_graph(self):
        incoming = (
            np.array([1]),
            np.array([0]),
            np.array([3]),
            np.array([2]),
        )
        weights = tuple(np.ones(a.size) for a in incoming)
        g = NeighborGraph(4, 1, incoming, weights)
        assert not assert_anchor_reachability(g, 2)
        assert not is_connected(g)

    def test_matches_bfs_oracle(self):
        rng = np.random.default_rng(16)
        D = euclidean_distance_matrix(rng.normal(size=(50, 5)))
        g = build_graph(D, 3)
        nxg = nx.DiGraph()
        nxg.add_nodes_from(range(50))
        nxg.add_edges_from(g.directed_edges())
        reached = set()
        for a in range(5):
            reached |= nx.descendants(nxg, a) | {a}
        assert assert_anchor_reachability(g, 5) == (reached >= set(range(5, 50)))

    def test_zero_anchors_rejected(self):
        D = points([0.0, 1.0])
        g = build_graph(D, 1)
        with pytest.raises(ValidationError):
            assert_anchor_reachability(g, 0)


class TestGraphInvariants:
    def test_connected_and_min_degree(self):
        rng = np.random.default_rng(17)
        for seed in range(5):
            data = np.random.default_rng(seed).normal(size=(40, 4))
            g = build_graph(euclidean_distance_matrix(data), 8)
            assert is_connected(g)
            assert g.in_degrees().min() >= 8

    def test_deterministic_construction(self):
        rng = np.random.default_rng(18)
        D = euclidean_distance_matrix(rng.normal(size=(35, 3)))
        a = build_graph(D, 5)
        b = build_graph(D, 5)
        assert a.directed_edges() == b.directed_edges()

    def test_determinism_under_distance_ties(self):
        # grid points create many equal distances
        coords = [(float(i), float(j)) for i in range(4) for j in range(4)]
        D = euclidean_distance_matrix(np.array(coords))
        a = build_graph(D, 4)
        b = build_graph(D, 4)
        assert a.directed_edges() == b.directed_edges()

    def test_stats_keys(self):
        D = points([0.0, 1.0, 3.0])
        stats = graph_stats(build_graph(D, 2))
        assert stats == {
            "vertices": 3,
            "edges": 6,
            "min_in_degree": 2,
            "max_in_degree": 2,
            "connected": True,
        }
