"""Connectivity-guaranteed nearest-neighbor graph over a distance matrix.

A minimum spanning tree (symmetrized into directed edge pairs) keeps the
graph connected; additional directed edges from nearest non-neighbors then
raise every vertex's in-degree to the configured minimum. Tie-breaking is
always by smaller vertex index so identical inputs yield identical graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# scan the sorted edge stream in slices; the tree usually completes early
_KRUSKAL_CHUNK = 1 << 18


def _validated_distances(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError("distance matrix must be square")
    if not np.isfinite(D).all():
        raise ValidationError("distance matrix contains non-finite values")
    if (D < 0).any():
        raise ValidationError("distance matrix contains negative values")
    if np.diagonal(D).any():
        raise ValidationError("distance matrix must have a zero diagonal")
    if not np.array_equal(D, D.T):
        raise ValidationError("distance matrix must be symmetric")
    return D


@dataclass
class NeighborGraph:
    """Directed weighted graph; ``incoming[i]`` lists sources of edges into i.

    Neighbor arrays are sorted ascending, with ``in_weights[i]`` holding the
    matching edge distances.
    """

    n: int
    delta: int
    incoming: tuple[np.ndarray, ...]
    in_weights: tuple[np.ndarray, ...]

    def in_degrees(self) -> np.ndarray:
        return np.array([a.size for a in self.incoming])

    def edge_count(self) -> int:
        return int(sum(a.size for a in self.incoming))

    def directed_edges(self) -> set[tuple[int, int]]:
        """All edges as (src, dst) pairs."""
        return {
            (int(j), i) for i, srcs in enumerate(self.incoming) for j in srcs
        }


def build_mst(D) -> list[tuple[int, int, float]]:
    """Minimum spanning tree of the complete graph implied by ``D``.

    Kruskal's algorithm with union-find; edges are considered in order of
    (weight, smaller index, larger index). Returns n-1 undirected edges as
    (u, v, weight) tuples with u < v; the graph constructor materializes
    each as two directed edges.
    """
    D = _validated_distances(D)
    n = D.shape[0]
    if n < 2:
        raise ValidationError("spanning tree needs at least 2 vertices")

    iu, ju = np.triu_indices(n, k=1)
    w = D[iu, ju]
    # stable sort keeps the row-major (u, v) order among equal weights
    order = np.argsort(w, kind="stable")

    parent = list(range(n))
    size = [1] * n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: list[tuple[int, int, float]] = []
    pos = 0
    while pos < order.size and len(edges) < n - 1:
        sel = order[pos : pos + _KRUSKAL_CHUNK]
        for u, v, wt in zip(iu[sel].tolist(), ju[sel].tolist(), w[sel].tolist()):
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
            edges.append((u, v, wt))
            if len(edges) == n - 1:
                break
        pos += _KRUSKAL_CHUNK
    return edges


def augment_to_min_degree(mst_edges, D, delta: int) -> NeighborGraph:
    """Raise every in-degree to ``delta`` by adding directed edges.

    The spanning tree edges are symmetrized first. Each vertex below the
    minimum then repeatedly gains an in-edge from its nearest vertex that
    has no edge into it yet (self excluded); these extra edges stay
    one-directional. Vertices already at ``delta`` or above are untouched.
    """
    D = _validated_distances(D)
    n = D.shape[0]
    if delta < 1:
        raise ValidationError("minimum degree must be at least 1")
    if delta >= n:
        raise ValidationError(
            f"minimum degree {delta} needs {delta} distinct neighbors; "
            f"only {n - 1} exist"
        )

    in_sets: list[set[int]] = [set() for _ in range(n)]
    for u, v, _ in mst_edges:
        in_sets[u].add(v)
        in_sets[v].add(u)

    for i in range(n):
        need = delta - len(in_sets[i])
        if need <= 0:
            continue
        have = in_sets[i]
        # stable sort: equal distances resolve to the smaller vertex index
        for j in np.argsort(D[i], kind="stable").tolist():
            if j == i or j in have:
                continue
            have.add(j)
            need -= 1
            if need == 0:
                break

    incoming = []
    in_weights = []
    for i in range(n):
        srcs = np.array(sorted(in_sets[i]), dtype=np.int64)
        incoming.append(srcs)
        in_weights.append(D[i, srcs])
    return NeighborGraph(n, delta, tuple(incoming), tuple(in_weights))


def build_graph(D, delta: int = 8) -> NeighborGraph:
    """Spanning-tree construction followed by minimum-degree augmentation."""
    return augment_to_min_degree(build_mst(D), D, delta)


def in_neighbors(graph: NeighborGraph, i: int) -> np.ndarray:
    """Sorted source vertices of edges into vertex ``i``."""
    if not 0 <= i < graph.n:
        raise ValidationError(f"vertex index {i} out of range for n={graph.n}")
    return graph.incoming[i]


def assert_anchor_reachability(graph: NeighborGraph, n_known: int) -> bool:
    """True iff every unknown vertex is reachable from the known block.

    Vertices 0..n_known-1 are the anchors; reachability follows directed
    edges (an edge j -> i lets information flow from j to i).
    """
    if n_known == 0:
        raise ValidationError("at least one anchor is required")
    if not 0 < n_known <= graph.n:
        raise ValidationError(f"anchor count {n_known} out of range for n={graph.n}")
    out: list[list[int]] = [[] for _ in range(graph.n)]
    for i, srcs in enumerate(graph.incoming):
        for j in srcs.tolist():
            out[j].append(i)
    seen = bytearray(graph.n)
    stack = list(range(n_known))
    for v in stack:
        seen[v] = 1
    while stack:
        j = stack.pop()
        for i in out[j]:
            if not seen[i]:
                seen[i] = 1
                stack.append(i)
    return all(seen[n_known:])


def is_connected(graph: NeighborGraph) -> bool:
    """Whether the mutual (bidirectional) edges span all vertices."""
    edges = graph.directed_edges()
    parent = list(range(graph.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = graph.n
    for j, i in edges:
        if j < i and (i, j) in edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[rj] = ri
                components -= 1
    return components == 1


def graph_stats(graph: NeighborGraph) -> dict:
    """Summary counters used by the command-line ``graph-stats`` output."""
    degrees = graph.in_degrees()
    return {
        "vertices": graph.n,
        "edges": graph.edge_count(),
        "min_in_degree": int(degrees.min()),
        "max_in_degree": int(degrees.max()),
        "connected": is_connected(graph),
    }
