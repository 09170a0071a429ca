"""Simple undirected graphs and the twelve route-network measures.

Every measure assumes a simple, unweighted, undirected, connected graph.
Geodesic-based quantities (betweenness, closeness, path lengths) use exact
integer shortest-path counts; per-source passes run in sorted node order so
floating-point accumulation is deterministic across runs.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

Node = Hashable
Edge = tuple[Node, Node]

GLOBAL_MEASURE_NAMES = (
    "density",
    "diameter",
    "apl",
    "transitivity",
    "avg_clustering",
    "assortativity",
)

NODE_MEASURE_NAMES = (
    "degree",
    "closeness",
    "betweenness",
    "eigenvector",
    "neighbor_degree",
)

# Edge-level measures exposed to the estimation panel: edge betweenness plus
# the maximum of each node measure over the edge's two endpoints.
LOCAL_MEASURE_NAMES = (
    "edge_betweenness",
    "max_degree",
    "max_closeness",
    "max_betweenness",
    "max_eigenvector",
    "max_neighbor_degree",
)


class GraphError(ValueError):
    """Invalid graph input (self-loops, too few nodes, ...)."""


class DisconnectedGraphError(GraphError):
    """Raised when a graph that must be connected is not."""


def normalize_edge(a: Node, b: Node) -> Edge:
    """Canonical unordered form of an edge."""
    return (a, b) if a <= b else (b, a)


class Graph:
    """Immutable simple undirected graph.

    Construct through :func:`build_graph`, which validates and deduplicates
    the edge list.
    """

    __slots__ = ("nodes", "edges", "_adj", "_pos")

    def __init__(self, nodes: tuple, edges: tuple, adj: dict):
        self.nodes = nodes
        self.edges = edges
        self._adj = adj
        self._pos = {v: i for i, v in enumerate(nodes)}

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, v: Node) -> tuple:
        return self._adj[v]

    def degree(self, v: Node) -> int:
        return len(self._adj[v])

    def has_edge(self, a: Node, b: Node) -> bool:
        return b in self._adj.get(a, ())

    def adjacency_matrix(self) -> np.ndarray:
        """Dense 0/1 adjacency in sorted node order."""
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            i, j = self._pos[u], self._pos[v]
            a[i, j] = 1
            a[j, i] = 1
        return a

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def _components(adj: dict) -> list[set]:
    seen: set = set()
    comps = []
    for start in adj:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def build_graph(edges: Iterable[Edge], on_disconnected: str = "error") -> Graph:
    """Build a validated simple graph from an edge list.

    Duplicate edges (in either orientation) collapse to one. Self-loops are
    rejected. A disconnected edge list raises :class:`DisconnectedGraphError`
    unless ``on_disconnected="largest"``, in which case the graph is reduced
    to its largest connected component (ties broken by smallest node label).
    """
    edge_set = set()
    for a, b in edges:
        if a == b:
            raise GraphError(f"self-loop ({a!r}, {b!r}) is not allowed")
        edge_set.add(normalize_edge(a, b))
    if not edge_set:
        raise GraphError("empty edge list")

    adj: dict = {}
    for a, b in edge_set:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    if len(adj) < 2:
        raise GraphError("graph needs at least two nodes")

    comps = _components(adj)
    if len(comps) > 1:
        if on_disconnected == "largest":
            keep = sorted(comps, key=lambda c: (-len(c), min(c)))[0]
            edge_set = {e for e in edge_set if e[0] in keep}
            adj = {v: nbrs & keep for v, nbrs in adj.items() if v in keep}
            if len(adj) < 2:
                raise GraphError("largest component has fewer than two nodes")
        else:
            sizes = sorted(len(c) for c in comps)
            raise DisconnectedGraphError(
                f"graph has {len(comps)} components (sizes {sizes}); "
                "measures require a connected graph"
            )

    nodes = tuple(sorted(adj))
    adj_sorted = {v: tuple(sorted(adj[v])) for v in nodes}
    return Graph(nodes, tuple(sorted(edge_set)), adj_sorted)


def read_edge_list(path) -> list[Edge]:
    """Read an edge-list CSV with header NODE_A,NODE_B."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"NODE_A", "NODE_B"} <= set(reader.fieldnames):
            raise GraphError(f"{path}: expected header with NODE_A,NODE_B")
        return [(row["NODE_A"], row["NODE_B"]) for row in reader]


@dataclass(frozen=True)
class GlobalMeasures:
    density: float
    diameter: int
    apl: float
    transitivity: float
    avg_clustering: float
    assortativity: float | None

    def as_dict(self) -> dict:
        return {
            "density": self.density,
            "diameter": float(self.diameter),
            "apl": self.apl,
            "transitivity": self.transitivity,
            "avg_clustering": self.avg_clustering,
            "assortativity": self.assortativity,
        }


@dataclass(frozen=True)
class NodeMeasures:
    degree: dict
    closeness: dict
    betweenness: dict
    eigenvector: dict
    neighbor_degree: dict


@dataclass(frozen=True)
class EdgeMeasures:
    edge_betweenness: dict
    degree: dict
    closeness: dict
    betweenness: dict
    eigenvector: dict
    neighbor_degree: dict

    def local_profile(self, edge: Edge) -> dict:
        """The edge's measure row under the panel's local-Z naming."""
        e = normalize_edge(*edge)
        return {
            "edge_betweenness": self.edge_betweenness[e],
            "max_degree": self.degree[e],
            "max_closeness": self.closeness[e],
            "max_betweenness": self.betweenness[e],
            "max_eigenvector": self.eigenvector[e],
            "max_neighbor_degree": self.neighbor_degree[e],
        }


def _bfs_lengths(g: Graph, source: Node) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in g.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def shortest_path_lengths(g: Graph) -> dict:
    """Geodesic length for every node pair, as nested dicts."""
    return {v: _bfs_lengths(g, v) for v in g.nodes}


def _betweenness_accumulate(g: Graph):
    """One Brandes pass per source; returns raw ordered-pair sums.

    Node sums exclude pairs whose endpoints include the node itself; edge
    sums include all pairs. Sources run in sorted order so accumulation is
    deterministic.
    """
    node_acc = {v: 0.0 for v in g.nodes}
    edge_acc = {e: 0.0 for e in g.edges}
    for s in g.nodes:
        stack: list = []
        preds: dict = {v: [] for v in g.nodes}
        sigma = {v: 0 for v in g.nodes}
        dist = {v: -1 for v in g.nodes}
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            stack.append(u)
            for w in g.neighbors(u):
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = {v: 0.0 for v in g.nodes}
        while stack:
            w = stack.pop()
            coeff = (1.0 + delta[w]) / sigma[w]
            for u in preds[w]:
                c = sigma[u] * coeff
                edge_acc[normalize_edge(u, w)] += c
                delta[u] += c
            if w != s:
                node_acc[w] += delta[w]
    return node_acc, edge_acc


def betweenness_centrality(g: Graph) -> tuple[dict, dict]:
    """Normalized node and edge betweenness.

    Node values sum geodesic fractions over unordered pairs excluding the
    node, scaled by 2/((n-1)(n-2)); with n == 2 the value is defined as 0.
    Edge values are scaled by 2/(n(n-1)).
    """
    node_acc, edge_acc = _betweenness_accumulate(g)
    n = g.n
    if n > 2:
        node_scale = 1.0 / ((n - 1) * (n - 2))  # ordered-pair sums count each pair twice
        node_bc = {v: node_acc[v] * node_scale for v in g.nodes}
    else:
        node_bc = {v: 0.0 for v in g.nodes}
    edge_scale = 1.0 / (n * (n - 1))
    edge_bc = {e: edge_acc[e] * edge_scale for e in g.edges}
    return node_bc, edge_bc


def eigenvector_centrality(
    g: Graph, tol: float = 1e-12, max_iter: int = 10_000
) -> tuple[dict, float]:
    """Unit-norm nonnegative principal eigenvector of the adjacency matrix.

    Power iteration from the uniform vector on A + I; the shift keeps the
    eigenvectors of A while breaking the period-2 oscillation that plain
    iteration exhibits on bipartite graphs (a star-shaped network is
    bipartite). Returns the centrality map and the principal eigenvalue of
    the unshifted adjacency (Rayleigh quotient).
    """
    a = g.adjacency_matrix().astype(float)
    n = g.n
    shifted = a + np.eye(n)
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = shifted @ x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    else:
        raise ArithmeticError(f"eigenvector iteration did not converge in {max_iter} steps")
    lam = float(x @ a @ x)
    return dict(zip(g.nodes, x)), lam


def _assortativity(g: Graph) -> float | None:
    """Pearson correlation of excess degree across edge endpoints.

    Evaluated with exact integer sums; a regular graph has zero excess-degree
    variance and the coefficient is undefined (returned as None).
    """
    m = g.m
    prod_sum = 0
    lin_sum = 0
    sq_sum = 0
    for u, v in g.edges:
        eu = g.degree(u) - 1
        ev = g.degree(v) - 1
        prod_sum += eu * ev
        lin_sum += eu + ev
        sq_sum += eu * eu + ev * ev
    denom = 2 * m * sq_sum - lin_sum * lin_sum
    if denom == 0:
        return None
    return (4 * m * prod_sum - lin_sum * lin_sum) / denom


def global_measures(g: Graph) -> GlobalMeasures:
    """Density, diameter, average path length, transitivity, average
    clustering, and degree assortativity of a connected simple graph."""
    n, m = g.n, g.m
    lengths = shortest_path_lengths(g)
    pair_lengths = [lengths[u][v] for i, u in enumerate(g.nodes) for v in g.nodes[i + 1:]]
    diameter = max(pair_lengths)
    apl = sum(pair_lengths) / len(pair_lengths)

    a = g.adjacency_matrix()
    a3 = a @ a @ a
    degrees = np.array([g.degree(v) for v in g.nodes], dtype=np.int64)
    closed_triples = int(np.trace(a3))
    open_den = int(np.sum(degrees * (degrees - 1)))
    transitivity = closed_triples / open_den if open_den else 0.0

    diag = np.diag(a3)
    clustering = 0.0
    for i in range(n):
        k = degrees[i]
        if k >= 2:
            clustering += diag[i] / (k * (k - 1))
        # degree-0/1 nodes contribute 0
    avg_clustering = clustering / n

    return GlobalMeasures(
        density=2.0 * m / (n * (n - 1)),
        diameter=int(diameter),
        apl=apl,
        transitivity=float(transitivity),
        avg_clustering=float(avg_clustering),
        assortativity=_assortativity(g),
    )


def node_measures(g: Graph) -> NodeMeasures:
    """Degree, closeness, betweenness, eigenvector centrality, and average
    neighbour degree for every node."""
    n = g.n
    lengths = shortest_path_lengths(g)
    degree = {v: g.degree(v) / (n - 1) for v in g.nodes}
    closeness = {
        v: (n - 1) / sum(d for u, d in lengths[v].items() if u != v) for v in g.nodes
    }
    node_bc, _ = betweenness_centrality(g)
    eig, _lam = eigenvector_centrality(g)
    nbr_degree = {
        v: sum(g.degree(w) for w in g.neighbors(v)) / g.degree(v) for v in g.nodes
    }
    return NodeMeasures(
        degree=degree,
        closeness=closeness,
        betweenness=node_bc,
        eigenvector=eig,
        neighbor_degree=nbr_degree,
    )


def edge_measures(g: Graph) -> EdgeMeasures:
    """Edge betweenness plus the endpoint-maximum of each node measure."""
    nm = node_measures(g)
    _, edge_bc = betweenness_centrality(g)

    def endpoint_max(values: dict) -> dict:
        return {(u, v): max(values[u], values[v]) for u, v in g.edges}

    return EdgeMeasures(
        edge_betweenness=edge_bc,
        degree=endpoint_max(nm.degree),
        closeness=endpoint_max(nm.closeness),
        betweenness=endpoint_max(nm.betweenness),
        eigenvector=endpoint_max(nm.eigenvector),
        neighbor_degree=endpoint_max(nm.neighbor_degree),
    )
