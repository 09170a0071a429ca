"""Deterministic fixtures, synthetic panels, and brute-force oracles.

Everything here is a pure function of its seed and parameters. All random
draws use numpy's default generator (the PCG64 algorithm), so fixtures are
reproducible bit-for-bit across platforms for a fixed numpy major version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .. import netgraph
from ..netgraph import Graph, build_graph
from ..quarters import Quarter
from ..threatscan import (
    BASELINE_BIN,
    EVENT_BINS,
    PanelObservation,
    cluster_label,
    event_bin,
    event_time_set,
)


class SynthError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Reference six-node network and its hand-checked measure tables.
# ---------------------------------------------------------------------------

ILLUSTRATIVE_EDGES = ((1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (3, 5), (4, 5), (4, 6))


def illustrative_graph() -> Graph:
    """The six-node, eight-edge reference network used across the test
    suites: a triangle core with a pendant node, three triangles in all."""
    return build_graph(ILLUSTRATIVE_EDGES)


# Expected measures of the reference network, derived by hand from the
# definitions (kept as exact fractions where the value is rational).
ILLUSTRATIVE_GLOBAL = {
    "density": Fraction(8, 15),
    "diameter": 3,
    "apl": Fraction(8, 5),
    "transitivity": Fraction(9, 16),
    "avg_clustering": Fraction(19, 36),
    "assortativity": Fraction(-1, 5),
}

ILLUSTRATIVE_NODE = {
    "degree": {1: Fraction(2, 5), 2: Fraction(4, 5), 3: Fraction(3, 5),
               4: Fraction(3, 5), 5: Fraction(3, 5), 6: Fraction(1, 5)},
    "closeness": {1: Fraction(5, 9), 2: Fraction(5, 6), 3: Fraction(5, 8),
                  4: Fraction(5, 7), 5: Fraction(5, 7), 6: Fraction(5, 11)},
    "betweenness": {1: Fraction(0), 2: Fraction(7, 20), 3: Fraction(1, 20),
                    4: Fraction(2, 5), 5: Fraction(1, 10), 6: Fraction(0)},
    "neighbor_degree": {1: Fraction(7, 2), 2: Fraction(11, 4), 3: Fraction(3),
                        4: Fraction(8, 3), 5: Fraction(10, 3), 6: Fraction(3)},
}

# Eigenvector centralities are irrational; three-decimal reference values.
ILLUSTRATIVE_EIGENVECTOR = {1: 0.336, 2: 0.549, 3: 0.453, 4: 0.383, 5: 0.465, 6: 0.129}

ILLUSTRATIVE_EDGE = {
    "edge_betweenness": {
        (1, 2): Fraction(7, 30), (1, 3): Fraction(1, 10), (2, 3): Fraction(2, 15),
        (2, 4): Fraction(1, 3), (2, 5): Fraction(1, 10), (3, 5): Fraction(1, 6),
        (4, 5): Fraction(1, 5), (4, 6): Fraction(1, 3),
    },
    "max_degree": {
        (1, 2): Fraction(4, 5), (1, 3): Fraction(3, 5), (2, 3): Fraction(4, 5),
        (2, 4): Fraction(4, 5), (2, 5): Fraction(4, 5), (3, 5): Fraction(3, 5),
        (4, 5): Fraction(3, 5), (4, 6): Fraction(3, 5),
    },
    "max_closeness": {
        (1, 2): Fraction(5, 6), (1, 3): Fraction(5, 8), (2, 3): Fraction(5, 6),
        (2, 4): Fraction(5, 6), (2, 5): Fraction(5, 6), (3, 5): Fraction(5, 7),
        (4, 5): Fraction(5, 7), (4, 6): Fraction(5, 7),
    },
    "max_betweenness": {
        (1, 2): Fraction(7, 20), (1, 3): Fraction(1, 20), (2, 3): Fraction(7, 20),
        (2, 4): Fraction(2, 5), (2, 5): Fraction(7, 20), (3, 5): Fraction(1, 10),
        (4, 5): Fraction(2, 5), (4, 6): Fraction(2, 5),
    },
    "max_neighbor_degree": {
        (1, 2): Fraction(7, 2), (1, 3): Fraction(7, 2), (2, 3): Fraction(3),
        (2, 4): Fraction(11, 4), (2, 5): Fraction(10, 3), (3, 5): Fraction(10, 3),
        (4, 5): Fraction(10, 3), (4, 6): Fraction(3),
    },
}

ILLUSTRATIVE_EDGE_EIGENVECTOR = {
    (1, 2): 0.549, (1, 3): 0.453, (2, 3): 0.549, (2, 4): 0.549,
    (2, 5): 0.549, (3, 5): 0.465, (4, 5): 0.465, (4, 6): 0.383,
}


# ---------------------------------------------------------------------------
# Random connected graphs and the geodesic-enumeration betweenness oracle.
# ---------------------------------------------------------------------------


def random_connected_graph(rng: np.random.Generator, max_nodes: int = 8) -> Graph:
    """A small random connected graph: a random attachment tree plus extra
    edges drawn independently."""
    n = int(rng.integers(2, max_nodes + 1))
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v))
    extra_prob = float(rng.uniform(0.1, 0.6))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_prob:
                edges.append((u, v))
    return build_graph(edges)


def _all_geodesics(g: Graph, a, b) -> list[tuple]:
    """Every shortest path between a and b, by exhaustive DFS over simple
    paths. Exponential; intended for tiny graphs only."""
    paths: list[tuple] = []

    def extend(node, visited, path):
        if node == b:
            paths.append(tuple(path))
            return
        for w in g.neighbors(node):
            if w not in visited:
                extend(w, visited | {w}, path + [w])

    extend(a, {a}, [a])
    shortest = min(len(p) for p in paths)
    return [p for p in paths if len(p) == shortest]


def brute_force_betweenness(g: Graph) -> tuple[dict, dict]:
    """Node and edge betweenness by full geodesic enumeration.

    Independent of the sweep-based production implementation; used as its
    oracle on graphs with up to ~8 nodes.
    """
    n = g.n
    node_sum = {v: 0.0 for v in g.nodes}
    edge_sum = {e: 0.0 for e in g.edges}
    for i, a in enumerate(g.nodes):
        for b in g.nodes[i + 1:]:
            geos = _all_geodesics(g, a, b)
            total = len(geos)
            for v in g.nodes:
                if v in (a, b):
                    continue
                hits = sum(1 for p in geos if v in p)
                node_sum[v] += hits / total
            for e in g.edges:
                hits = 0
                for p in geos:
                    steps = {netgraph.normalize_edge(p[i0], p[i0 + 1]) for i0 in range(len(p) - 1)}
                    if e in steps:
                        hits += 1
                edge_sum[e] += hits / total
    if n > 2:
        node_bc = {v: 2.0 * s / ((n - 1) * (n - 2)) for v, s in node_sum.items()}
    else:
        node_bc = {v: 0.0 for v in g.nodes}
    edge_bc = {e: 2.0 * s / (n * (n - 1)) for e, s in edge_sum.items()}
    return node_bc, edge_bc


# ---------------------------------------------------------------------------
# Estimation oracles.
# ---------------------------------------------------------------------------


def brute_force_wls(X, y, w) -> np.ndarray:
    """Weighted least squares by explicit normal-equations inversion.

    The production estimator factorizes the weighted design; this one forms
    and inverts X'WX directly, so agreement is a meaningful cross-check.
    Intended for small instances.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    gram = X.T @ (w[:, None] * X)
    try:
        inverse = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise SynthError(f"singular weighted Gram matrix: {exc}") from None
    return inverse @ (X.T @ (w * y))


def brute_force_cluster_covariance(X, y, w, clusters) -> np.ndarray:
    """CR1 cluster sandwich with explicit python-loop score sums."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    bread = np.linalg.inv(X.T @ (w[:, None] * X))
    beta = bread @ (X.T @ (w * y))
    e = y - X @ beta
    groups: dict = {}
    for i, c in enumerate(clusters):
        groups.setdefault(c, []).append(i)
    k = X.shape[1]
    meat = np.zeros((k, k))
    for idx in groups.values():
        s = np.zeros(k)
        for i in idx:
            s += w[i] * e[i] * X[i]
        meat += np.outer(s, s)
    n = len(y)
    g = len(groups)
    scale = (g / (g - 1)) * ((n - 1) / (n - k))
    return scale * bread @ meat @ bread


def random_wls_problem(
    rng: np.random.Generator, max_rows: int = 200, max_cols: int = 8
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """A random well-posed weighted regression with cluster structure."""
    n = int(rng.integers(20, max_rows + 1))
    k = int(rng.integers(2, max_cols + 1))
    X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    beta = rng.normal(size=k)
    y = X @ beta + rng.normal(scale=0.5, size=n)
    w = rng.uniform(0.2, 5.0, size=n)
    n_clusters = int(rng.integers(3, max(4, n // 5)))
    clusters = rng.integers(0, n_clusters, size=n)
    return X, y, w, clusters


# ---------------------------------------------------------------------------
# Planted-coefficient panel generator.
# ---------------------------------------------------------------------------

DEFAULT_GAMMA: dict[str, float] = {
    "pre8": 0.02, "pre7": 0.0, "pre6": -0.01, "pre5": 0.015,
    "pre4": -0.02, "pre3": 0.01, "pre2": 0.005, "pre1": -0.015,
    "dual0": -0.04, "dual1": -0.07, "dual2": -0.09, "dual3plus": -0.05,
    "entry0": -0.177, "entry1plus": -0.19, "entry3plus": -0.2,
}

# Synthetic outcome rows carry their value in this slot of the panel layout.
DGP_OUTCOME = "ln_fare_mean"


@dataclass(frozen=True)
class PanelDgp:
    """Parameters of the synthetic event-study data generating process."""

    n_carrier_routes: int = 98
    n_quarters: int = 87
    start: Quarter = Quarter(2000, 1)
    gamma: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_GAMMA))
    carrier_route_sd: float = 0.5
    quarter_sd: float = 0.2
    noise_sd: float = 0.05
    # Passenger-count weights. The noise is i.i.d., so an extreme weight
    # spread only adds leverage without adding information; a moderate
    # spread keeps the weighted estimator well calibrated in finite samples.
    weight_range: tuple[int, int] = (500, 2000)
    seed: int = 0


@dataclass(frozen=True)
class PanelTruth:
    """Planted values behind one generated panel."""

    gamma: dict[str, float]
    carrier_route_effects: dict[str, float]
    quarter_effects: dict[Quarter, float]
    noise_sd: float
    seed: int


def gen_panel(dgp: PanelDgp) -> tuple[list[PanelObservation], PanelTruth]:
    """Generate a balanced-window synthetic panel with planted effects.

    Each synthetic carrier-route gets one threat/entry pair with the event
    window fully inside the sample; the outcome is the sum of its bin
    coefficient, both fixed effects, and i.i.d. normal noise, stored in the
    ``ln_fare_mean`` slot of the standard panel layout.
    """
    if dgp.noise_sd < 0:
        raise SynthError("noise sd must be nonnegative")
    if dgp.n_quarters < 27:
        raise SynthError(
            "cannot populate bin 'baseline': need at least 27 quarters "
            f"(got {dgp.n_quarters})"
        )
    rng = np.random.default_rng(dgp.seed)
    quarters = [dgp.start + i for i in range(dgp.n_quarters)]
    delta = rng.normal(0.0, dgp.quarter_sd, size=dgp.n_quarters)
    quarter_effects = dict(zip(quarters, map(float, delta)))
    sample_end = quarters[-1]
    lo, hi = dgp.weight_range

    rows: list[PanelObservation] = []
    cr_effects: dict[str, float] = {}
    bin_counts = dict.fromkeys(EVENT_BINS + (BASELINE_BIN,), 0)
    for j in range(dgp.n_carrier_routes):
        carrier = f"C{j:03d}"
        route = (f"A{j:03d}", f"B{j:03d}")
        cluster = cluster_label(carrier, route)
        alpha = float(rng.normal(0.0, dgp.carrier_route_sd))
        cr_effects[cluster] = alpha
        t_0 = dgp.start + int(rng.integers(12, dgp.n_quarters - 13))
        t_e = t_0 + int(rng.integers(1, 13))
        for q in event_time_set(t_0, t_e, sample_end):
            b = event_bin(q, t_0, t_e)
            bin_counts[b] += 1
            y = dgp.gamma.get(b, 0.0) if b != BASELINE_BIN else 0.0
            y += alpha + quarter_effects[q]
            if dgp.noise_sd > 0:
                y += float(rng.normal(0.0, dgp.noise_sd))
            outcomes: dict[str, float | None] = dict.fromkeys(
                (
                    "ln_fare_mean", "ln_fare_p10", "ln_fare_p25", "ln_fare_p75",
                    "ln_fare_p90", "ln_passengers", "ln_seats", "ln_load_factor",
                )
            )
            outcomes[DGP_OUTCOME] = y
            rows.append(
                PanelObservation(
                    carrier=carrier,
                    route=route,
                    quarter=q,
                    event_bin=b,
                    outcomes=outcomes,
                    controls={"distance_100mi": None, "distance_100mi_sq": None,
                              "temp_diff_f": None},
                    z=dict.fromkeys(
                        ("density", "diameter", "apl", "transitivity",
                         "avg_clustering", "assortativity", "edge_betweenness",
                         "max_degree", "max_closeness", "max_betweenness",
                         "max_eigenvector", "max_neighbor_degree")
                    ),
                    weight=float(rng.integers(lo, hi + 1)),
                    cluster_id=cluster,
                )
            )
    empty = [b for b, c in bin_counts.items() if c == 0]
    if empty:
        raise SynthError(f"cannot populate bin {empty[0]!r} with these windows")
    truth = PanelTruth(
        gamma=dict(dgp.gamma),
        carrier_route_effects=cr_effects,
        quarter_effects=quarter_effects,
        noise_sd=dgp.noise_sd,
        seed=dgp.seed,
    )
    return rows, truth


# ---------------------------------------------------------------------------
# Canned presence histories for the threat-detection suites.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PresenceScenario:
    name: str
    entrant: str
    quarters: list[Quarter]
    networks: dict[Quarter, frozenset]
    expected_events: tuple[tuple[tuple[str, str], Quarter, Quarter], ...]  # route, t0, te


def presence_scenarios() -> dict[str, PresenceScenario]:
    """Named entrant histories with known detection outcomes.

    ``distinct_threat`` is the clean single -> dual -> entry timeline;
    ``simultaneous_dual_and_entry`` establishes dual presence and enters in
    the same quarter (no distinct threat); ``dual_regression`` loses dual
    presence before entering.
    """
    start, end = Quarter(2004, 1), Quarter(2012, 4)
    quarters = [Quarter.from_index(i) for i in range(start.index, end.index + 1)]

    def history(rules) -> dict[Quarter, frozenset]:
        nets = {}
        for q in quarters:
            edges = set()
            for (edge, first, last) in rules:
                if first <= q <= (last or end):
                    edges.add(edge)
            nets[q] = frozenset(edges)
        return nets

    scenarios = {}
    scenarios["distinct_threat"] = PresenceScenario(
        name="distinct_threat",
        entrant="WN",
        quarters=quarters,
        networks=history(
            [
                (("SNA", "XH1"), start, None),
                (("DEN", "XH2"), Quarter(2006, 1), None),
                (("DEN", "SNA"), Quarter(2008, 4), None),
            ]
        ),
        expected_events=((("DEN", "SNA"), Quarter(2006, 1), Quarter(2008, 4)),),
    )
    scenarios["simultaneous_dual_and_entry"] = PresenceScenario(
        name="simultaneous_dual_and_entry",
        entrant="F9",
        quarters=quarters,
        networks=history(
            [
                (("SNA", "XH1"), start, None),
                (("DEN", "XH2"), Quarter(2006, 1), None),
                (("DEN", "SNA"), Quarter(2006, 1), None),
            ]
        ),
        expected_events=(),
    )
    scenarios["dual_regression"] = PresenceScenario(
        name="dual_regression",
        entrant="WN",
        quarters=quarters,
        networks=history(
            [
                (("SNA", "XH1"), start, None),
                (("DEN", "XH2"), Quarter(2006, 1), Quarter(2007, 2)),
                (("DEN", "XH3"), Quarter(2008, 1), None),
                (("DEN", "SNA"), Quarter(2009, 1), None),
            ]
        ),
        expected_events=(),
    )
    return scenarios
