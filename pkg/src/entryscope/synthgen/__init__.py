"""Deterministic fixtures, synthetic data generators, and brute-force oracles."""

from .core import (
    DEFAULT_GAMMA,
    DGP_OUTCOME,
    ILLUSTRATIVE_EDGE,
    ILLUSTRATIVE_EDGE_EIGENVECTOR,
    ILLUSTRATIVE_EDGES,
    ILLUSTRATIVE_EIGENVECTOR,
    ILLUSTRATIVE_GLOBAL,
    ILLUSTRATIVE_NODE,
    PanelDgp,
    PanelTruth,
    PresenceScenario,
    SynthError,
    brute_force_betweenness,
    brute_force_cluster_covariance,
    brute_force_wls,
    gen_panel,
    illustrative_graph,
    presence_scenarios,
    random_connected_graph,
    random_wls_problem,
)
from .files import (
    SCENARIO_BASE_QUARTER,
    SCENARIO_END,
    SCENARIO_ENTRANT,
    SCENARIO_EXPECTED_EVENTS,
    SCENARIO_START,
    CheckResult,
    ExpectedEvent,
    ScenarioManifest,
    check_boundary_fixtures,
    write_boundary_fixtures,
    write_scenario_fixtures,
)

__all__ = [
    "DEFAULT_GAMMA",
    "DGP_OUTCOME",
    "ILLUSTRATIVE_EDGE",
    "ILLUSTRATIVE_EDGE_EIGENVECTOR",
    "ILLUSTRATIVE_EDGES",
    "ILLUSTRATIVE_EIGENVECTOR",
    "ILLUSTRATIVE_GLOBAL",
    "ILLUSTRATIVE_NODE",
    "CheckResult",
    "ExpectedEvent",
    "PanelDgp",
    "PanelTruth",
    "PresenceScenario",
    "SCENARIO_BASE_QUARTER",
    "SCENARIO_END",
    "SCENARIO_ENTRANT",
    "SCENARIO_EXPECTED_EVENTS",
    "SCENARIO_START",
    "ScenarioManifest",
    "SynthError",
    "brute_force_betweenness",
    "brute_force_cluster_covariance",
    "brute_force_wls",
    "check_boundary_fixtures",
    "gen_panel",
    "illustrative_graph",
    "presence_scenarios",
    "random_connected_graph",
    "random_wls_problem",
    "write_boundary_fixtures",
    "write_scenario_fixtures",
]
