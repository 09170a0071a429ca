"""Built-in verification suites: reference-graph values, brute-force oracle
cross-checks, ingest boundary fixtures, and a synthetic end-to-end run."""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from . import netgraph, panelfit, report, synthgen, threatscan
from .ingest import build_route_quarters, read_airport_states, read_cpi_csv, read_state_temps
from .synthgen import CheckResult

FIXTURES_ENV_VAR = "ENTRYSCOPE_FIXTURES"


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def suite_reference_graph() -> list[CheckResult]:
    """Recompute every measure of the six-node reference network and compare
    against the hand-derived tables (eigenvector to three decimals)."""
    results: list[CheckResult] = []
    g = synthgen.illustrative_graph()
    results.append(CheckResult("reference.shape", (g.n, g.m) == (6, 8), f"n={g.n} m={g.m}"))

    gm = netgraph.global_measures(g)
    expected = synthgen.ILLUSTRATIVE_GLOBAL
    for name, want in expected.items():
        got = getattr(gm, name)
        ok = got is not None and _close(float(got), float(want), 1e-9)
        results.append(CheckResult(f"reference.global.{name}", ok, f"want {float(want)}, got {got}"))

    nm = netgraph.node_measures(g)
    for name, table in synthgen.ILLUSTRATIVE_NODE.items():
        values = getattr(nm, name)
        ok = all(_close(values[v], float(want), 1e-9) for v, want in table.items())
        results.append(CheckResult(f"reference.node.{name}", ok, str(values)))
    ok = all(
        _close(nm.eigenvector[v], want, 5e-4)
        for v, want in synthgen.ILLUSTRATIVE_EIGENVECTOR.items()
    )
    results.append(CheckResult("reference.node.eigenvector", ok, str(nm.eigenvector)))

    em = netgraph.edge_measures(g)
    for name, table in synthgen.ILLUSTRATIVE_EDGE.items():
        attr = name if name == "edge_betweenness" else name.removeprefix("max_")
        values = getattr(em, attr)
        ok = all(_close(values[e], float(want), 1e-9) for e, want in table.items())
        results.append(CheckResult(f"reference.edge.{name}", ok, str(values)))
    ok = all(
        _close(em.eigenvector[e], want, 5e-4)
        for e, want in synthgen.ILLUSTRATIVE_EDGE_EIGENVECTOR.items()
    )
    results.append(CheckResult("reference.edge.max_eigenvector", ok, str(em.eigenvector)))
    return results


def suite_betweenness_oracle(n_graphs: int = 50, seed: int = 2024) -> list[CheckResult]:
    """Sweep-based betweenness against exhaustive geodesic enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_graphs):
        g = synthgen.random_connected_graph(rng)
        node_fast, edge_fast = netgraph.betweenness_centrality(g)
        node_slow, edge_slow = synthgen.brute_force_betweenness(g)
        worst = max(worst, *(abs(node_fast[v] - node_slow[v]) for v in g.nodes))
        worst = max(worst, *(abs(edge_fast[e] - edge_slow[e]) for e in g.edges))
    return [
        CheckResult(
            "betweenness.oracle",
            worst <= 1e-9,
            f"max |fast - enumerated| = {worst:.3e} over {n_graphs} graphs",
        )
    ]


def suite_estimator_oracle(n_problems: int = 20, seed: int = 99) -> list[CheckResult]:
    """QR-based weighted fits against normal-equations inversion, and the
    vectorized cluster sandwich against a plain-loop one."""
    rng = np.random.default_rng(seed)
    worst_beta = 0.0
    worst_cov = 0.0
    for _ in range(n_problems):
        X, y, w, clusters = synthgen.random_wls_problem(rng)
        beta_fast, resid, _ = panelfit.fit_wls(X, y, w)
        beta_slow = synthgen.brute_force_wls(X, y, w)
        rel = np.max(np.abs(beta_fast - beta_slow)) / max(1.0, np.max(np.abs(beta_slow)))
        worst_beta = max(worst_beta, rel)
        cov_fast = panelfit.covariance_cluster(X, w, resid, clusters)
        cov_slow = synthgen.brute_force_cluster_covariance(X, y, w, clusters)
        worst_cov = max(worst_cov, float(np.max(np.abs(cov_fast - cov_slow))))
    return [
        CheckResult("estimator.wls_oracle", worst_beta <= 1e-8, f"max rel diff {worst_beta:.3e}"),
        CheckResult("estimator.cluster_oracle", worst_cov <= 1e-10, f"max abs diff {worst_cov:.3e}"),
    ]


def suite_ingest_boundaries(fixtures_dir) -> list[CheckResult]:
    boundary_dir = os.path.join(fixtures_dir, "boundary")
    synthgen.write_boundary_fixtures(boundary_dir)
    return synthgen.check_boundary_fixtures(boundary_dir)


def suite_end_to_end(fixtures_dir) -> list[CheckResult]:
    """Synthetic files through ingest, networks, threats, panel, fit, report."""
    results: list[CheckResult] = []
    scenario_dir = os.path.join(fixtures_dir, "scenario")
    manifest = synthgen.write_scenario_fixtures(scenario_dir)

    cpi = read_cpi_csv(manifest.files["cpi"], base_quarter=manifest.base_quarter)
    temps = read_state_temps(manifest.files["temps"])
    airports = read_airport_states(manifest.files["airport_state"])
    records, _drop_report = build_route_quarters(
        manifest.files["coupon"], manifest.files["ticket"], manifest.files["t100"],
        cpi, airports, temps,
    )
    results.append(CheckResult("e2e.ingest_nonempty", len(records) > 0, f"{len(records)} records"))

    history = threatscan.EntrantHistory.from_records(records, manifest.entrant)
    raw_events, _rejects = threatscan.detect_threats(history, manifest.entrant)
    events, _ = threatscan.qualify_routes(raw_events, records)
    found = tuple((ev.route, ev.t_0, ev.t_e, ev.incumbents) for ev in events)
    expected = tuple(
        (ev.route, ev.t_0, ev.t_e, ev.incumbents) for ev in manifest.expected_events
    )
    results.append(CheckResult("e2e.threat_events", found == expected, f"found {found}"))
    if found != expected:
        return results

    panel, _warn = threatscan.build_panel(events, records)
    results.append(CheckResult("e2e.panel_rows", len(panel) == 91, f"{len(panel)} rows"))
    bins_ok = all(
        row.event_bin == threatscan.event_bin(row.quarter, ev.t_0, ev.t_e)
        for ev in events
        for row in panel
        if row.route == ev.route
    )
    results.append(CheckResult("e2e.bin_partition", bins_ok))

    spec_cluster = panelfit.RegressionSpec(outcome="ln_fare_mean", covariance="cluster")
    spec_robust = panelfit.RegressionSpec(outcome="ln_fare_mean", covariance="robust")
    fit_c = panelfit.fit_event_study(panel, spec_cluster)
    fit_r = panelfit.fit_event_study(panel, spec_robust)
    results.append(
        CheckResult("e2e.fit_r_squared", 0.0 < fit_c.r_squared <= 1.0, f"{fit_c.r_squared}")
    )
    same_estimates = all(
        math.isclose(fit_c.estimate(n), fit_r.estimate(n), rel_tol=0, abs_tol=1e-12)
        for n in fit_c.names
    )
    results.append(CheckResult("e2e.cov_choice_leaves_estimates", same_estimates))

    out_dir = os.path.join(fixtures_dir, "out")
    os.makedirs(out_dir, exist_ok=True)
    fit_path = os.path.join(out_dir, "fit.csv")
    report.write_fit_csv(fit_c, fit_path)
    terms, _meta = report.read_fit_csv(fit_path)
    round_trip = all(terms[n][0] == fit_c.estimate(n) for n in fit_c.names)
    results.append(CheckResult("e2e.fit_csv_round_trip", round_trip))
    report.write_event_curve_csv(terms, os.path.join(out_dir, "event_curve.csv"))
    report.write_threat_time_histogram_csv(events, os.path.join(out_dir, "t0_hist.csv"))
    report.write_threat_gap_histogram_csv(events, os.path.join(out_dir, "gap_hist.csv"))
    results.append(
        CheckResult(
            "e2e.report_files",
            all(
                os.path.exists(os.path.join(out_dir, f))
                for f in ("event_curve.csv", "t0_hist.csv", "gap_hist.csv")
            ),
        )
    )
    return results


def run_all(fixtures_dir=None, verbose: bool = True) -> bool:
    """Run every suite; print one line per suite and return overall success."""
    if fixtures_dir is None:
        fixtures_dir = os.environ.get(FIXTURES_ENV_VAR)
    cleanup = None
    if fixtures_dir is None:
        cleanup = tempfile.TemporaryDirectory(prefix="entryscope_fixtures_")
        fixtures_dir = cleanup.name
    suites = (
        ("reference_graph", lambda: suite_reference_graph()),
        ("betweenness_oracle", lambda: suite_betweenness_oracle()),
        ("estimator_oracle", lambda: suite_estimator_oracle()),
        ("ingest_boundaries", lambda: suite_ingest_boundaries(fixtures_dir)),
        ("end_to_end", lambda: suite_end_to_end(fixtures_dir)),
    )
    all_ok = True
    try:
        for name, runner in suites:
            checks = runner()
            failed = [c for c in checks if not c.passed]
            all_ok = all_ok and not failed
            if verbose:
                print(f"{name}: {len(checks) - len(failed)} passed, {len(failed)} failed")
                for c in failed:
                    print(f"  FAIL {c.name}: {c.detail}")
    finally:
        if cleanup is not None:
            cleanup.cleanup()
    return all_ok
