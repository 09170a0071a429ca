"""Command-line orchestration of the pipeline stages.

Subcommands: ingest, networks, threats, panel, fit, report, selftest.
Options may come from a flat key=value config file (``--config``); explicit
flags always win. Exit status: 0 on success, 1 on a stage failure, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import netgraph, panelfit, report, selftest, threatscan
from .ingest import (
    IngestError,
    build_route_quarters,
    read_airport_states,
    read_cpi_csv,
    read_route_quarters_csv,
    read_state_temps,
    write_drop_report_csv,
    write_route_quarters_csv,
)
from .quarters import Quarter

log = logging.getLogger(__name__)

OUTCOME_ALIASES = {
    "mean_fare": "ln_fare_mean",
    "p10": "ln_fare_p10",
    "p25": "ln_fare_p25",
    "p75": "ln_fare_p75",
    "p90": "ln_fare_p90",
    "passengers": "ln_passengers",
    "seats": "ln_seats",
    "load": "ln_load_factor",
}


class CliError(ValueError):
    pass


def load_config(path) -> dict[str, str]:
    """Flat key=value file; blank lines and #-comments ignored."""
    config: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            config[key.strip()] = value.strip()
    return config


def _opt(args, config, name, required=True, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        value = config.get(name, default)
    if value is None and required:
        raise CliError(f"missing required option --{name} (flag or config file)")
    return value


def _ensure_out(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def cmd_ingest(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    base_quarter = Quarter.parse(_opt(args, config, "base-quarter"))
    cpi = read_cpi_csv(_opt(args, config, "cpi"), base_quarter=base_quarter)
    temps = read_state_temps(_opt(args, config, "temps"))
    airports = read_airport_states(_opt(args, config, "airport-state"))
    records, drop_report = build_route_quarters(
        _opt(args, config, "coupon"),
        _opt(args, config, "ticket"),
        _opt(args, config, "t100"),
        cpi,
        airports,
        temps,
    )
    rcq_path = os.path.join(out, "route_carrier_quarters.csv")
    write_route_quarters_csv(records, rcq_path)
    write_drop_report_csv(drop_report, os.path.join(out, "drop_report.csv"))
    print(f"wrote {len(records)} route-carrier-quarters to {rcq_path}")
    return 0


def _write_measures(graphs, out) -> None:
    """graphs: iterable of (carrier, quarter_text, Graph)."""
    global_path = os.path.join(out, "global_measures.csv")
    node_path = os.path.join(out, "node_measures.csv")
    edge_path = os.path.join(out, "edge_measures.csv")
    with open(global_path, "w", newline="", encoding="utf-8") as gfh, open(
        node_path, "w", newline="", encoding="utf-8"
    ) as nfh, open(edge_path, "w", newline="", encoding="utf-8") as efh:
        gw = csv.writer(gfh)
        nw = csv.writer(nfh)
        ew = csv.writer(efh)
        gw.writerow(
            ["CARRIER", "QUARTER", "DENSITY", "DIAMETER", "APL", "TRANSITIVITY",
             "AVG_CLUSTERING", "ASSORTATIVITY"]
        )
        nw.writerow(
            ["CARRIER", "QUARTER", "NODE", "DEGREE", "CLOSENESS", "BETWEENNESS",
             "EIGENVECTOR", "NEIGHBOR_DEGREE"]
        )
        ew.writerow(
            ["CARRIER", "QUARTER", "NODE_A", "NODE_B", "EDGE_BETWEENNESS", "MAX_DEGREE",
             "MAX_CLOSENESS", "MAX_BETWEENNESS", "MAX_EIGENVECTOR", "MAX_NEIGHBOR_DEGREE"]
        )
        for carrier, quarter, graph in graphs:
            gm = netgraph.global_measures(graph)
            nm = netgraph.node_measures(graph)
            em = netgraph.edge_measures(graph)
            gw.writerow(
                [carrier, quarter, repr(gm.density), gm.diameter, repr(gm.apl),
                 repr(gm.transitivity), repr(gm.avg_clustering),
                 "" if gm.assortativity is None else repr(gm.assortativity)]
            )
            for v in graph.nodes:
                nw.writerow(
                    [carrier, quarter, v, repr(nm.degree[v]), repr(nm.closeness[v]),
                     repr(nm.betweenness[v]), repr(nm.eigenvector[v]),
                     repr(nm.neighbor_degree[v])]
                )
            for e in graph.edges:
                profile = em.local_profile(e)
                ew.writerow(
                    [carrier, quarter, e[0], e[1]]
                    + [repr(profile[name]) for name in netgraph.LOCAL_MEASURE_NAMES]
                )


def cmd_networks(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    rcq_path = _opt(args, config, "rcq", required=False)
    edges_path = _opt(args, config, "edges", required=False)
    only_carrier = _opt(args, config, "carrier", required=False)
    if (rcq_path is None) == (edges_path is None):
        raise CliError("networks needs exactly one of --rcq or --edges")
    graphs = []
    if edges_path is not None:
        graphs.append(("", "", netgraph.build_graph(netgraph.read_edge_list(edges_path))))
    else:
        records = read_route_quarters_csv(rcq_path)
        nets = threatscan.carrier_networks(records)
        for (carrier, quarter), edge_set in sorted(nets.items()):
            if only_carrier is not None and carrier != only_carrier:
                continue
            try:
                graph = netgraph.build_graph(edge_set, on_disconnected="largest")
            except netgraph.GraphError as exc:
                log.warning("skipping %s %s: %s", carrier, quarter, exc)
                continue
            graphs.append((carrier, str(quarter), graph))
    _write_measures(graphs, out)
    print(f"wrote measures for {len(graphs)} networks to {out}")
    return 0


def cmd_threats(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    entrant = _opt(args, config, "entrant")
    records = read_route_quarters_csv(_opt(args, config, "rcq"))
    history = threatscan.EntrantHistory.from_records(records, entrant)
    raw_events, rejects = threatscan.detect_threats(history, entrant)
    events, qualify_rejects = threatscan.qualify_routes(raw_events, records)
    rejects.update(qualify_rejects)
    events_path = os.path.join(out, "threat_events.csv")
    threatscan.write_threat_events_csv(events, events_path)
    with open(os.path.join(out, "threat_rejects.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["REASON", "COUNT"])
        for reason in sorted(rejects):
            writer.writerow([reason, rejects[reason]])
    print(f"found {len(events)} qualified threatened routes; wrote {events_path}")
    return 0


def cmd_panel(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    records = read_route_quarters_csv(_opt(args, config, "rcq"))
    raw_events = threatscan.read_threat_events_csv(_opt(args, config, "events"))
    # The events file carries only the incumbent count; re-derive the
    # incumbent sets from the route data.
    events, _ = threatscan.qualify_routes(raw_events, records)
    panel, _warnings = threatscan.build_panel(events, records)
    panel_path = os.path.join(out, "panel.csv")
    threatscan.write_panel_csv(panel, panel_path)
    print(f"wrote {len(panel)} panel rows to {panel_path}")
    return 0


def cmd_fit(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    outcome = _opt(args, config, "outcome")
    outcome = OUTCOME_ALIASES.get(outcome, outcome)
    controls_text = _opt(args, config, "controls", required=False, default="")
    controls = tuple(c.strip() for c in controls_text.split(",") if c.strip())
    spec = panelfit.RegressionSpec(
        outcome=outcome,
        z_measure=_opt(args, config, "z", required=False),
        controls=controls,
        covariance=_opt(args, config, "se", required=False, default="cluster"),
    )
    panel = threatscan.read_panel_csv(_opt(args, config, "panel"))
    result = panelfit.fit_event_study(panel, spec, solver=_opt(args, config, "solver", required=False, default="auto"))
    fit_path = os.path.join(out, "fit.csv")
    report.write_fit_csv(result, fit_path)
    report.write_table_txt(result, os.path.join(out, "table.txt"))
    print(report.render_table(result))
    print(f"wrote {fit_path}")
    return 0


def cmd_report(args, config) -> int:
    out = _ensure_out(_opt(args, config, "out"))
    kind = _opt(args, config, "kind")
    if kind == "event_curve":
        terms, _meta = report.read_fit_csv(_opt(args, config, "fit"))
        path = os.path.join(out, "event_curve.csv")
        report.write_event_curve_csv(terms, path)
        print(f"wrote {path}")
    elif kind == "histograms":
        events = threatscan.read_threat_events_csv(_opt(args, config, "events"))
        t0_path = os.path.join(out, "threat_time_histogram.csv")
        gap_path = os.path.join(out, "threat_gap_histogram.csv")
        report.write_threat_time_histogram_csv(events, t0_path)
        report.write_threat_gap_histogram_csv(events, gap_path)
        print(f"wrote {t0_path} and {gap_path}")
    else:
        raise CliError(f"unknown report kind {kind!r}; use event_curve or histograms")
    return 0


def cmd_selftest(args, config) -> int:
    fixtures = _opt(args, config, "fixtures", required=False)
    ok = selftest.run_all(fixtures_dir=fixtures)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entryscope",
        description="Route networks, entry threats, and event-study estimation.",
    )
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build route-carrier-quarters from raw CSVs")
    for flag in ("coupon", "ticket", "t100", "cpi", "temps", "airport-state",
                 "base-quarter", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("networks", help="carrier-quarter network measures")
    for flag in ("rcq", "edges", "carrier", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_networks)

    p = sub.add_parser("threats", help="detect and qualify threatened routes")
    for flag in ("rcq", "entrant", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_threats)

    p = sub.add_parser("panel", help="assemble the estimation panel")
    for flag in ("rcq", "events", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_panel)

    p = sub.add_parser("fit", help="estimate an event-study specification")
    for flag in ("panel", "outcome", "se", "z", "controls", "solver", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="tables and figure-data files")
    for flag in ("kind", "fit", "events", "out"):
        p.add_argument(f"--{flag}")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the built-in verification suites")
    p.add_argument("--fixtures", help=f"fixtures directory (or ${selftest.FIXTURES_ENV_VAR})")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {}
    if args.config:
        try:
            config = load_config(args.config)
        except (OSError, CliError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    try:
        return args.func(args, config)
    except (CliError, IngestError, netgraph.GraphError, threatscan.ThreatScanError,
            panelfit.EstimationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
