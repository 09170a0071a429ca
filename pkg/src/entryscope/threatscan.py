"""Entrant presence classification, threatened-route detection, and assembly
of the event-time estimation panel.

A route-quarter is classified by where the potential entrant operates:
nowhere (no presence), one endpoint (single presence), both endpoints without
serving the route (dual presence, the start of the threat), or on the route
itself (entered). A threatened route must pass cleanly through
single -> dual -> entered with no regression, and at least one incumbent must
serve it throughout the event window.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from . import netgraph
from .ingest.records import RouteCarrierQuarter, route_key
from .quarters import Quarter, quarter_range

log = logging.getLogger(__name__)

# Event-time bins of the estimation panel. The excluded reference period is
# 9 to 12 quarters before the threat; pre bins are single quarters, the tail
# bins pool 3+ quarters.
BASELINE_BIN = "baseline"
PRE_BINS = ("pre8", "pre7", "pre6", "pre5", "pre4", "pre3", "pre2", "pre1")
DUAL_BINS = ("dual0", "dual1", "dual2", "dual3plus")
ENTRY_BINS = ("entry0", "entry1plus", "entry3plus")
EVENT_BINS = PRE_BINS + DUAL_BINS + ENTRY_BINS
# Bins that interact with a network measure in the interaction specification.
INTERACTION_BINS = DUAL_BINS + ENTRY_BINS

WINDOW_PRE = 12   # quarters before the threat covered by the panel
WINDOW_POST = 12  # quarters after the threat/entry covered by the panel
BASELINE_START = 12  # baseline runs from t0-12 ...
BASELINE_END = 9     # ... through t0-9

OUTCOME_NAMES = (
    "ln_fare_mean",
    "ln_fare_p10",
    "ln_fare_p25",
    "ln_fare_p75",
    "ln_fare_p90",
    "ln_passengers",
    "ln_seats",
    "ln_load_factor",
)
CONTROL_NAMES = ("distance_100mi", "distance_100mi_sq", "temp_diff_f")
GLOBAL_Z_NAMES = netgraph.GLOBAL_MEASURE_NAMES
LOCAL_Z_NAMES = netgraph.LOCAL_MEASURE_NAMES
Z_NAMES = GLOBAL_Z_NAMES + LOCAL_Z_NAMES

THREAT_EVENT_COLUMNS = ("ENTRANT", "ORIGIN", "DEST", "TS", "T0", "TE", "N_INCUMBENTS")

PANEL_COLUMNS = (
    ("CARRIER", "ORIGIN", "DEST", "QUARTER", "EVENT_BIN")
    + tuple(n.upper() for n in OUTCOME_NAMES)
    + tuple(n.upper() for n in CONTROL_NAMES)
    + tuple(f"Z_{n.upper()}" for n in Z_NAMES)
    + ("WEIGHT", "CLUSTER_ID")
)


class ThreatScanError(ValueError):
    pass


class OutsideEventWindowError(ThreatScanError):
    """Quarter falls outside the event-study time set."""


class PresenceState(str, enum.Enum):
    NO_PRESENCE = "no_presence"
    SINGLE_PRESENCE = "single_presence"
    DUAL_PRESENCE = "dual_presence"
    ENTERED = "entered"


@dataclass(frozen=True)
class ThreatEvent:
    """A qualified threatened route with its event times.

    t_s starts single presence, t_0 starts dual presence (the threat), t_e is
    entry; detection guarantees t_s < t_0 < t_e. t_s plays no role in the
    estimation and is kept for reporting.
    """

    entrant: str
    route: tuple[str, str]
    t_s: Quarter
    t_0: Quarter
    t_e: Quarter
    incumbents: tuple[str, ...] = ()


@dataclass(frozen=True)
class PanelObservation:
    """One incumbent carrier-route-quarter row of the estimation panel."""

    carrier: str
    route: tuple[str, str]
    quarter: Quarter
    event_bin: str
    outcomes: Mapping[str, float | None]
    controls: Mapping[str, float | None]
    z: Mapping[str, float | None]
    weight: float
    cluster_id: str


def cluster_label(carrier: str, route: tuple[str, str]) -> str:
    return f"{carrier}:{route[0]}-{route[1]}"


def carrier_networks(
    records: Iterable[RouteCarrierQuarter],
) -> dict[tuple[str, Quarter], frozenset]:
    """Edge sets of every carrier-quarter network in the data."""
    edges: dict[tuple[str, Quarter], set] = defaultdict(set)
    for r in records:
        edges[(r.carrier, r.quarter)].add(route_key(*r.route))
    return {key: frozenset(val) for key, val in edges.items()}


def presence_state(edges: Iterable[tuple[str, str]], route: tuple[str, str]) -> PresenceState:
    """Classify an entrant's standing on a route given its served edges."""
    edge_set = {route_key(*e) for e in edges}
    target = route_key(*route)
    if target in edge_set:
        return PresenceState.ENTERED
    airports = {a for e in edge_set for a in e}
    at_endpoints = sum(1 for a in target if a in airports)
    if at_endpoints == 2:
        return PresenceState.DUAL_PRESENCE
    if at_endpoints == 1:
        return PresenceState.SINGLE_PRESENCE
    return PresenceState.NO_PRESENCE


class EntrantHistory:
    """Quarter-by-quarter view of one carrier's network over the sample.

    The airport set of a quarter is the set of endpoints of the carrier's
    post-filter edges; quarters with no surviving edges have no presence
    anywhere.
    """

    def __init__(
        self,
        networks: Mapping[Quarter, Iterable[tuple[str, str]]],
        quarters: Sequence[Quarter],
    ):
        self.quarters = list(quarters)
        self._edges: dict[Quarter, frozenset] = {}
        self._airports: dict[Quarter, frozenset] = {}
        for q in self.quarters:
            edges = frozenset(route_key(*e) for e in networks.get(q, ()))
            self._edges[q] = edges
            self._airports[q] = frozenset(a for e in edges for a in e)

    @classmethod
    def from_records(
        cls, records: Iterable[RouteCarrierQuarter], entrant: str
    ) -> "EntrantHistory":
        records = list(records)
        if not records:
            raise ThreatScanError("no route data supplied")
        quarters = quarter_range(
            min(r.quarter for r in records), max(r.quarter for r in records)
        )
        nets = carrier_networks(r for r in records if r.carrier == entrant)
        by_quarter = {q: edges for (_, q), edges in nets.items()}
        return cls(by_quarter, quarters)

    def edges(self, quarter: Quarter) -> frozenset:
        return self._edges[quarter]

    def entered_routes(self) -> set:
        routes: set = set()
        for edges in self._edges.values():
            routes |= edges
        return routes

    def presence(self, route: tuple[str, str], quarter: Quarter) -> PresenceState:
        target = route_key(*route)
        if target in self._edges[quarter]:
            return PresenceState.ENTERED
        airports = self._airports[quarter]
        hits = sum(1 for a in target if a in airports)
        if hits == 2:
            return PresenceState.DUAL_PRESENCE
        if hits == 1:
            return PresenceState.SINGLE_PRESENCE
        return PresenceState.NO_PRESENCE


def detect_threats(
    history: EntrantHistory, entrant: str
) -> tuple[list[ThreatEvent], dict[str, int]]:
    """Find routes whose presence history is a clean threat-then-entry.

    Only the first dual-presence episode of a route can qualify: the quarter
    before first entry must be dual presence, that dual run must be the first
    dual presence on the route, a single-presence run must immediately
    precede it, and the route must stay entered through the end of the
    sample. Rejected routes are counted by the first reason found.
    """
    quarters = history.quarters
    rejects = {
        "entry_without_prior_dual": 0,
        "dual_regressed_before_entry": 0,
        "no_single_before_dual": 0,
        "exited_after_entry": 0,
    }
    events: list[ThreatEvent] = []
    for route in sorted(history.entered_routes()):
        states = [history.presence(route, q) for q in quarters]
        te_idx = states.index(PresenceState.ENTERED)
        if te_idx == 0 or states[te_idx - 1] is not PresenceState.DUAL_PRESENCE:
            rejects["entry_without_prior_dual"] += 1
            continue
        t0_idx = te_idx - 1
        while t0_idx > 0 and states[t0_idx - 1] is PresenceState.DUAL_PRESENCE:
            t0_idx -= 1
        first_dual = states.index(PresenceState.DUAL_PRESENCE)
        if first_dual != t0_idx:
            rejects["dual_regressed_before_entry"] += 1
            continue
        if t0_idx == 0 or states[t0_idx - 1] is not PresenceState.SINGLE_PRESENCE:
            rejects["no_single_before_dual"] += 1
            continue
        ts_idx = t0_idx - 1
        while ts_idx > 0 and states[ts_idx - 1] is PresenceState.SINGLE_PRESENCE:
            ts_idx -= 1
        if any(s is not PresenceState.ENTERED for s in states[te_idx:]):
            rejects["exited_after_entry"] += 1
            continue
        events.append(
            ThreatEvent(
                entrant=entrant,
                route=route,
                t_s=quarters[ts_idx],
                t_0=quarters[t0_idx],
                t_e=quarters[te_idx],
            )
        )
    return events, rejects


def route_service_index(
    records: Iterable[RouteCarrierQuarter],
) -> dict[tuple[tuple[str, str], Quarter], frozenset]:
    """Carriers serving each route-quarter."""
    carriers: dict[tuple[tuple[str, str], Quarter], set] = defaultdict(set)
    for r in records:
        carriers[(route_key(*r.route), r.quarter)].add(r.carrier)
    return {k: frozenset(v) for k, v in carriers.items()}


def event_time_set(t_0: Quarter, t_e: Quarter, sample_end: Quarter) -> list[Quarter]:
    """Quarters a carrier-route contributes to the panel.

    The pre/dual block runs from t0-12 to min(te, t0+12); the entry block
    from te to min(te+12, sample end). The two blocks can be disjoint when
    entry comes more than twelve quarters after the threat.
    """
    first = t_0 - WINDOW_PRE
    pre_last = min(t_e, t_0 + WINDOW_POST)
    quarters = quarter_range(first, pre_last)
    post_last = min(t_e + WINDOW_POST, sample_end)
    if post_last >= t_e:
        quarters += [q for q in quarter_range(t_e, post_last) if q > pre_last]
    return quarters


def event_bin(t: Quarter, t_0: Quarter, t_e: Quarter) -> str:
    """Map a quarter to its event-time bin.

    Entry bins take precedence at and after t_e; dual bins stop at t_e - 1;
    the baseline is t0-12 through t0-9. Quarters outside the time set raise.
    """
    if t >= t_e:
        k = t - t_e
        if k == 0:
            return "entry0"
        if k <= 2:
            return "entry1plus"
        if k <= WINDOW_POST:
            return "entry3plus"
        raise OutsideEventWindowError(f"{t} is more than {WINDOW_POST} quarters after entry")
    k = t - t_0
    if k < -BASELINE_START:
        raise OutsideEventWindowError(f"{t} precedes the event window of t0={t_0}")
    if k <= -BASELINE_END:
        return BASELINE_BIN
    if k < 0:
        return f"pre{-k}"
    if k <= 2:
        return f"dual{k}"
    if k <= WINDOW_POST:
        return "dual3plus"
    raise OutsideEventWindowError(
        f"{t} is more than {WINDOW_POST} quarters after the threat and before entry"
    )


def qualify_routes(
    events: Iterable[ThreatEvent],
    records: Iterable[RouteCarrierQuarter],
    sample_end: Quarter | None = None,
) -> tuple[list[ThreatEvent], dict[str, int]]:
    """Keep events whose route has incumbent service across the window.

    Coverage is route-level: some non-entrant carrier must serve the route
    in every quarter of [t0-12, t0+12] and at te; different incumbents may
    cover different quarters. Qualified incumbents are all non-entrant
    carriers serving the route anywhere in the event time set.
    """
    records = list(records)
    if sample_end is None:
        sample_end = max(r.quarter for r in records)
    service = route_service_index(records)
    rejects = {"incumbent_coverage_gap": 0}
    qualified: list[ThreatEvent] = []
    for ev in events:
        window = quarter_range(ev.t_0 - WINDOW_PRE, ev.t_0 + WINDOW_POST)
        window.append(ev.t_e)
        covered = all(
            service.get((ev.route, q), frozenset()) - {ev.entrant} for q in window
        )
        if not covered:
            rejects["incumbent_coverage_gap"] += 1
            continue
        incumbents: set[str] = set()
        for q in event_time_set(ev.t_0, ev.t_e, sample_end):
            incumbents |= service.get((ev.route, q), frozenset()) - {ev.entrant}
        qualified.append(replace(ev, incumbents=tuple(sorted(incumbents))))
    return qualified, rejects


def _safe_log(value: float | None) -> float | None:
    if value is None or value <= 0:
        return None
    return math.log(value)


def _outcomes_for(record: RouteCarrierQuarter) -> dict[str, float | None]:
    return {
        "ln_fare_mean": _safe_log(record.fares_real.mean),
        "ln_fare_p10": _safe_log(record.fares_real.p10),
        "ln_fare_p25": _safe_log(record.fares_real.p25),
        "ln_fare_p75": _safe_log(record.fares_real.p75),
        "ln_fare_p90": _safe_log(record.fares_real.p90),
        "ln_passengers": _safe_log(float(record.t100_passengers)),
        "ln_seats": _safe_log(float(record.t100_seats)),
        "ln_load_factor": _safe_log(record.load_factor),
    }


def network_measure_tables(
    records: Iterable[RouteCarrierQuarter],
    events: Iterable[ThreatEvent],
    sample_end: Quarter | None = None,
) -> tuple[dict, dict]:
    """Global and local measures for every incumbent carrier-quarter needed
    by the panel.

    Measures are computed on the carrier's full quarterly network; when that
    network fragments, its largest component is used and routes outside it
    carry missing local values.
    """
    records = list(records)
    if sample_end is None:
        sample_end = max(r.quarter for r in records)
    nets = carrier_networks(records)
    needed: set[tuple[str, Quarter]] = set()
    for ev in events:
        for q in event_time_set(ev.t_0, ev.t_e, sample_end):
            for inc in ev.incumbents:
                needed.add((inc, q))

    global_z: dict[tuple[str, Quarter], dict] = {}
    local_z: dict[tuple[str, tuple[str, str], Quarter], dict] = {}
    for carrier, quarter in sorted(needed):
        edges = nets.get((carrier, quarter))
        if not edges:
            continue
        try:
            graph = netgraph.build_graph(edges, on_disconnected="largest")
        except netgraph.GraphError as exc:
            log.warning("skipping measures for %s %s: %s", carrier, quarter, exc)
            continue
        gm = netgraph.global_measures(graph)
        em = netgraph.edge_measures(graph)
        global_z[(carrier, quarter)] = gm.as_dict()
        for edge in graph.edges:
            local_z[(carrier, edge, quarter)] = em.local_profile(edge)
    return global_z, local_z


def build_panel(
    events: Iterable[ThreatEvent],
    records: Iterable[RouteCarrierQuarter],
    global_z: Mapping | None = None,
    local_z: Mapping | None = None,
    sample_end: Quarter | None = None,
) -> tuple[list[PanelObservation], dict[str, int]]:
    """One panel row per qualified incumbent and served quarter in the
    event time set.

    Pre-entry quarters need no continuity (gaps simply yield missing rows);
    post-entry rows stop at the incumbent's first absence from the route,
    even if it returns later. Rows whose outcomes would need the log of a
    nonpositive value are dropped and counted.
    """
    records = list(records)
    events = list(events)
    if sample_end is None:
        sample_end = max(r.quarter for r in records)
    if global_z is None or local_z is None:
        global_z, local_z = network_measure_tables(records, events, sample_end)

    index = {(r.carrier, route_key(*r.route), r.quarter): r for r in records}
    warnings = {"nonpositive_outcome": 0}
    rows: list[PanelObservation] = []
    for ev in events:
        tset = event_time_set(ev.t_0, ev.t_e, sample_end)
        pre_quarters = [q for q in tset if q < ev.t_e]
        post_quarters = quarter_range(ev.t_e, min(ev.t_e + WINDOW_POST, sample_end))
        for inc in ev.incumbents:
            served: list[Quarter] = [
                q for q in pre_quarters if (inc, ev.route, q) in index
            ]
            for q in post_quarters:
                if (inc, ev.route, q) not in index:
                    break  # truncate at first post-entry absence
                served.append(q)
            for q in served:
                record = index[(inc, ev.route, q)]
                outcomes = _outcomes_for(record)
                if any(v is None for v in outcomes.values()):
                    warnings["nonpositive_outcome"] += 1
                    continue
                distance_100 = record.distance_miles / 100.0
                controls = {
                    "distance_100mi": distance_100,
                    "distance_100mi_sq": distance_100 * distance_100,
                    "temp_diff_f": record.temp_differential_f,
                }
                z: dict[str, float | None] = dict.fromkeys(Z_NAMES)
                z.update(global_z.get((inc, q), {}))
                z.update(local_z.get((inc, ev.route, q), {}))
                rows.append(
                    PanelObservation(
                        carrier=inc,
                        route=ev.route,
                        quarter=q,
                        event_bin=event_bin(q, ev.t_0, ev.t_e),
                        outcomes=outcomes,
                        controls=controls,
                        z=z,
                        weight=float(record.db1b_passengers),
                        cluster_id=cluster_label(inc, ev.route),
                    )
                )
    rows.sort(key=lambda r: (r.cluster_id, r.quarter))
    if warnings["nonpositive_outcome"]:
        log.warning(
            "%d panel rows dropped: log of a nonpositive outcome",
            warnings["nonpositive_outcome"],
        )
    return rows, warnings


def write_threat_events_csv(events: Iterable[ThreatEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(THREAT_EVENT_COLUMNS)
        for ev in events:
            writer.writerow(
                [
                    ev.entrant,
                    ev.route[0],
                    ev.route[1],
                    str(ev.t_s),
                    str(ev.t_0),
                    str(ev.t_e),
                    len(ev.incumbents),
                ]
            )


def read_threat_events_csv(path) -> list[ThreatEvent]:
    events: list[ThreatEvent] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != THREAT_EVENT_COLUMNS:
            raise ThreatScanError(f"{path}: expected columns {THREAT_EVENT_COLUMNS}")
        for row in reader:
            events.append(
                ThreatEvent(
                    entrant=row["ENTRANT"],
                    route=(row["ORIGIN"], row["DEST"]),
                    t_s=Quarter.parse(row["TS"]),
                    t_0=Quarter.parse(row["T0"]),
                    t_e=Quarter.parse(row["TE"]),
                )
            )
    return events


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_panel_csv(rows: Iterable[PanelObservation], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PANEL_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.carrier, r.route[0], r.route[1], str(r.quarter), r.event_bin]
                + [_fmt(r.outcomes[n]) for n in OUTCOME_NAMES]
                + [_fmt(r.controls[n]) for n in CONTROL_NAMES]
                + [_fmt(r.z[n]) for n in Z_NAMES]
                + [_fmt(r.weight), r.cluster_id]
            )


def read_panel_csv(path) -> list[PanelObservation]:
    rows: list[PanelObservation] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != PANEL_COLUMNS:
            raise ThreatScanError(f"{path}: expected columns {PANEL_COLUMNS}")

        def opt(text: str) -> float | None:
            return None if text == "" else float(text)

        for row in reader:
            rows.append(
                PanelObservation(
                    carrier=row["CARRIER"],
                    route=(row["ORIGIN"], row["DEST"]),
                    quarter=Quarter.parse(row["QUARTER"]),
                    event_bin=row["EVENT_BIN"],
                    outcomes={n: opt(row[n.upper()]) for n in OUTCOME_NAMES},
                    controls={n: opt(row[n.upper()]) for n in CONTROL_NAMES},
                    z={n: opt(row[f"Z_{n.upper()}"]) for n in Z_NAMES},
                    weight=float(row["WEIGHT"]),
                    cluster_id=row["CLUSTER_ID"],
                )
            )
    return rows
