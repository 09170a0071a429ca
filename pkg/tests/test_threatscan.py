import pytest

from entryscope.ingest.records import FareDistribution, RouteCarrierQuarter
from entryscope.quarters import Quarter, quarter_range
from entryscope.synthgen import presence_scenarios
from entryscope.threatscan import (
    BASELINE_BIN,
    DUAL_BINS,
    ENTRY_BINS,
    EVENT_BINS,
    PRE_BINS,
    EntrantHistory,
    OutsideEventWindowError,
    PresenceState,
    ThreatEvent,
    build_panel,
    detect_threats,
    event_bin,
    event_time_set,
    presence_state,
    qualify_routes,
    read_panel_csv,
    read_threat_events_csv,
    write_panel_csv,
    write_threat_events_csv,
)

T0 = Quarter(2006, 1)
FARES = FareDistribution(200.0, 150.0, 170.0, 240.0, 280.0)


def rcq(carrier, route, quarter, pax=500, t100_pax=7600, seats=10000, temp=27.0):
    a, b = sorted(route)
    return RouteCarrierQuarter(
        carrier=carrier,
        route=(a, b),
        quarter=quarter,
        db1b_passengers=pax,
        fares_real=FARES,
        t100_passengers=t100_pax,
        t100_seats=seats,
        load_factor=t100_pax / seats,
        distance_miles=845.0,
        temp_differential_f=temp,
    )


def test_presence_state_classification():
    edges = [("SNA", "LAS"), ("LAS", "OAK")]
    assert presence_state(edges, ("DEN", "SNA")) is PresenceState.SINGLE_PRESENCE
    edges.append(("DEN", "LAS"))
    assert presence_state(edges, ("DEN", "SNA")) is PresenceState.DUAL_PRESENCE
    edges.append(("DEN", "SNA"))
    assert presence_state(edges, ("DEN", "SNA")) is PresenceState.ENTERED
    assert presence_state([("ABQ", "ELP")], ("DEN", "SNA")) is PresenceState.NO_PRESENCE


@pytest.mark.parametrize("name", ["distinct_threat", "simultaneous_dual_and_entry",
                                  "dual_regression"])
def test_detection_scenarios(name):
    scenario = presence_scenarios()[name]
    history = EntrantHistory(scenario.networks, scenario.quarters)
    events, rejects = detect_threats(history, scenario.entrant)
    found = tuple((ev.route, ev.t_0, ev.t_e) for ev in events)
    assert found == scenario.expected_events
    if not scenario.expected_events:
        assert sum(rejects.values()) > 0


def test_detection_orders_event_times():
    scenario = presence_scenarios()["distinct_threat"]
    history = EntrantHistory(scenario.networks, scenario.quarters)
    events, _ = detect_threats(history, scenario.entrant)
    (ev,) = events
    assert ev.t_s < ev.t_0 < ev.t_e
    # replaying the presence machine reproduces the monotone phases
    for q in scenario.quarters:
        state = history.presence(ev.route, q)
        if q < ev.t_s:
            assert state in (PresenceState.NO_PRESENCE, PresenceState.SINGLE_PRESENCE)
        elif q < ev.t_0:
            assert state is PresenceState.SINGLE_PRESENCE
        elif q < ev.t_e:
            assert state is PresenceState.DUAL_PRESENCE
        else:
            assert state is PresenceState.ENTERED


def test_detection_rejects_exit_after_entry():
    quarters = quarter_range(Quarter(2004, 1), Quarter(2010, 4))
    networks = {}
    for q in quarters:
        edges = {("SNA", "XH1")}
        if q >= Quarter(2005, 1):
            edges.add(("DEN", "XH2"))
        if Quarter(2006, 1) <= q <= Quarter(2008, 4):
            edges.add(("DEN", "SNA"))  # exits before the sample ends
        networks[q] = frozenset(edges)
    events, rejects = detect_threats(EntrantHistory(networks, quarters), "WN")
    assert events == []
    assert rejects["exited_after_entry"] == 1


def test_event_bin_examples():
    t_e = T0 + 10
    assert event_bin(T0 - 12, T0, t_e) == BASELINE_BIN
    assert event_bin(T0 - 9, T0, t_e) == BASELINE_BIN
    assert event_bin(T0 - 8, T0, t_e) == "pre8"
    assert event_bin(T0 - 1, T0, t_e) == "pre1"
    assert event_bin(T0, T0, t_e) == "dual0"
    assert event_bin(T0 + 2, T0, t_e) == "dual2"
    assert event_bin(T0 + 5, T0, t_e) == "dual3plus"
    assert event_bin(t_e, T0, t_e) == "entry0"
    assert event_bin(t_e + 2, T0, t_e) == "entry1plus"
    assert event_bin(t_e + 3, T0, t_e) == "entry3plus"
    assert event_bin(t_e + 12, T0, t_e) == "entry3plus"


def test_event_bin_entry_takes_precedence():
    # entry one quarter after the threat: dual bins beyond dual0 never occur
    t_e = T0 + 1
    assert event_bin(T0, T0, t_e) == "dual0"
    assert event_bin(t_e, T0, t_e) == "entry0"
    assert event_bin(T0 + 2, T0, t_e) == "entry1plus"


def test_event_bin_outside_window_raises():
    t_e = T0 + 20
    with pytest.raises(OutsideEventWindowError):
        event_bin(T0 - 13, T0, t_e)
    with pytest.raises(OutsideEventWindowError):
        event_bin(T0 + 13, T0, t_e)  # gap between threat and entry blocks
    with pytest.raises(OutsideEventWindowError):
        event_bin(t_e + 13, T0, t_e)


def test_event_time_set_desk_fixture():
    # te = t0 + 4 with a long sample: 17 threat-side quarters + 12 more
    # post-entry = 29, of which 4 baseline, 8 pre, 4 dual, 13 entry
    t_e = T0 + 4
    tset = event_time_set(T0, t_e, T0 + 100)
    assert len(tset) == 29
    bins = [event_bin(q, T0, t_e) for q in tset]
    assert bins.count(BASELINE_BIN) == 4
    assert sum(bins.count(b) for b in PRE_BINS) == 8
    assert sum(bins.count(b) for b in DUAL_BINS) == 4
    assert sum(bins.count(b) for b in ENTRY_BINS) == 13


def test_event_time_set_disjoint_blocks():
    t_e = T0 + 20
    tset = event_time_set(T0, t_e, T0 + 100)
    assert T0 + 12 in tset
    assert T0 + 13 not in tset  # gap: more than 12 quarters after the threat
    assert t_e in tset
    assert tset == sorted(tset)


def test_event_time_set_clips_at_sample_end():
    t_e = T0 + 4
    tset = event_time_set(T0, t_e, t_e + 3)
    assert tset[-1] == t_e + 3


def _service_records(route, carriers_by_quarter):
    records = []
    for q, carriers in carriers_by_quarter.items():
        for c in carriers:
            records.append(rcq(c, route, q))
    return records


def test_qualify_requires_full_window_coverage():
    route = ("DEN", "SNA")
    ev = ThreatEvent("WN", route, T0 - 20, T0, T0 + 4)
    window = quarter_range(T0 - 12, T0 + 12)
    full = _service_records(route, {q: ["UA"] for q in window})
    qualified, rejects = qualify_routes([ev], full, sample_end=T0 + 16)
    assert len(qualified) == 1
    assert qualified[0].incumbents == ("UA",)

    gap = _service_records(route, {q: ["UA"] for q in window if q != T0 + 7})
    qualified, rejects = qualify_routes([ev], gap, sample_end=T0 + 16)
    assert qualified == []
    assert rejects["incumbent_coverage_gap"] == 1


def test_qualify_union_coverage_across_incumbents():
    # two incumbents, each with gaps, jointly covering every quarter
    route = ("DEN", "SNA")
    ev = ThreatEvent("WN", route, T0 - 20, T0, T0 + 4)
    window = quarter_range(T0 - 12, T0 + 12)
    by_quarter = {}
    for i, q in enumerate(window):
        by_quarter[q] = ["UA"] if i % 2 == 0 else ["DL"]
    records = _service_records(route, by_quarter)
    qualified, _ = qualify_routes([ev], records, sample_end=T0 + 16)
    assert len(qualified) == 1
    assert qualified[0].incumbents == ("DL", "UA")


def test_qualify_ignores_entrant_service():
    route = ("DEN", "SNA")
    ev = ThreatEvent("WN", route, T0 - 20, T0, T0 + 4)
    window = quarter_range(T0 - 12, T0 + 12)
    records = _service_records(route, {q: ["WN"] for q in window})
    qualified, rejects = qualify_routes([ev], records, sample_end=T0 + 16)
    assert qualified == []


def test_build_panel_truncates_after_entry_gap():
    route = ("DEN", "SNA")
    t_e = T0 + 4
    ev = ThreatEvent("WN", route, T0 - 20, T0, t_e, incumbents=("UA",))
    quarters = [q for q in event_time_set(T0, t_e, t_e + 12) if q != t_e + 4]
    records = [rcq("UA", route, q) for q in quarters]
    panel, _ = build_panel([ev], records, global_z={}, local_z={}, sample_end=t_e + 12)
    post = [row.quarter for row in panel if row.quarter >= t_e]
    assert max(post) == t_e + 3  # absent at te+4: later service is discarded
    assert t_e + 5 not in post


def test_build_panel_allows_pre_entry_gaps():
    route = ("DEN", "SNA")
    t_e = T0 + 4
    ev = ThreatEvent("WN", route, T0 - 20, T0, t_e, incumbents=("UA",))
    quarters = [q for q in event_time_set(T0, t_e, t_e + 12) if q != T0 - 5]
    records = [rcq("UA", route, q) for q in quarters]
    panel, _ = build_panel([ev], records, global_z={}, local_z={}, sample_end=t_e + 12)
    pre = [row.quarter for row in panel if row.quarter < t_e]
    assert T0 - 5 not in pre
    assert T0 - 4 in pre  # the gap does not truncate the pre-entry side


def test_build_panel_rows_and_weights():
    route = ("DEN", "SNA")
    t_e = T0 + 4
    ev = ThreatEvent("WN", route, T0 - 20, T0, t_e, incumbents=("UA",))
    records = [rcq("UA", route, q, pax=1234) for q in event_time_set(T0, t_e, t_e + 12)]
    panel, _ = build_panel([ev], records, global_z={}, local_z={}, sample_end=t_e + 12)
    assert len(panel) == 29
    assert all(row.weight == 1234.0 for row in panel)
    assert all(row.cluster_id == "UA:DEN-SNA" for row in panel)
    # bins partition the carrier-route quarters
    seen = {}
    for row in panel:
        assert row.quarter not in seen
        seen[row.quarter] = row.event_bin
        assert row.event_bin == event_bin(row.quarter, T0, t_e)
        assert T0 - 12 <= row.quarter <= t_e + 12
    assert set(seen.values()) == {BASELINE_BIN, *EVENT_BINS}


def test_build_panel_drops_nonpositive_outcomes():
    route = ("DEN", "SNA")
    t_e = T0 + 4
    ev = ThreatEvent("WN", route, T0 - 20, T0, t_e, incumbents=("UA",))
    records = [rcq("UA", route, q) for q in event_time_set(T0, t_e, t_e + 12)]
    bad = records[0]
    records[0] = RouteCarrierQuarter(
        carrier=bad.carrier, route=bad.route, quarter=bad.quarter,
        db1b_passengers=bad.db1b_passengers,
        fares_real=FareDistribution(0.0, 0.0, 0.0, 0.0, 0.0),
        t100_passengers=bad.t100_passengers, t100_seats=bad.t100_seats,
        load_factor=bad.load_factor, distance_miles=bad.distance_miles,
        temp_differential_f=bad.temp_differential_f,
    )
    panel, warnings = build_panel([ev], records, global_z={}, local_z={},
                                  sample_end=t_e + 12)
    assert warnings["nonpositive_outcome"] == 1
    assert len(panel) == 28


def test_threat_events_csv_round_trip(tmp_path):
    events = [
        ThreatEvent("WN", ("DEN", "SNA"), Quarter(2004, 2), T0, Quarter(2008, 4),
                    incumbents=("F9", "UA")),
        ThreatEvent("WN", ("ATL", "MCI"), Quarter(2005, 1), Quarter(2012, 2),
                    Quarter(2013, 1), incumbents=("DL",)),
    ]
    path = tmp_path / "events.csv"
    write_threat_events_csv(events, path)
    header = path.read_text().splitlines()[0]
    assert header == "ENTRANT,ORIGIN,DEST,TS,T0,TE,N_INCUMBENTS"
    loaded = read_threat_events_csv(path)
    assert [(e.route, e.t_0, e.t_e) for e in loaded] == [
        (e.route, e.t_0, e.t_e) for e in events
    ]


def test_panel_csv_round_trip(tmp_path):
    route = ("DEN", "SNA")
    t_e = T0 + 4
    ev = ThreatEvent("WN", route, T0 - 20, T0, t_e, incumbents=("UA",))
    records = [rcq("UA", route, q) for q in event_time_set(T0, t_e, t_e + 12)]
    panel, _ = build_panel([ev], records, global_z={}, local_z={}, sample_end=t_e + 12)
    path = tmp_path / "panel.csv"
    write_panel_csv(panel, path)
    loaded = read_panel_csv(path)
    assert loaded == panel
