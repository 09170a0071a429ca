"""Raw CSV fixture generation in the ingest schemas.

Two fixture families: a full synthetic scenario (one entrant, three
threatened routes, incumbents with continual service) that drives the
end-to-end pipeline, and small boundary files that sit on both sides of
every numbered ingest filter threshold.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..ingest import (
    aggregate_db1b,
    aggregate_t100,
    deflate,
    merge_itineraries,
    parse_coupon,
    parse_t100,
    parse_ticket,
    read_cpi_csv,
    route_key,
)
from ..ingest.records import (
    AIRPORT_STATE_COLUMNS,
    COUPON_COLUMNS,
    CPI_COLUMNS,
    T100_COLUMNS,
    TEMPS_COLUMNS,
    TICKET_COLUMNS,
)
from ..quarters import Quarter, quarter_range


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Full synthetic scenario.
# ---------------------------------------------------------------------------

SCENARIO_START = Quarter(2003, 1)
SCENARIO_END = Quarter(2012, 4)
SCENARIO_BASE_QUARTER = Quarter(2022, 1)
SCENARIO_ENTRANT = "WN"

_AIRPORT_STATES = {
    "DEN": "CO", "SNA": "CA", "PHX": "AZ", "ATL": "GA", "MCI": "MO",
    **{f"W{i}": "TX" for i in range(1, 6)},
    **{f"U{i}": "IL" for i in range(1, 6)},
    **{f"D{i}": "FL" for i in range(1, 6)},
}

_STATE_TEMPS = {"CO": 30.0, "CA": 57.0, "AZ": 55.0, "GA": 45.0, "MO": 28.0,
                "TX": 50.0, "IL": 25.0, "FL": 60.0}


@dataclass(frozen=True)
class ExpectedEvent:
    route: tuple[str, str]
    t_0: Quarter
    t_e: Quarter
    incumbents: tuple[str, ...]


@dataclass(frozen=True)
class ScenarioManifest:
    entrant: str
    base_quarter: Quarter
    sample_start: Quarter
    sample_end: Quarter
    expected_events: tuple[ExpectedEvent, ...]
    files: dict = field(default_factory=dict)


def _scenario_schedule() -> dict:
    """(carrier, route) -> list of active quarters."""
    always = quarter_range(SCENARIO_START, SCENARIO_END)

    def since(q: Quarter) -> list[Quarter]:
        return quarter_range(q, SCENARIO_END)

    schedule: dict = {}
    # Entrant: a stable five-city core plus one spoke into each focal market,
    # then staged expansion creating three distinct threat/entry timelines.
    for a, b in combinations([f"W{i}" for i in range(1, 6)], 2):
        schedule[("WN", route_key(a, b))] = always
    schedule[("WN", route_key("SNA", "W1"))] = always
    schedule[("WN", route_key("PHX", "W2"))] = always
    schedule[("WN", route_key("MCI", "W3"))] = always
    schedule[("WN", route_key("ATL", "W4"))] = since(Quarter(2006, 3))
    schedule[("WN", route_key("DEN", "W2"))] = since(Quarter(2007, 1))
    schedule[("WN", route_key("ATL", "MCI"))] = since(Quarter(2007, 3))
    schedule[("WN", route_key("DEN", "SNA"))] = since(Quarter(2008, 1))
    schedule[("WN", route_key("DEN", "PHX"))] = since(Quarter(2009, 1))
    # Incumbents: continual service on the focal routes plus their own cores;
    # one rotating spoke so their network measures vary over time.
    for a, b in combinations([f"U{i}" for i in range(1, 6)], 2):
        schedule[("UA", route_key(a, b))] = always
    schedule[("UA", route_key("DEN", "U1"))] = always
    schedule[("UA", route_key("DEN", "SNA"))] = always
    schedule[("UA", route_key("DEN", "PHX"))] = always
    schedule[("UA", route_key("DEN", "U3"))] = [q for q in always if q.index % 2 == 1]
    for a, b in combinations([f"D{i}" for i in range(1, 6)], 2):
        schedule[("DL", route_key(a, b))] = always
    schedule[("DL", route_key("ATL", "D1"))] = always
    schedule[("DL", route_key("ATL", "MCI"))] = always
    schedule[("DL", route_key("ATL", "D3"))] = [q for q in always if q.index % 2 == 1]
    return schedule


SCENARIO_EXPECTED_EVENTS = (
    ExpectedEvent(("ATL", "MCI"), Quarter(2006, 3), Quarter(2007, 3), ("DL",)),
    ExpectedEvent(("DEN", "PHX"), Quarter(2007, 1), Quarter(2009, 1), ("UA",)),
    ExpectedEvent(("DEN", "SNA"), Quarter(2007, 1), Quarter(2008, 1), ("UA",)),
)

_THREATENED = {ev.route: ev for ev in SCENARIO_EXPECTED_EVENTS}


def _route_distance(route: tuple[str, str]) -> float:
    fixed = {("DEN", "SNA"): 845.0, ("DEN", "PHX"): 600.0, ("ATL", "MCI"): 690.0}
    if route in fixed:
        return fixed[route]
    # deterministic spread over 400..1150 miles
    h = sum(ord(c) * (i + 1) for i, c in enumerate(route[0] + route[1]))
    return 400.0 + 25.0 * (h % 31)


def _fare_level(carrier: str, route: tuple[str, str], quarter: Quarter) -> float:
    base = 160.0 + (_route_distance(route) % 120.0)
    ev = _THREATENED.get(route)
    if ev is not None and carrier != SCENARIO_ENTRANT:
        if quarter >= ev.t_e:
            base *= 0.84
        elif quarter >= ev.t_0:
            base *= 0.94
    return base


def write_scenario_fixtures(directory, seed: int = 7) -> ScenarioManifest:
    """Write coupon/ticket/t100/cpi/temps/airport-state files for the
    synthetic scenario and return what the pipeline is expected to find."""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    schedule = _scenario_schedule()

    coupon_rows: list[list] = []
    ticket_rows: list[list] = []
    t100_rows: list[list] = []
    for carrier, route in sorted(schedule):
        a, b = route
        distance = _route_distance(route)
        for q in schedule[(carrier, route)]:
            level = _fare_level(carrier, route, q)
            for i, factor in enumerate((0.8, 1.0, 1.3)):
                fare = round(level * factor * float(rng.uniform(0.97, 1.03)), 2)
                itin = f"{carrier}-{a}{b}-{q.year}{q.q}-{i}"
                coupon_rows.append(
                    [itin, 1, a, b, carrier, carrier, "COACH", 40, distance,
                     _AIRPORT_STATES[a], _AIRPORT_STATES[b], q.year, q.q]
                )
                coupon_rows.append(
                    [itin, 2, b, a, carrier, carrier, "COACH", 40, distance,
                     _AIRPORT_STATES[b], _AIRPORT_STATES[a], q.year, q.q]
                )
                ticket_rows.append([itin, fare, 0, 2.0 * distance, q.year, q.q])
            for month_slot in range(3):
                month = 3 * q.q - 2 + month_slot
                pax = int(rng.integers(680, 740))
                for origin, dest in ((a, b), (b, a)):
                    t100_rows.append(
                        [carrier, origin, dest, q.year, month, pax, 875, "F", 1]
                    )

    cpi_rows: list[list] = []
    for q in quarter_range(SCENARIO_START, SCENARIO_END) + [SCENARIO_BASE_QUARTER]:
        year, month = q.last_month
        index = 180.0 * (1.005 ** (q.index - SCENARIO_START.index))
        cpi_rows.append([year, month, repr(index)])

    temps_rows = [
        [state, year, temp]
        for state, temp in sorted(_STATE_TEMPS.items())
        for year in range(SCENARIO_START.year, SCENARIO_END.year + 1)
    ]
    airport_rows = [[ap, st] for ap, st in sorted(_AIRPORT_STATES.items())]

    files = {
        "coupon": os.path.join(directory, "coupon.csv"),
        "ticket": os.path.join(directory, "ticket.csv"),
        "t100": os.path.join(directory, "t100.csv"),
        "cpi": os.path.join(directory, "cpi.csv"),
        "temps": os.path.join(directory, "temps.csv"),
        "airport_state": os.path.join(directory, "airport_states.csv"),
    }
    _write_csv(files["coupon"], COUPON_COLUMNS, coupon_rows)
    _write_csv(files["ticket"], TICKET_COLUMNS, ticket_rows)
    _write_csv(files["t100"], T100_COLUMNS, t100_rows)
    _write_csv(files["cpi"], CPI_COLUMNS, cpi_rows)
    _write_csv(files["temps"], TEMPS_COLUMNS, temps_rows)
    _write_csv(files["airport_state"], AIRPORT_STATE_COLUMNS, airport_rows)

    return ScenarioManifest(
        entrant=SCENARIO_ENTRANT,
        base_quarter=SCENARIO_BASE_QUARTER,
        sample_start=SCENARIO_START,
        sample_end=SCENARIO_END,
        expected_events=SCENARIO_EXPECTED_EVENTS,
        files=files,
    )


# ---------------------------------------------------------------------------
# Boundary fixtures: both sides of every numbered filter threshold.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _coupon_case_rows() -> list[list]:
    q = (2012, 1)

    def seg(itin, seq, a, b, op, tk, cls, pax, dist, st_a, st_b, year=2012, qq=1):
        return [itin, seq, a, b, op, tk, cls, pax, dist, st_a, st_b, year, qq]

    rows = []
    rows += [seg("OK1", 1, "AAA", "BBB", "UA", "UA", "COACH", 1, 900, "VA", "CA"),
             seg("OK1", 2, "BBB", "AAA", "UA", "UA", "COACH", 1, 900, "CA", "VA")]
    rows += [seg("3SEG", i, a, b, "UA", "UA", "COACH", 1, 400, "VA", "CA")
             for i, (a, b) in enumerate([("AAA", "BBB"), ("BBB", "CCC"), ("CCC", "AAA")], 1)]
    rows += [seg("OPENJAW", 1, "AAA", "BBB", "UA", "UA", "COACH", 1, 900, "VA", "CA"),
             seg("OPENJAW", 2, "BBB", "CCC", "UA", "UA", "COACH", 1, 900, "CA", "TX")]
    rows += [seg("CODESHARE", 1, "AAA", "BBB", "UA", "AA", "COACH", 1, 900, "VA", "CA"),
             seg("CODESHARE", 2, "BBB", "AAA", "UA", "AA", "COACH", 1, 900, "CA", "VA")]
    rows += [seg("CLASSMIX", 1, "AAA", "BBB", "UA", "UA", "COACH", 1, 900, "VA", "CA"),
             seg("CLASSMIX", 2, "BBB", "AAA", "UA", "UA", "FIRST", 1, 900, "CA", "VA")]
    rows += [seg("PAXMIX", 1, "AAA", "BBB", "UA", "UA", "COACH", 1, 900, "VA", "CA"),
             seg("PAXMIX", 2, "BBB", "AAA", "UA", "UA", "COACH", 2, 900, "CA", "VA")]
    rows += [seg("BADCLASS", 1, "AAA", "BBB", "UA", "UA", "PREMIUM", 1, 900, "VA", "CA"),
             seg("BADCLASS", 2, "BBB", "AAA", "UA", "UA", "PREMIUM", 1, 900, "CA", "VA")]
    rows += [seg("ALASKA", 1, "ANC", "BBB", "UA", "UA", "COACH", 1, 900, "AK", "CA"),
             seg("ALASKA", 2, "BBB", "ANC", "UA", "UA", "COACH", 1, 900, "CA", "AK")]
    rows += [seg("HAWAII", 1, "AAA", "HNL", "UA", "UA", "COACH", 1, 900, "VA", "HI"),
             seg("HAWAII", 2, "HNL", "AAA", "UA", "UA", "COACH", 1, 900, "HI", "VA")]
    rows += [seg("FOREIGN", 1, "AAA", "BBB", "AC", "AC", "COACH", 1, 900, "VA", "CA"),
             seg("FOREIGN", 2, "BBB", "AAA", "AC", "AC", "COACH", 1, 900, "CA", "VA")]
    rows += [["BADROW", 1, "AAA", "BBB", "UA", "UA", "COACH", "x", 900, "VA", "CA", 2012, 1]]
    del q
    return rows


_COUPON_EXPECT = {
    "retained": 1,
    "coupon_malformed_rows": 1,
    "coupon_nonstop_roundtrip": 2,
    "coupon_codeshare": 1,
    "coupon_class_passengers": 3,
    "coupon_domestic": 2,
    "coupon_cabotage": 1,
}

_TICKET_ROWS = [
    ["T-OK", 500.0, 0, 1776.0, 2012, 1],
    ["T-HIGH", 2000.0, 0, 1776.0, 2012, 1],
    ["T-EDGE", 1776.0, 0, 1776.0, 2012, 1],
    ["T-EDGE2", 1776.01, 0, 1776.0, 2012, 1],
    ["T-BULK", 300.0, 1, 1776.0, 2012, 1],
    ["T-NEG", -5.0, 0, 1776.0, 2012, 1],
]

_TICKET_EXPECT = {
    "retained": 2,
    "ticket_malformed_rows": 1,
    "ticket_fare_per_mile": 2,
    "ticket_bulk_unreliable": 1,
}


def _merge_case_rows() -> tuple[list[list], list[list]]:
    def itin(itin_id, dist):
        return [
            [itin_id, 1, "AAA", "BBB", "UA", "UA", "COACH", 1, dist, "VA", "CA", 2012, 1],
            [itin_id, 2, "BBB", "AAA", "UA", "UA", "COACH", 1, dist, "CA", "VA", 2012, 1],
        ]

    coupon = itin("M1", 900) + itin("M2", 900) + itin("M4", 900)
    ticket = [
        ["M1", 300.0, 0, 1800.0, 2012, 1],
        ["M3", 300.0, 0, 1800.0, 2012, 1],
        ["M4", 300.0, 0, 1700.0, 2012, 1],  # disagrees with 2 x 900
        ["M5", 300.0, 0, 1800.0, 2012, 1],
        ["M5", 310.0, 0, 1800.0, 2012, 1],
    ]
    return coupon, ticket


_MERGE_EXPECT = {
    "retained": 1,
    "merge_duplicate_id": 1,
    "merge_coupon_only": 1,
    "merge_ticket_only": 1,
    "merge_field_mismatch": 1,
}


def _db1b_case_rows() -> tuple[list[list], list[list]]:
    coupon: list[list] = []
    ticket: list[list] = []

    def emit(itin, carrier, a, b, st_a, st_b, cls, pax, dist, fare, year, qq):
        coupon.append([itin, 1, a, b, carrier, carrier, cls, pax, dist, st_a, st_b, year, qq])
        coupon.append([itin, 2, b, a, carrier, carrier, cls, pax, dist, st_b, st_a, year, qq])
        ticket.append([itin, fare, 0, 2 * dist, year, qq])

    # Carrier ZA: ten-route network that survives every filter. Route S01
    # carries the $19/$20 fare-floor pair; route S02 carries the
    # 99th-percentile trim case (100 single-passenger fares 20..119).
    for spoke in range(1, 11):
        a, b = "HUB", f"S{spoke:02d}"
        if spoke == 2:
            for i in range(100):
                emit(f"ZA-S02-{i:03d}", "ZA", a, b, "VA", "CA", "COACH", 1, 900, 20.0 + i, 2012, 1)
            continue
        emit(f"ZA-{b}-A", "ZA", a, b, "VA", "CA", "COACH", 60, 900, 150.0, 2012, 1)
        emit(f"ZA-{b}-B", "ZA", a, b, "VA", "CA", "COACH", 60, 900, 250.0, 2012, 1)
        if spoke == 1:
            emit("ZA-S01-F19", "ZA", a, b, "VA", "CA", "COACH", 1, 900, 19.0, 2012, 1)
            emit("ZA-S01-F20", "ZA", a, b, "VA", "CA", "COACH", 1, 900, 20.0, 2012, 1)

    # Volume boundary: 99 passengers drops, 100 passengers survives.
    emit("ZV-1", "ZV", "VAA", "VBB", "TX", "TX", "COACH", 99, 700, 150.0, 2012, 1)
    emit("ZW-1", "ZW", "WAA", "WBB", "MO", "MO", "COACH", 100, 700, 150.0, 2012, 1)

    # Nine routes only: everything falls to the small-network filter.
    for spoke in range(1, 10):
        a, b = "NHB", f"N{spoke:02d}"
        emit(f"ZN-{b}-A", "ZN", a, b, "OH", "OH", "COACH", 60, 800, 150.0, 2012, 1)
        emit(f"ZN-{b}-B", "ZN", a, b, "OH", "OH", "COACH", 60, 800, 250.0, 2012, 1)

    # Class rule: >75% business keeps all classes; exactly 75% and below
    # keep coach only.
    emit("ZB-BIZ", "ZB", "BAA", "BBB2", "GA", "GA", "BUSINESS", 80, 900, 400.0, 2012, 1)
    emit("ZB-CO", "ZB", "BAA", "BBB2", "GA", "GA", "COACH", 20, 900, 150.0, 2012, 1)
    emit("ZE-BIZ", "ZE", "EAA", "EBB", "NC", "NC", "BUSINESS", 75, 900, 400.0, 2012, 1)
    emit("ZE-CO", "ZE", "EAA", "EBB", "NC", "NC", "COACH", 25, 900, 150.0, 2012, 1)
    emit("ZC-BIZ", "ZC", "GAA", "GBB", "WA", "WA", "BUSINESS", 30, 900, 400.0, 2012, 1)
    emit("ZC-CO", "ZC", "GAA", "GBB", "WA", "WA", "COACH", 90, 900, 150.0, 2012, 1)

    # Entrant-at-DFW exclusion: binding inside 1993Q1-1999Q4, not after.
    for year, qq in ((1999, 4), (2000, 1)):
        emit(f"WN-DFW-{year}A", "WN", "DFW", "X00", "TX", "KS", "COACH", 60, 500, 150.0, year, qq)
        emit(f"WN-DFW-{year}B", "WN", "DFW", "X00", "TX", "KS", "COACH", 60, 500, 250.0, year, qq)
        for spoke in range(1, 11):
            a, b = "XHB", f"X{spoke:02d}"
            emit(f"WN-{b}-{year}A", "WN", a, b, "KS", "KS", "COACH", 60, 500, 150.0, year, qq)
            emit(f"WN-{b}-{year}B", "WN", a, b, "KS", "KS", "COACH", 60, 500, 250.0, year, qq)

    return coupon, ticket


_DB1B_EXPECT = {
    Quarter(2012, 1): {
        "db1b_class_rule": 2,
        "db1b_fare_floor": 1,
        "db1b_low_volume": 3,
        "db1b_high_fare_trim": 1,
        "db1b_dfw_exclusion": 0,
        "db1b_small_network": 11,
        "aggregates": 10,
    },
    Quarter(1999, 4): {
        "db1b_class_rule": 0,
        "db1b_fare_floor": 0,
        "db1b_low_volume": 0,
        "db1b_high_fare_trim": 0,
        "db1b_dfw_exclusion": 1,
        "db1b_small_network": 0,
        "aggregates": 10,
    },
    Quarter(2000, 1): {
        "db1b_class_rule": 0,
        "db1b_fare_floor": 0,
        "db1b_low_volume": 0,
        "db1b_high_fare_trim": 0,
        "db1b_dfw_exclusion": 0,
        "db1b_small_network": 0,
        "aggregates": 11,
    },
}

# Trim case, worked by hand: 100 unit-weight fares 20..119; the percentile
# rank is ceil(0.99 * 100) = 99, so the cut sits at 118 and exactly the 119
# fare goes. Of what remains, the mean is 69 and the 90th percentile 109.
_DB1B_TRIM_EXPECT = {"passengers": 99, "mean": 69.0, "p90": 109.0}
_DB1B_FLOOR_EXPECT = {"passengers": 121}

_T100_ROWS = [
    # passenger floor: 1999 vs 2000 (summed over the quarter's months)
    ["ZT", "TAA", "TBB", 2012, 1, 667, 1700, "F", 1],
    ["ZT", "TAA", "TBB", 2012, 2, 666, 1700, "F", 1],
    ["ZT", "TAA", "TBB", 2012, 3, 666, 1600, "F", 1],
    ["ZT", "TAA", "TCC", 2012, 1, 667, 667, "F", 1],
    ["ZT", "TAA", "TCC", 2012, 2, 667, 667, "F", 1],
    ["ZT", "TAA", "TCC", 2012, 3, 666, 666, "F", 1],
    # seat floor: 5000 passengers but 1999 seats
    ["ZT", "TAA", "TDD", 2012, 1, 1700, 667, "F", 1],
    ["ZT", "TAA", "TDD", 2012, 2, 1700, 666, "F", 1],
    ["ZT", "TAA", "TDD", 2012, 3, 1600, 666, "F", 1],
    # excluded before aggregation: freighter config, non-scheduled class
    ["ZT", "TAA", "TEE", 2012, 1, 9000, 9000, "F", 2],
    ["ZT", "TAA", "TFF", 2012, 1, 9000, 9000, "L", 1],
    # row errors: unknown service class, malformed seats
    ["ZT", "TAA", "TGG", 2012, 1, 9000, 9000, "Z", 1],
    ["ZT", "TAA", "THH", 2012, 1, 9000, "x", "F", 1],
]

_T100_EXPECT = {
    "t100_malformed_rows": 1,
    "t100_unknown_service_class": 1,
    "t100_nonscheduled": 2,
    "t100_low_volume": 2,
    "aggregates": [("ZT", ("TAA", "TCC"), Quarter(2012, 1), 2000, 2000)],
}

_CPI_RATIO_ROWS = [[2012, 3, 225.0], [2022, 3, 282.0]]
_DEFLATE_EXPECT = {"nominal": 300.0, "real": 376.0, "tolerance": 0.01}


def write_boundary_fixtures(directory) -> dict:
    """Write the boundary-case files and return their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "coupon_cases": os.path.join(directory, "coupon_cases.csv"),
        "ticket_cases": os.path.join(directory, "ticket_cases.csv"),
        "merge_coupon": os.path.join(directory, "merge_coupon.csv"),
        "merge_ticket": os.path.join(directory, "merge_ticket.csv"),
        "db1b_coupon": os.path.join(directory, "db1b_coupon.csv"),
        "db1b_ticket": os.path.join(directory, "db1b_ticket.csv"),
        "t100_cases": os.path.join(directory, "t100_cases.csv"),
        "cpi_ratio": os.path.join(directory, "cpi_ratio.csv"),
    }
    _write_csv(paths["coupon_cases"], COUPON_COLUMNS, _coupon_case_rows())
    _write_csv(paths["ticket_cases"], TICKET_COLUMNS, _TICKET_ROWS)
    merge_coupon, merge_ticket = _merge_case_rows()
    _write_csv(paths["merge_coupon"], COUPON_COLUMNS, merge_coupon)
    _write_csv(paths["merge_ticket"], TICKET_COLUMNS, merge_ticket)
    db1b_coupon, db1b_ticket = _db1b_case_rows()
    _write_csv(paths["db1b_coupon"], COUPON_COLUMNS, db1b_coupon)
    _write_csv(paths["db1b_ticket"], TICKET_COLUMNS, db1b_ticket)
    _write_csv(paths["t100_cases"], T100_COLUMNS, _T100_ROWS)
    _write_csv(paths["cpi_ratio"], CPI_COLUMNS, _CPI_RATIO_ROWS)
    return paths


def check_boundary_fixtures(directory) -> list[CheckResult]:
    """Run the ingest stages over the boundary files and compare every
    threshold outcome against its hand-computed expectation."""
    paths = {name: os.path.join(directory, fname) for name, fname in (
        ("coupon_cases", "coupon_cases.csv"),
        ("ticket_cases", "ticket_cases.csv"),
        ("merge_coupon", "merge_coupon.csv"),
        ("merge_ticket", "merge_ticket.csv"),
        ("db1b_coupon", "db1b_coupon.csv"),
        ("db1b_ticket", "db1b_ticket.csv"),
        ("t100_cases", "t100_cases.csv"),
        ("cpi_ratio", "cpi_ratio.csv"),
    )}
    results: list[CheckResult] = []

    def check(name, actual, expected):
        results.append(
            CheckResult(name, actual == expected, f"expected {expected!r}, got {actual!r}")
        )

    coupons, rep = parse_coupon(paths["coupon_cases"])
    check("coupon.retained", len(coupons), _COUPON_EXPECT["retained"])
    for stage, expected in _COUPON_EXPECT.items():
        if stage != "retained":
            check(f"coupon.{stage}", rep.dropped(stage), expected)

    tickets, rep = parse_ticket(paths["ticket_cases"])
    check("ticket.retained", len(tickets), _TICKET_EXPECT["retained"])
    for stage, expected in _TICKET_EXPECT.items():
        if stage != "retained":
            check(f"ticket.{stage}", rep.dropped(stage), expected)

    mc, _ = parse_coupon(paths["merge_coupon"])
    mt, _ = parse_ticket(paths["merge_ticket"])
    merged, rep = merge_itineraries(mc, mt)
    check("merge.retained", len(merged), _MERGE_EXPECT["retained"])
    for stage, expected in _MERGE_EXPECT.items():
        if stage != "retained":
            check(f"merge.{stage}", rep.dropped(stage), expected)

    dc, _ = parse_coupon(paths["db1b_coupon"])
    dt, _ = parse_ticket(paths["db1b_ticket"])
    dmerged, _ = merge_itineraries(dc, dt)
    for quarter, expect in _DB1B_EXPECT.items():
        aggs, rep = aggregate_db1b([m for m in dmerged if m.quarter == quarter], quarter)
        for stage, expected in expect.items():
            if stage == "aggregates":
                check(f"db1b@{quarter}.aggregates", len(aggs), expected)
            else:
                check(f"db1b@{quarter}.{stage}", rep.dropped(stage), expected)
        if quarter == Quarter(2012, 1):
            by_route = {(a.carrier, a.route): a for a in aggs}
            trim = by_route[("ZA", route_key("HUB", "S02"))]
            check("db1b.trim_passengers", trim.passengers, _DB1B_TRIM_EXPECT["passengers"])
            check("db1b.trim_mean", round(trim.fares.mean, 9), _DB1B_TRIM_EXPECT["mean"])
            check("db1b.trim_p90", trim.fares.p90, _DB1B_TRIM_EXPECT["p90"])
            floor = by_route[("ZA", route_key("HUB", "S01"))]
            check("db1b.floor_passengers", floor.passengers, _DB1B_FLOOR_EXPECT["passengers"])

    segs, rep = parse_t100(paths["t100_cases"])
    for stage in ("t100_malformed_rows", "t100_unknown_service_class"):
        check(f"t100.{stage}", rep.dropped(stage), _T100_EXPECT[stage])
    aggs, rep = aggregate_t100(segs)
    for stage in ("t100_nonscheduled", "t100_low_volume"):
        check(f"t100.{stage}", rep.dropped(stage), _T100_EXPECT[stage])
    actual = [(a.carrier, a.route, a.quarter, a.passengers, a.seats) for a in aggs]
    check("t100.aggregates", actual, _T100_EXPECT["aggregates"])

    cpi = read_cpi_csv(paths["cpi_ratio"], base_quarter=Quarter(2022, 1))
    real = deflate(_DEFLATE_EXPECT["nominal"], Quarter(2012, 1), cpi)
    ok = abs(real - _DEFLATE_EXPECT["real"]) <= _DEFLATE_EXPECT["tolerance"]
    results.append(
        CheckResult("deflate.ratio_300_to_376", ok, f"expected ~376.0, got {real!r}")
    )
    return results
