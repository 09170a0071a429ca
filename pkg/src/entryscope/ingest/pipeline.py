"""End-to-end assembly of the route-carrier-quarter dataset.

Each quarter is processed independently (the stages are pure functions of
that quarter's rows) and the per-quarter outputs are concatenated in sorted
order, so identical inputs always produce byte-identical outputs.
"""

from __future__ import annotations

import csv
from typing import Iterable, Mapping

from ..quarters import Quarter
from .db1b import aggregate_db1b, merge_itineraries, parse_coupon, parse_ticket
from .records import (
    Db1bAggregate,
    FareDistribution,
    FilterReport,
    IngestError,
    RouteCarrierQuarter,
    T100Aggregate,
)
from .reference import CpiSeries, deflate, temp_differential
from .t100 import aggregate_t100, parse_t100

RCQ_COLUMNS = (
    "CARRIER",
    "ORIGIN",
    "DEST",
    "YEAR",
    "QUARTER",
    "DB1B_PASSENGERS",
    "FARE_MEAN_REAL",
    "FARE_P10_REAL",
    "FARE_P25_REAL",
    "FARE_P75_REAL",
    "FARE_P90_REAL",
    "T100_PASSENGERS",
    "T100_SEATS",
    "LOAD_FACTOR",
    "DISTANCE_MILES",
    "TEMP_DIFF_F",
)

DROP_REPORT_COLUMNS = ("STAGE", "DROPPED", "RETAINED")


def merge_supply_demand(
    db1b_aggs: Iterable[Db1bAggregate], t100_aggs: Iterable[T100Aggregate]
) -> tuple[list[tuple[Db1bAggregate, T100Aggregate]], FilterReport]:
    """Inner-join demand and supply aggregates on (carrier, route, quarter)."""
    report = FilterReport()
    demand = {(a.carrier, a.route, a.quarter): a for a in db1b_aggs}
    supply = {(a.carrier, a.route, a.quarter): a for a in t100_aggs}
    shared = sorted(set(demand) & set(supply))
    report.record("merge_db1b_only", len(demand) - len(shared), len(shared))
    report.record("merge_t100_only", len(supply) - len(shared), len(shared))
    return [(demand[k], supply[k]) for k in shared], report


def _assemble_record(
    d: Db1bAggregate,
    s: T100Aggregate,
    cpi: CpiSeries,
    airport_states: Mapping[str, str],
    temps: Mapping[tuple[str, int], float],
) -> RouteCarrierQuarter:
    ratio = deflate(1.0, d.quarter, cpi)
    return RouteCarrierQuarter(
        carrier=d.carrier,
        route=d.route,
        quarter=d.quarter,
        db1b_passengers=d.passengers,
        fares_real=d.fares.scaled(ratio),
        t100_passengers=s.passengers,
        t100_seats=s.seats,
        load_factor=s.passengers / s.seats,
        distance_miles=d.distance_miles,
        temp_differential_f=temp_differential(d.route, d.quarter.year, airport_states, temps),
    )


def build_route_quarters(
    coupon_path,
    ticket_path,
    t100_path,
    cpi: CpiSeries,
    airport_states: Mapping[str, str],
    temps: Mapping[tuple[str, int], float],
) -> tuple[list[RouteCarrierQuarter], FilterReport]:
    """Run the full ingest pipeline over every quarter present in the files."""
    report = FilterReport()
    coupons, rep = parse_coupon(coupon_path)
    report.extend(rep)
    tickets, rep = parse_ticket(ticket_path)
    report.extend(rep)
    merged, rep = merge_itineraries(coupons, tickets)
    report.extend(rep)
    segments, rep = parse_t100(t100_path)
    report.extend(rep)
    t100_all, rep = aggregate_t100(segments)
    report.extend(rep)

    quarters = sorted({m.quarter for m in merged} | {a.quarter for a in t100_all})
    records: list[RouteCarrierQuarter] = []
    for quarter in quarters:
        db1b_aggs, rep = aggregate_db1b([m for m in merged if m.quarter == quarter], quarter)
        report.extend(rep)
        pairs, rep = merge_supply_demand(
            db1b_aggs, [a for a in t100_all if a.quarter == quarter]
        )
        report.extend(rep)
        for d, s in pairs:
            records.append(_assemble_record(d, s, cpi, airport_states, temps))

    records.sort(key=lambda r: (r.carrier, r.route, r.quarter))
    return records, report


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_route_quarters_csv(records: Iterable[RouteCarrierQuarter], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RCQ_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.carrier,
                    r.route[0],
                    r.route[1],
                    r.quarter.year,
                    r.quarter.q,
                    r.db1b_passengers,
                    _fmt(r.fares_real.mean),
                    _fmt(r.fares_real.p10),
                    _fmt(r.fares_real.p25),
                    _fmt(r.fares_real.p75),
                    _fmt(r.fares_real.p90),
                    r.t100_passengers,
                    r.t100_seats,
                    _fmt(r.load_factor),
                    _fmt(r.distance_miles),
                    _fmt(r.temp_differential_f),
                ]
            )


def read_route_quarters_csv(path) -> list[RouteCarrierQuarter]:
    records: list[RouteCarrierQuarter] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RCQ_COLUMNS:
            raise IngestError(f"{path}: expected columns {RCQ_COLUMNS}")
        for row in reader:
            records.append(
                RouteCarrierQuarter(
                    carrier=row["CARRIER"],
                    route=(row["ORIGIN"], row["DEST"]),
                    quarter=Quarter(int(row["YEAR"]), int(row["QUARTER"])),
                    db1b_passengers=int(row["DB1B_PASSENGERS"]),
                    fares_real=FareDistribution(
                        mean=float(row["FARE_MEAN_REAL"]),
                        p10=float(row["FARE_P10_REAL"]),
                        p25=float(row["FARE_P25_REAL"]),
                        p75=float(row["FARE_P75_REAL"]),
                        p90=float(row["FARE_P90_REAL"]),
                    ),
                    t100_passengers=int(row["T100_PASSENGERS"]),
                    t100_seats=int(row["T100_SEATS"]),
                    load_factor=float(row["LOAD_FACTOR"]),
                    distance_miles=float(row["DISTANCE_MILES"]),
                    temp_differential_f=(
                        float(row["TEMP_DIFF_F"]) if row["TEMP_DIFF_F"] != "" else None
                    ),
                )
            )
    return records


def write_drop_report_csv(report: FilterReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DROP_REPORT_COLUMNS)
        for stage, dropped, retained in report.stages:
            writer.writerow([stage, dropped, retained])
