"""Monthly segment (T-100 schema) parsing and quarterly supply aggregation."""

from __future__ import annotations

import csv
from collections import defaultdict
from typing import Iterable

from ..quarters import Quarter
from .records import (
    T100_COLUMNS,
    FilterReport,
    IngestError,
    SegmentRecord,
    T100Aggregate,
    route_key,
)

# Service-class codes carried by the schema; only scheduled passenger/cargo
# service ("F") enters the supply aggregates.
KNOWN_SERVICE_CLASSES = frozenset({"F", "G", "L", "N", "P"})
SCHEDULED_SERVICE_CLASS = "F"

# Aircraft configuration codes: 1 = passenger, 2 = freighter, 3 = combined
# passenger/freight. Freighters never carry the passengers modelled here.
PASSENGER_CONFIGS = frozenset({1, 3})

MIN_QUARTER_PASSENGERS = 2000
MIN_QUARTER_SEATS = 2000


def parse_t100(path) -> tuple[list[SegmentRecord], FilterReport]:
    """Parse monthly directional segment rows.

    Malformed rows and rows with an unknown service-class code are skipped
    and counted as row errors; service filtering happens at aggregation.
    """
    report = FilterReport()
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not set(T100_COLUMNS) <= set(reader.fieldnames):
        fh.close()
        missing = sorted(set(T100_COLUMNS) - set(reader.fieldnames or ()))
        raise IngestError(f"{path}: missing required columns {missing}")

    records: list[SegmentRecord] = []
    malformed = 0
    unknown_class = 0
    with fh:
        for line_no, row in enumerate(reader, start=2):
            try:
                year = int(row["YEAR"])
                month = int(row["MONTH"])
                passengers = int(row["PASSENGERS"])
                seats = int(row["SEATS"])
                config = int(row["AIRCRAFT_CONFIG"])
                if not 1 <= month <= 12:
                    raise ValueError(f"month {month} out of range")
                if passengers < 0 or seats < 0:
                    raise ValueError("negative passengers or seats")
            except (KeyError, TypeError, ValueError) as exc:
                report.error(f"{path}:{line_no}: malformed segment row ({exc})")
                malformed += 1
                continue
            service_class = row["SERVICE_CLASS"].strip().upper()
            if service_class not in KNOWN_SERVICE_CLASSES:
                report.error(f"{path}:{line_no}: unknown service class {service_class!r}")
                unknown_class += 1
                continue
            records.append(
                SegmentRecord(
                    carrier=row["CARRIER"].strip(),
                    origin=row["ORIGIN"].strip(),
                    destination=row["DEST"].strip(),
                    year=year,
                    month=month,
                    passengers=passengers,
                    seats=seats,
                    service_class=service_class,
                    config=config,
                )
            )
    report.record("t100_malformed_rows", malformed, len(records) + unknown_class)
    report.record("t100_unknown_service_class", unknown_class, len(records))
    return records, report


def aggregate_t100(records: Iterable[SegmentRecord]) -> tuple[list[T100Aggregate], FilterReport]:
    """Aggregate monthly segments to unordered route-carrier-quarters.

    Keeps scheduled passenger/combined-configuration service only, sums the
    months of each directional route-carrier-quarter, drops directional
    aggregates under the 2,000 passenger or 2,000 seat floor, then collapses
    the two directions of each route.
    """
    report = FilterReport()
    records = list(records)
    scheduled = [
        r
        for r in records
        if r.service_class == SCHEDULED_SERVICE_CLASS and r.config in PASSENGER_CONFIGS
    ]
    report.record("t100_nonscheduled", len(records) - len(scheduled), len(scheduled))

    directional: dict[tuple[str, str, str, Quarter], list[int]] = defaultdict(lambda: [0, 0])
    for r in scheduled:
        key = (r.carrier, r.origin, r.destination, r.quarter)
        directional[key][0] += r.passengers
        directional[key][1] += r.seats

    surviving = {
        key: (pax, seats)
        for key, (pax, seats) in directional.items()
        if pax >= MIN_QUARTER_PASSENGERS and seats >= MIN_QUARTER_SEATS
    }
    report.record("t100_low_volume", len(directional) - len(surviving), len(surviving))

    collapsed: dict[tuple[str, tuple[str, str], Quarter], list[int]] = defaultdict(lambda: [0, 0])
    for (carrier, origin, dest, quarter), (pax, seats) in surviving.items():
        key = (carrier, route_key(origin, dest), quarter)
        collapsed[key][0] += pax
        collapsed[key][1] += seats

    aggregates = [
        T100Aggregate(carrier=c, route=r, quarter=q, passengers=pax, seats=seats)
        for (c, r, q), (pax, seats) in sorted(collapsed.items())
    ]
    return aggregates, report
