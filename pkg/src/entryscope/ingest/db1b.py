"""Itinerary-level parsing, merging, and route aggregation of DB1B-schema data.

The coupon file holds one row per flight segment; the ticket file holds one
row per itinerary with the paid fare. Rows that fail schema-level validation
are skipped and reported with their line number; itineraries and tickets that
fail a content filter are counted against that filter, in order.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from typing import Collection, Iterable

import numpy as np

from ..quarters import Quarter
from .records import (
    CONTINENTAL_STATES,
    COUPON_COLUMNS,
    DEFAULT_FOREIGN_CARRIERS,
    FARE_CLASSES,
    TICKET_COLUMNS,
    CouponItinerary,
    Db1bAggregate,
    FareDistribution,
    FilterReport,
    IngestError,
    MergedItinerary,
    TicketRecord,
    route_key,
)

FARE_FLOOR_DOLLARS = 20.0
MIN_GROUP_PASSENGERS = 100
MIN_CARRIER_ROUTES = 10
HIGH_FARE_PERCENTILE = 99.0
BUSINESS_FIRST_SHARE = 0.75

# DB1B reporting for these route-quarters is known to be spurious.
_DFW_CARRIER = "WN"
_DFW_AIRPORT = "DFW"
_DFW_FIRST = Quarter(1993, 1)
_DFW_LAST = Quarter(1999, 4)


def _open_csv(path, required: tuple[str, ...]):
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(fh)
    header = reader.fieldnames
    if header is None or not set(required) <= set(header):
        fh.close()
        missing = sorted(set(required) - set(header or ()))
        raise IngestError(f"{path}: missing required columns {missing}")
    return fh, reader


def weighted_mean(values, weights) -> float:
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    return float(np.sum(v * w) / np.sum(w))


def weighted_percentile(values, weights, pct: float) -> float:
    """Nearest-rank percentile of the weight-expanded value list.

    Equivalent to repeating each value by its integer weight, sorting, and
    taking the ceil(pct/100 * N)-th element, without materializing the
    expansion.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=np.int64)
    order = np.argsort(v, kind="stable")
    v = v[order]
    cum = np.cumsum(w[order])
    total = int(cum[-1])
    rank = int(np.ceil(pct / 100.0 * total))
    rank = max(rank, 1)
    idx = int(np.searchsorted(cum, rank, side="left"))
    return float(v[idx])


def parse_coupon(
    path, foreign_carriers: Collection[str] = DEFAULT_FOREIGN_CARRIERS
) -> tuple[list[CouponItinerary], FilterReport]:
    """Parse a coupon CSV and keep nonstop round-trip domestic itineraries.

    Returns the retained itineraries and a report counting, per filter,
    every itinerary dropped: round-trip shape, codesharing, fare-class and
    passenger consistency, continental-US endpoints, and cabotage.
    """
    report = FilterReport()
    fh, reader = _open_csv(path, COUPON_COLUMNS)
    raw: dict[str, list] = defaultdict(list)
    bad_itins: set[str] = set()
    malformed_rows = 0
    with fh:
        for line_no, row in enumerate(reader, start=2):
            itin_id = (row.get("ITIN_ID") or "").strip()
            try:
                seq = int(row["SEQ_NUM"])
                passengers = int(row["PASSENGERS"])
                distance = float(row["DISTANCE"])
                quarter = Quarter(int(row["YEAR"]), int(row["QUARTER"]))
                if passengers <= 0 or distance <= 0:
                    raise ValueError("nonpositive passengers or distance")
            except (KeyError, TypeError, ValueError) as exc:
                report.error(f"{path}:{line_no}: malformed coupon row ({exc})")
                malformed_rows += 1
                if itin_id:
                    bad_itins.add(itin_id)
                continue
            raw[itin_id].append(
                (
                    seq,
                    row["ORIGIN"].strip(),
                    row["DEST"].strip(),
                    row["OP_CARRIER"].strip(),
                    row["TK_CARRIER"].strip(),
                    row["FARE_CLASS"].strip().lower(),
                    passengers,
                    distance,
                    row["ORIGIN_STATE"].strip(),
                    row["DEST_STATE"].strip(),
                    quarter,
                )
            )

    # An itinerary with any malformed segment row cannot be validated.
    for itin_id in bad_itins:
        raw.pop(itin_id, None)
    report.record("coupon_malformed_rows", malformed_rows, sum(len(v) for v in raw.values()))

    kept: list[CouponItinerary] = []
    drops = {
        "coupon_nonstop_roundtrip": 0,
        "coupon_codeshare": 0,
        "coupon_class_passengers": 0,
        "coupon_domestic": 0,
        "coupon_cabotage": 0,
    }
    for itin_id in sorted(raw):
        segs = sorted(raw[itin_id])
        quarters = {s[10] for s in segs}
        if len(quarters) != 1:
            report.error(f"itinerary {itin_id}: inconsistent year/quarter across segments")
            drops["coupon_nonstop_roundtrip"] += 1
            continue
        pairs = [(s[1], s[2]) for s in segs]
        if len(segs) != 2 or pairs[0] != (pairs[1][1], pairs[1][0]):
            drops["coupon_nonstop_roundtrip"] += 1
            continue
        if any(s[3] != s[4] for s in segs):
            drops["coupon_codeshare"] += 1
            continue
        classes = {s[5] for s in segs}
        paxes = {s[6] for s in segs}
        if len(classes) != 1 or len(paxes) != 1 or classes.pop() not in FARE_CLASSES:
            drops["coupon_class_passengers"] += 1
            continue
        states = {s[8] for s in segs} | {s[9] for s in segs}
        if not states <= CONTINENTAL_STATES:
            drops["coupon_domestic"] += 1
            continue
        if segs[0][3] in foreign_carriers:
            drops["coupon_cabotage"] += 1
            continue
        kept.append(
            CouponItinerary(
                itinerary_id=itin_id,
                operating_carrier=segs[0][3],
                ticketing_carrier=segs[0][4],
                segments=tuple((s[1], s[2]) for s in segs),
                fare_class=segs[0][5],
                passengers=segs[0][6],
                one_way_distance=segs[0][7],
                origin_state=segs[0][8],
                dest_state=segs[0][9],
                quarter=segs[0][10],
            )
        )

    remaining = len(raw)
    for stage in (
        "coupon_nonstop_roundtrip",
        "coupon_codeshare",
        "coupon_class_passengers",
        "coupon_domestic",
        "coupon_cabotage",
    ):
        remaining -= drops[stage]
        report.record(stage, drops[stage], remaining)
    return kept, report


def parse_ticket(path) -> tuple[list[TicketRecord], FilterReport]:
    """Parse a ticket CSV, dropping incredible and unreliable fares.

    Fares above $1 per mile of the full (round-trip) itinerary distance and
    bulk fares flagged unreliable are filtered; negative fares are row
    errors.
    """
    report = FilterReport()
    fh, reader = _open_csv(path, TICKET_COLUMNS)
    parsed: list[TicketRecord] = []
    malformed = 0
    with fh:
        for line_no, row in enumerate(reader, start=2):
            try:
                fare = float(row["ITIN_FARE"])
                bulk = row["BULK_FARE_UNRELIABLE"].strip() not in ("0", "", "false", "False")
                distance_full = float(row["DISTANCE_FULL"])
                quarter = Quarter(int(row["YEAR"]), int(row["QUARTER"]))
                if fare < 0:
                    raise ValueError("negative fare")
                if distance_full <= 0:
                    raise ValueError("nonpositive distance")
            except (KeyError, TypeError, ValueError) as exc:
                report.error(f"{path}:{line_no}: malformed ticket row ({exc})")
                malformed += 1
                continue
            parsed.append(
                TicketRecord(
                    itinerary_id=row["ITIN_ID"].strip(),
                    nominal_fare=fare,
                    bulk_fare_unreliable=bulk,
                    distance_full=distance_full,
                    quarter=quarter,
                )
            )
    report.record("ticket_malformed_rows", malformed, len(parsed))

    credible = [t for t in parsed if t.nominal_fare <= t.distance_full]
    report.record("ticket_fare_per_mile", len(parsed) - len(credible), len(credible))
    kept = [t for t in credible if not t.bulk_fare_unreliable]
    report.record("ticket_bulk_unreliable", len(credible) - len(kept), len(kept))
    return kept, report


def merge_itineraries(
    coupons: Iterable[CouponItinerary], tickets: Iterable[TicketRecord]
) -> tuple[list[MergedItinerary], FilterReport]:
    """Inner-join coupons and tickets on itinerary id.

    Ids duplicated within one source are unusable and dropped entirely.
    Joined records whose shared fields disagree (quarter, or round-trip
    distance versus twice the coupon one-way distance) are dropped.
    """
    report = FilterReport()
    coupons = list(coupons)
    tickets = list(tickets)

    def index_unique(items, ids):
        counts = defaultdict(int)
        for i in ids:
            counts[i] += 1
        dup = {i for i, c in counts.items() if c > 1}
        return {i: rec for i, rec in zip(ids, items) if i not in dup}, dup

    coupon_map, dup_c = index_unique(coupons, [c.itinerary_id for c in coupons])
    ticket_map, dup_t = index_unique(tickets, [t.itinerary_id for t in tickets])
    for itin_id in sorted(dup_c | dup_t):
        report.error(f"itinerary {itin_id}: duplicate id within one source")
    report.record(
        "merge_duplicate_id",
        len(dup_c | dup_t),
        len(coupon_map) + len(ticket_map),
    )

    shared = sorted(set(coupon_map) & set(ticket_map))
    report.record("merge_coupon_only", len(coupon_map) - len(shared), len(shared))
    report.record("merge_ticket_only", len(ticket_map) - len(shared), len(shared))

    merged: list[MergedItinerary] = []
    mismatched = 0
    for itin_id in shared:
        c = coupon_map[itin_id]
        t = ticket_map[itin_id]
        if c.quarter != t.quarter or abs(2.0 * c.one_way_distance - t.distance_full) > 1e-6:
            mismatched += 1
            continue
        merged.append(
            MergedItinerary(
                itinerary_id=itin_id,
                carrier=c.operating_carrier,
                origin=c.origin,
                dest=c.dest,
                fare_class=c.fare_class,
                passengers=c.passengers,
                nominal_fare=t.nominal_fare,
                one_way_distance=c.one_way_distance,
                origin_state=c.origin_state,
                dest_state=c.dest_state,
                quarter=c.quarter,
            )
        )
    report.record("merge_field_mismatch", mismatched, len(merged))
    return merged, report


def _fare_distribution(fares, weights) -> FareDistribution:
    return FareDistribution(
        mean=weighted_mean(fares, weights),
        p10=weighted_percentile(fares, weights, 10.0),
        p25=weighted_percentile(fares, weights, 25.0),
        p75=weighted_percentile(fares, weights, 75.0),
        p90=weighted_percentile(fares, weights, 90.0),
    )


def aggregate_db1b(
    itineraries: Iterable[MergedItinerary], quarter: Quarter
) -> tuple[list[Db1bAggregate], FilterReport]:
    """Apply the route-level demand filters and aggregate one quarter.

    Filters run in order: the 75% business/first carrier rule, the $20
    nominal fare floor (a $20 fare is kept), the 100-passenger directional
    volume floor, the 99th-percentile high-fare trim (computed per
    directional route-carrier on the post-floor distribution), the known-bad
    DFW route-quarters, and the ten-route minimum network size per carrier.
    Surviving directional groups are then collapsed to unordered routes,
    pooling fares passenger-weighted.
    """
    report = FilterReport()
    items = [i for i in itineraries if i.quarter == quarter]

    # 75% rule: carriers whose traffic is mostly business/first keep all
    # classes; everyone else keeps coach only. Shares are passenger-weighted.
    pax_total: dict[str, int] = defaultdict(int)
    pax_premium: dict[str, int] = defaultdict(int)
    for it in items:
        pax_total[it.carrier] += it.passengers
        if it.fare_class in ("business", "first"):
            pax_premium[it.carrier] += it.passengers
    keep_all_classes = {
        carrier: pax_premium[carrier] > BUSINESS_FIRST_SHARE * pax_total[carrier]
        for carrier in pax_total
    }
    survivors = [
        it for it in items if keep_all_classes[it.carrier] or it.fare_class == "coach"
    ]
    report.record("db1b_class_rule", len(items) - len(survivors), len(survivors))

    above_floor = [it for it in survivors if it.nominal_fare >= FARE_FLOOR_DOLLARS]
    report.record("db1b_fare_floor", len(survivors) - len(above_floor), len(above_floor))

    groups: dict[tuple[str, tuple[str, str]], list[MergedItinerary]] = defaultdict(list)
    for it in above_floor:
        groups[(it.carrier, (it.origin, it.dest))].append(it)

    big_enough = {
        key: its
        for key, its in groups.items()
        if sum(i.passengers for i in its) >= MIN_GROUP_PASSENGERS
    }
    report.record("db1b_low_volume", len(groups) - len(big_enough), len(big_enough))

    trimmed_groups: dict[tuple[str, tuple[str, str]], list[MergedItinerary]] = {}
    trimmed_tickets = 0
    for key in sorted(big_enough):
        its = big_enough[key]
        p99 = weighted_percentile(
            [i.nominal_fare for i in its], [i.passengers for i in its], HIGH_FARE_PERCENTILE
        )
        kept = [i for i in its if i.nominal_fare <= p99]
        trimmed_tickets += len(its) - len(kept)
        trimmed_groups[key] = kept
    report.record(
        "db1b_high_fare_trim", trimmed_tickets, sum(len(v) for v in trimmed_groups.values())
    )

    def is_excluded_dfw(key) -> bool:
        carrier, (o, d) = key
        return (
            carrier == _DFW_CARRIER
            and _DFW_AIRPORT in (o, d)
            and _DFW_FIRST <= quarter <= _DFW_LAST
        )

    after_dfw = {k: v for k, v in trimmed_groups.items() if not is_excluded_dfw(k)}
    report.record("db1b_dfw_exclusion", len(trimmed_groups) - len(after_dfw), len(after_dfw))

    routes_by_carrier: dict[str, set] = defaultdict(set)
    for carrier, (o, d) in after_dfw:
        routes_by_carrier[carrier].add(route_key(o, d))
    final_groups = {
        k: v for k, v in after_dfw.items() if len(routes_by_carrier[k[0]]) >= MIN_CARRIER_ROUTES
    }
    report.record("db1b_small_network", len(after_dfw) - len(final_groups), len(final_groups))

    pooled: dict[tuple[str, tuple[str, str]], list[MergedItinerary]] = defaultdict(list)
    for (carrier, (o, d)), its in final_groups.items():
        pooled[(carrier, route_key(o, d))].extend(its)

    aggregates = []
    for carrier, route in sorted(pooled):
        its = pooled[(carrier, route)]
        fares = [i.nominal_fare for i in its]
        weights = [i.passengers for i in its]
        aggregates.append(
            Db1bAggregate(
                carrier=carrier,
                route=route,
                quarter=quarter,
                passengers=sum(weights),
                fares=_fare_distribution(fares, weights),
                distance_miles=weighted_mean([i.one_way_distance for i in its], weights),
            )
        )
    return aggregates, report
