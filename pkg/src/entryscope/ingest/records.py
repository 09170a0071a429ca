"""Record types and schema constants shared across the ingest stages."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..quarters import Quarter

# Continental U.S. states (Alaska and Hawaii excluded) plus DC. Itineraries
# touching any other state or territory code are dropped by the domestic
# filter.
CONTINENTAL_STATES = frozenset(
    {
        "AL", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA",
        "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME", "MD", "MA",
        "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM",
        "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD",
        "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
    }
)

# The coupon schema carries no carrier-nationality field, so the cabotage
# filter works from a blocklist of foreign carrier codes. Callers with better
# information can pass their own set to parse_coupon.
DEFAULT_FOREIGN_CARRIERS = frozenset(
    {
        "AC", "AF", "AM", "AV", "AZ", "BA", "BR", "CM", "CX", "EI",
        "EK", "IB", "JL", "KE", "KL", "LH", "LR", "NH", "QF", "SQ",
        "TK", "TS", "VS", "WS",
    }
)

FARE_CLASSES = ("coach", "business", "first")

COUPON_COLUMNS = (
    "ITIN_ID", "SEQ_NUM", "ORIGIN", "DEST", "OP_CARRIER", "TK_CARRIER",
    "FARE_CLASS", "PASSENGERS", "DISTANCE", "ORIGIN_STATE", "DEST_STATE",
    "YEAR", "QUARTER",
)
TICKET_COLUMNS = (
    "ITIN_ID", "ITIN_FARE", "BULK_FARE_UNRELIABLE", "DISTANCE_FULL", "YEAR", "QUARTER",
)
T100_COLUMNS = (
    "CARRIER", "ORIGIN", "DEST", "YEAR", "MONTH", "PASSENGERS", "SEATS",
    "SERVICE_CLASS", "AIRCRAFT_CONFIG",
)
CPI_COLUMNS = ("YEAR", "MONTH", "INDEX")
TEMPS_COLUMNS = ("STATE", "YEAR", "JAN_AVG_F")
AIRPORT_STATE_COLUMNS = ("AIRPORT", "STATE")


class IngestError(ValueError):
    """Fatal ingest failure (bad header, missing reference data, ...)."""


def route_key(a: str, b: str) -> tuple[str, str]:
    """Canonical unordered airport pair."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class CouponItinerary:
    """One itinerary surviving the coupon filters: a nonstop round trip."""

    itinerary_id: str
    operating_carrier: str
    ticketing_carrier: str
    segments: tuple[tuple[str, str], ...]
    fare_class: str
    passengers: int
    one_way_distance: float
    origin_state: str
    dest_state: str
    quarter: Quarter

    @property
    def origin(self) -> str:
        return self.segments[0][0]

    @property
    def dest(self) -> str:
        return self.segments[0][1]


@dataclass(frozen=True)
class TicketRecord:
    itinerary_id: str
    nominal_fare: float
    bulk_fare_unreliable: bool
    distance_full: float
    quarter: Quarter


@dataclass(frozen=True)
class MergedItinerary:
    """Coupon and ticket information joined on itinerary id."""

    itinerary_id: str
    carrier: str
    origin: str
    dest: str
    fare_class: str
    passengers: int
    nominal_fare: float
    one_way_distance: float
    origin_state: str
    dest_state: str
    quarter: Quarter


@dataclass(frozen=True)
class SegmentRecord:
    """One monthly directional segment row."""

    carrier: str
    origin: str
    destination: str
    year: int
    month: int
    passengers: int
    seats: int
    service_class: str
    config: int

    @property
    def quarter(self) -> Quarter:
        return Quarter(self.year, (self.month - 1) // 3 + 1)


@dataclass(frozen=True)
class FareDistribution:
    """Mean plus the reported percentiles of a fare distribution."""

    mean: float
    p10: float
    p25: float
    p75: float
    p90: float

    def __post_init__(self):
        if not self.p10 <= self.p25 <= self.p75 <= self.p90:
            raise IngestError(
                f"fare percentiles out of order: {self.p10}, {self.p25}, "
                f"{self.p75}, {self.p90}"
            )

    def scaled(self, factor: float) -> "FareDistribution":
        return FareDistribution(
            self.mean * factor,
            self.p10 * factor,
            self.p25 * factor,
            self.p75 * factor,
            self.p90 * factor,
        )


@dataclass(frozen=True)
class Db1bAggregate:
    """Demand-side totals for one carrier on one unordered route-quarter."""

    carrier: str
    route: tuple[str, str]
    quarter: Quarter
    passengers: int
    fares: FareDistribution  # nominal dollars
    distance_miles: float


@dataclass(frozen=True)
class T100Aggregate:
    """Supply-side totals for one carrier on one unordered route-quarter."""

    carrier: str
    route: tuple[str, str]
    quarter: Quarter
    passengers: int
    seats: int


@dataclass(frozen=True)
class RouteCarrierQuarter:
    """One merged demand+supply observation of the core dataset."""

    carrier: str
    route: tuple[str, str]
    quarter: Quarter
    db1b_passengers: int
    fares_real: FareDistribution
    t100_passengers: int
    t100_seats: int
    load_factor: float
    distance_miles: float
    temp_differential_f: float | None


@dataclass
class FilterReport:
    """Ordered per-stage drop accounting plus row-level error messages."""

    stages: list[tuple[str, int, int]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def record(self, stage: str, dropped: int, retained: int) -> None:
        self.stages.append((stage, dropped, retained))

    def error(self, message: str) -> None:
        self.errors.append(message)

    def dropped(self, stage: str) -> int:
        return sum(d for s, d, _ in self.stages if s == stage)

    def extend(self, other: "FilterReport") -> None:
        """Merge another report, summing counts of stages already seen."""
        merged = {s: (d, r) for s, d, r in self.stages}
        order = [s for s, _, _ in self.stages]
        for stage, dropped, retained in other.stages:
            if stage in merged:
                d0, r0 = merged[stage]
                merged[stage] = (d0 + dropped, r0 + retained)
            else:
                merged[stage] = (dropped, retained)
                order.append(stage)
        self.stages = [(s, merged[s][0], merged[s][1]) for s in order]
        self.errors.extend(other.errors)
