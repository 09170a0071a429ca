"""Ticket, segment, and reference-data ingestion into route-carrier-quarters."""

from .db1b import (
    aggregate_db1b,
    merge_itineraries,
    parse_coupon,
    parse_ticket,
    weighted_mean,
    weighted_percentile,
)
from .pipeline import (
    DROP_REPORT_COLUMNS,
    RCQ_COLUMNS,
    build_route_quarters,
    merge_supply_demand,
    read_route_quarters_csv,
    write_drop_report_csv,
    write_route_quarters_csv,
)
from .records import (
    CONTINENTAL_STATES,
    DEFAULT_FOREIGN_CARRIERS,
    CouponItinerary,
    Db1bAggregate,
    FareDistribution,
    FilterReport,
    IngestError,
    MergedItinerary,
    RouteCarrierQuarter,
    SegmentRecord,
    T100Aggregate,
    TicketRecord,
    route_key,
)
from .reference import (
    CpiSeries,
    DeflationError,
    deflate,
    read_airport_states,
    read_cpi_csv,
    read_state_temps,
    temp_differential,
)
from .t100 import aggregate_t100, parse_t100

__all__ = [
    "CONTINENTAL_STATES",
    "DEFAULT_FOREIGN_CARRIERS",
    "DROP_REPORT_COLUMNS",
    "RCQ_COLUMNS",
    "CouponItinerary",
    "CpiSeries",
    "Db1bAggregate",
    "DeflationError",
    "FareDistribution",
    "FilterReport",
    "IngestError",
    "MergedItinerary",
    "RouteCarrierQuarter",
    "SegmentRecord",
    "T100Aggregate",
    "TicketRecord",
    "aggregate_db1b",
    "aggregate_t100",
    "build_route_quarters",
    "deflate",
    "merge_itineraries",
    "merge_supply_demand",
    "parse_coupon",
    "parse_t100",
    "parse_ticket",
    "read_airport_states",
    "read_cpi_csv",
    "read_route_quarters_csv",
    "read_state_temps",
    "route_key",
    "temp_differential",
    "weighted_mean",
    "weighted_percentile",
    "write_drop_report_csv",
    "write_route_quarters_csv",
]
