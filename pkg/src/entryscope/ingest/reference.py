"""Reference series: price deflation, temperatures, airport locations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

from ..quarters import Quarter
from .records import AIRPORT_STATE_COLUMNS, CPI_COLUMNS, TEMPS_COLUMNS, IngestError


class DeflationError(IngestError):
    """CPI coverage is missing for a required month."""


@dataclass(frozen=True)
class CpiSeries:
    """Monthly price index with a fixed base quarter.

    Fares deflate by the ratio of the index in the base quarter's last month
    to the index in the observation quarter's last month.
    """

    index: Mapping[tuple[int, int], float]
    base_quarter: Quarter

    def __post_init__(self):
        bad = [k for k, v in self.index.items() if v <= 0]
        if bad:
            raise IngestError(f"CPI index values must be positive; bad months: {sorted(bad)}")

    def value_for_quarter(self, quarter: Quarter) -> float:
        key = quarter.last_month
        try:
            return self.index[key]
        except KeyError:
            raise DeflationError(
                f"CPI index missing for {key[0]}-{key[1]:02d} (last month of {quarter})"
            ) from None


def read_cpi_csv(path, base_quarter: Quarter) -> CpiSeries:
    index: dict[tuple[int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(CPI_COLUMNS) <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns {CPI_COLUMNS}")
        for row in reader:
            index[(int(row["YEAR"]), int(row["MONTH"]))] = float(row["INDEX"])
    return CpiSeries(index=index, base_quarter=base_quarter)


def deflate(nominal_fare: float, quarter: Quarter, cpi: CpiSeries) -> float:
    """Nominal dollars in ``quarter`` expressed at base-quarter prices."""
    return nominal_fare * cpi.value_for_quarter(cpi.base_quarter) / cpi.value_for_quarter(quarter)


def read_state_temps(path) -> dict[tuple[str, int], float]:
    """January average temperature (F) keyed by (state, year)."""
    temps: dict[tuple[str, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(TEMPS_COLUMNS) <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns {TEMPS_COLUMNS}")
        for row in reader:
            temps[(row["STATE"].strip(), int(row["YEAR"]))] = float(row["JAN_AVG_F"])
    return temps


def read_airport_states(path) -> dict[str, str]:
    states: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(AIRPORT_STATE_COLUMNS) <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns {AIRPORT_STATE_COLUMNS}")
        for row in reader:
            states[row["AIRPORT"].strip()] = row["STATE"].strip()
    return states


def temp_differential(
    route: tuple[str, str],
    year: int,
    airport_states: Mapping[str, str],
    temps: Mapping[tuple[str, int], float],
) -> float | None:
    """Absolute January temperature difference between the endpoint states.

    Returns None when either endpoint's state or its temperature for the
    year is unknown; callers treat the control as missing for that row.
    """
    a, b = route
    state_a = airport_states.get(a)
    state_b = airport_states.get(b)
    if state_a is None or state_b is None:
        return None
    t_a = temps.get((state_a, year))
    t_b = temps.get((state_b, year))
    if t_a is None or t_b is None:
        return None
    return abs(t_a - t_b)
