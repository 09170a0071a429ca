"""Calendar quarters with total ordering and integer offset arithmetic."""

from __future__ import annotations

import re
from dataclasses import dataclass

_QUARTER_RE = re.compile(r"^\s*(\d{4})Q([1-4])\s*$")


@dataclass(frozen=True, order=True)
class Quarter:
    """A calendar quarter such as 2006Q1.

    Quarters are totally ordered and closed under integer offsets, so
    ``q + 4`` is the same quarter one year later and ``q2 - q1`` is the
    number of quarters between two dates.
    """

    year: int
    q: int

    def __post_init__(self):
        if not 1 <= self.q <= 4:
            raise ValueError(f"quarter index must be in 1..4, got {self.q}")

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        m = _QUARTER_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse quarter {text!r}; expected e.g. '2006Q1'")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_index(cls, index: int) -> "Quarter":
        year, rem = divmod(index, 4)
        return cls(year, rem + 1)

    @property
    def index(self) -> int:
        return 4 * self.year + (self.q - 1)

    @property
    def last_month(self) -> tuple[int, int]:
        """(year, month) of the quarter's final calendar month."""
        return self.year, 3 * self.q

    def __add__(self, k: int) -> "Quarter":
        if not isinstance(k, int):
            return NotImplemented
        return Quarter.from_index(self.index + k)

    def __sub__(self, other):
        if isinstance(other, Quarter):
            return self.index - other.index
        if isinstance(other, int):
            return Quarter.from_index(self.index - other)
        return NotImplemented

    def __str__(self) -> str:
        return f"{self.year}Q{self.q}"


def quarter_range(first: Quarter, last: Quarter) -> list[Quarter]:
    """All quarters from ``first`` through ``last`` inclusive."""
    if last < first:
        raise ValueError(f"empty quarter range {first}..{last}")
    return [Quarter.from_index(i) for i in range(first.index, last.index + 1)]
