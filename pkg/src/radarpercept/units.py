"""Unit and display utilities."""

import math
from dataclasses import dataclass, field
from typing import Union

from radarpercept.constants import DECIMAL_PLACES, FRAME_PERIOD_US


@dataclass(frozen=True)
class Percentage:
    """Count ratio with exact and rounded percentage renderings."""

    numerator: Union[int, float]
    denominator: Union[int, float]

    @property
    def ratio(self) -> float:
        """Get the ratio at full precision."""
        return self.numerator / self.denominator

    @property
    def percent(self) -> float:
        """Get the ratio as a percentage at full precision."""
        return self.ratio * 100

    @property
    def rounded(self) -> int:
        """Get the percentage rounded half-up to a whole number."""
        return int(math.floor(self.percent + 0.5))

    @property
    def fraction(self) -> str:
        """Get the ratio as a "numerator/denominator" string."""
        return f"{self.numerator:g}/{self.denominator:g}"

    def __str__(self) -> str:
        """Return the full-precision percentage followed by the rounded display figure."""
        return f"{self.percent:.6g}% ({self.rounded}%)"


@dataclass(frozen=True)
class Duration:
    """Elapsed time, stored in microseconds."""

    microseconds: float
    _decimal_places: int = field(default=DECIMAL_PLACES)

    @property
    def us(self) -> float:
        """Get duration in microseconds."""
        return round(self.microseconds, self._decimal_places)

    @property
    def ms(self) -> float:
        """Get duration in milliseconds."""
        return round(self.microseconds / 1000, self._decimal_places)

    @property
    def within_frame_period(self) -> bool:
        """Check if the duration fits inside one 15 Hz radar frame period."""
        return self.microseconds < FRAME_PERIOD_US

    @classmethod
    def from_seconds(cls, value: float, decimal_places: int = DECIMAL_PLACES) -> "Duration":
        """Create a Duration instance from a seconds value."""
        return cls(value * 1_000_000, decimal_places)

    def __str__(self) -> str:
        """Return a string representation of the duration."""
        if self.microseconds >= 1000:
            return f"{self.ms} ms"
        return f"{self.us} µs"
