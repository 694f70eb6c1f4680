from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Interval:
    """A confidence interval tagged with the method that produced it."""

    lo: float
    hi: float
    level: float
    method: str
    midpoint: float | None = None
    infinite: bool = False

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if self.lo > self.hi:
            raise ValueError(f"lower endpoint {self.lo} exceeds upper {self.hi}")
        if not self.infinite and not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("infinite endpoints are reserved for InfiniteWidth outcomes")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @classmethod
    def symmetric(cls, center: float, half_width: float, level: float, method: str) -> "Interval":
        return cls(center - half_width, center + half_width, level, method, midpoint=center)

    @classmethod
    def unbounded(cls, center: float, level: float, method: str) -> "Interval":
        return cls(-math.inf, math.inf, level, method, midpoint=center, infinite=True)
