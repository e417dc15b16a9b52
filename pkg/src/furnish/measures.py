"""Archive measures: total furniture price and piece count, plus binning."""

from __future__ import annotations

from dataclasses import dataclass

from .palette import CategoryPalette
from .repair import Arrangement


@dataclass(frozen=True)
class MeasureValue:
    total_price: float
    furniture_count: int


@dataclass(frozen=True)
class ArchiveConfig:
    """Tessellation of measure space.

    Prices partition [0, price_max] into ``price_bins`` equal intervals
    (the last one closed); counts bin one-per-integer up to
    ``count_max``.  Out-of-range values clamp to the edge bins.
    """

    price_max: float = 20000.0
    price_bins: int = 20
    count_max: int = 20

    def __post_init__(self):
        if self.price_max <= 0 or self.price_bins < 1 or self.count_max < 1:
            raise ValueError("archive config fields must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.price_bins, self.count_max + 1


def compute_measures(arrangement: Arrangement, palette: CategoryPalette) -> MeasureValue:
    """Sum unit prices over placements and count the pieces."""
    total = 0.0
    for placement in arrangement.placements:
        if not 0 <= placement.category_id < len(palette):
            raise ValueError(f"unknown category id {placement.category_id}")
        total += palette.categories[placement.category_id].unit_price
    return MeasureValue(total_price=total, furniture_count=len(arrangement.placements))


def bin_measures(value: MeasureValue, config: ArchiveConfig) -> tuple[int, int]:
    """Map measures to (price_index, count_index) archive coordinates."""
    if value.total_price < 0:
        raise ValueError("total_price must be nonnegative")
    price_index = int(value.total_price / (config.price_max / config.price_bins))
    price_index = min(price_index, config.price_bins - 1)
    count_index = min(value.furniture_count, config.count_max)
    return price_index, count_index
