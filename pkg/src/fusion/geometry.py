"""Pixel rectangles, viewports, and the 3x3 relative-location grid."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError


@dataclass(frozen=True)
class Rect:
    """Half-open pixel box [left, right) x [top, bottom)."""

    left: int
    top: int
    right: int
    bottom: int

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    @property
    def area(self) -> int:
        return max(0, self.width) * max(0, self.height)

    def center(self) -> tuple[float, float]:
        return ((self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0)

    def to_list(self) -> list[int]:
        return [self.left, self.top, self.right, self.bottom]

    @classmethod
    def from_list(cls, values) -> "Rect":
        if not isinstance(values, (list, tuple)) or len(values) != 4:
            raise ValidationError(f"bounds must be [left, top, right, bottom], got {values!r}")
        try:
            left, top, right, bottom = (int(v) for v in values)
        except (TypeError, ValueError):
            raise ValidationError(f"bounds must be integers, got {values!r}") from None
        return cls(left, top, right, bottom)


@dataclass(frozen=True)
class Viewport:
    width: int
    height: int

    def contains(self, rect: Rect) -> bool:
        return 0 <= rect.left < rect.right <= self.width and 0 <= rect.top < rect.bottom <= self.height


DEFAULT_VIEWPORT = Viewport(1200, 1920)


class RelativeLocation(str, Enum):
    """Screen region holding a component's center, one of a 3x3 grid."""

    TOP_LEFT = "top_left"
    TOP_CENTER = "top_center"
    TOP_RIGHT = "top_right"
    CENTER_LEFT = "center_left"
    CENTER = "center"
    CENTER_RIGHT = "center_right"
    BOTTOM_LEFT = "bottom_left"
    BOTTOM_CENTER = "bottom_center"
    BOTTOM_RIGHT = "bottom_right"

    @property
    def label(self) -> str:
        if self is RelativeLocation.CENTER:
            return "Center"
        return self.value.replace("_", " ").title()


def parse_relative_location(value: str) -> RelativeLocation:
    try:
        return RelativeLocation(value)
    except ValueError:
        raise ValidationError(f"unknown relative location {value!r}") from None


_GRID = (
    (RelativeLocation.TOP_LEFT, RelativeLocation.TOP_CENTER, RelativeLocation.TOP_RIGHT),
    (RelativeLocation.CENTER_LEFT, RelativeLocation.CENTER, RelativeLocation.CENTER_RIGHT),
    (RelativeLocation.BOTTOM_LEFT, RelativeLocation.BOTTOM_CENTER, RelativeLocation.BOTTOM_RIGHT),
)


def region_of(bounds: Rect, viewport: Viewport) -> RelativeLocation:
    """Map a component's center point onto the 3x3 viewport grid.

    Each axis is split into equal thirds; a center sitting exactly on a
    boundary belongs to the higher region, so the exact viewport center
    is Center.
    """
    if bounds.area == 0:
        raise ValidationError(f"zero-area bounds {bounds.to_list()}")
    if bounds.right <= 0 or bounds.left >= viewport.width or bounds.bottom <= 0 or bounds.top >= viewport.height:
        raise ValidationError(f"bounds {bounds.to_list()} do not intersect the viewport")
    cx, cy = bounds.center()
    col = _third(cx, viewport.width)
    row = _third(cy, viewport.height)
    return _GRID[row][col]


def _third(coord: float, extent: int) -> int:
    if coord < extent / 3.0:
        return 0
    if coord < 2.0 * extent / 3.0:
        return 1
    return 2
