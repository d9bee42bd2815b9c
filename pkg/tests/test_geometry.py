from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fusion.errors import ValidationError
from fusion.geometry import DEFAULT_VIEWPORT, Rect, RelativeLocation, Viewport, region_of

# one canonical rectangle per grid region on the default 1200x1920 viewport
CANONICAL = [
    (Rect(0, 0, 100, 100), RelativeLocation.TOP_LEFT),
    (Rect(550, 0, 650, 100), RelativeLocation.TOP_CENTER),
    (Rect(1100, 0, 1200, 100), RelativeLocation.TOP_RIGHT),
    (Rect(0, 910, 100, 1010), RelativeLocation.CENTER_LEFT),
    (Rect(550, 910, 650, 1010), RelativeLocation.CENTER),
    (Rect(1100, 910, 1200, 1010), RelativeLocation.CENTER_RIGHT),
    (Rect(0, 1820, 100, 1920), RelativeLocation.BOTTOM_LEFT),
    (Rect(550, 1820, 650, 1920), RelativeLocation.BOTTOM_CENTER),
    (Rect(1100, 1820, 1200, 1920), RelativeLocation.BOTTOM_RIGHT),
]


def oracle_region(bounds: Rect, viewport: Viewport) -> tuple[int, int]:
    """Exact-arithmetic thirds, independent of the implementation."""

    def third(center: Fraction, extent: int) -> int:
        if center < Fraction(extent, 3):
            return 0
        if center < Fraction(2 * extent, 3):
            return 1
        return 2

    cx = Fraction(bounds.left + bounds.right, 2)
    cy = Fraction(bounds.top + bounds.bottom, 2)
    return third(cy, viewport.height), third(cx, viewport.width)


GRID = [
    [RelativeLocation.TOP_LEFT, RelativeLocation.TOP_CENTER, RelativeLocation.TOP_RIGHT],
    [RelativeLocation.CENTER_LEFT, RelativeLocation.CENTER, RelativeLocation.CENTER_RIGHT],
    [RelativeLocation.BOTTOM_LEFT, RelativeLocation.BOTTOM_CENTER, RelativeLocation.BOTTOM_RIGHT],
]


@pytest.mark.parametrize("bounds,expected", CANONICAL)
def test_canonical_regions(bounds, expected):
    assert region_of(bounds, DEFAULT_VIEWPORT) is expected


def test_exact_center_is_center():
    assert region_of(Rect(500, 860, 700, 1060), DEFAULT_VIEWPORT) is RelativeLocation.CENTER


def test_top_left_example():
    assert region_of(Rect(0, 0, 100, 100), DEFAULT_VIEWPORT) is RelativeLocation.TOP_LEFT


def test_zero_area_rejected():
    with pytest.raises(ValidationError):
        region_of(Rect(10, 10, 10, 50), DEFAULT_VIEWPORT)


def test_disjoint_bounds_rejected():
    with pytest.raises(ValidationError):
        region_of(Rect(1300, 0, 1400, 100), DEFAULT_VIEWPORT)


def test_labels():
    assert RelativeLocation.CENTER.label == "Center"
    assert RelativeLocation.TOP_CENTER.label == "Top Center"
    assert RelativeLocation.BOTTOM_RIGHT.label == "Bottom Right"


@given(
    left=st.integers(0, 1199),
    top=st.integers(0, 1919),
    width=st.integers(1, 400),
    height=st.integers(1, 400),
)
def test_region_matches_exact_oracle(left, top, width, height):
    bounds = Rect(left, top, min(left + width, 1200), min(top + height, 1920))
    row, col = oracle_region(bounds, DEFAULT_VIEWPORT)
    assert region_of(bounds, DEFAULT_VIEWPORT) is GRID[row][col]


def test_rect_round_trip():
    rect = Rect(1, 2, 3, 4)
    assert Rect.from_list(rect.to_list()) == rect
    with pytest.raises(ValidationError):
        Rect.from_list([1, 2, 3])
