"""Deterministic synthetic screen rendering.

Screens render as flat rectangles with text labels so identical device state
always yields byte-identical PNG blobs. These images identify GUI states and
confirm component choices; they are not pixel-faithful device captures.
"""

from __future__ import annotations

import hashlib
import io

from PIL import Image, ImageDraw, ImageFont

from .geometry import Rect, Viewport

BACKGROUND = (244, 244, 247)
BORDER = (70, 70, 80)
TEXT_COLOR = (20, 20, 25)
HIGHLIGHT = (230, 46, 46)
HIGHLIGHT_WIDTH = 5

_FONT = ImageFont.load_default()


def component_fill(component_id: str) -> tuple[int, int, int]:
    # stable pastel derived from the id so distinct widgets look distinct
    digest = hashlib.sha256(component_id.encode("utf-8")).digest()
    return tuple(160 + (b % 80) for b in digest[:3])


def render_screen(components, viewport: Viewport, title: str = "") -> Image.Image:
    """Draw every component of a screen; components are (id, text, bounds)."""
    image = Image.new("RGB", (viewport.width, viewport.height), BACKGROUND)
    draw = ImageDraw.Draw(image)
    if title:
        draw.text((8, 2), title, fill=TEXT_COLOR, font=_FONT)
    for component_id, text, bounds in components:
        box = (bounds.left, bounds.top, bounds.right - 1, bounds.bottom - 1)
        draw.rectangle(box, fill=component_fill(component_id), outline=BORDER, width=2)
        label = text or component_id
        draw.text((bounds.left + 6, bounds.top + 4), label, fill=TEXT_COLOR, font=_FONT)
    return image


def highlight(image: Image.Image, bounds: Rect) -> Image.Image:
    """Copy of a screen render with a marker drawn at the component bounds.

    The marker stays inside the bounds rectangle so the highlighted render
    differs from the base render only at pixels the component occupies.
    """
    marked = image.copy()
    draw = ImageDraw.Draw(marked)
    box = (bounds.left, bounds.top, bounds.right - 1, bounds.bottom - 1)
    draw.rectangle(box, outline=HIGHLIGHT, width=HIGHLIGHT_WIDTH)
    return marked


def crop(image: Image.Image, bounds: Rect) -> Image.Image:
    return image.crop((bounds.left, bounds.top, bounds.right, bounds.bottom))


def render_marker(label: str, viewport: Viewport) -> Image.Image:
    """Placeholder image for states outside the app (home screen, other apps)."""
    image = Image.new("RGB", (viewport.width, viewport.height), (30, 30, 34))
    draw = ImageDraw.Draw(image)
    draw.text((viewport.width // 2 - 4 * len(label), viewport.height // 2), label,
              fill=(235, 235, 235), font=_FONT)
    return image


def encode_png(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG", compress_level=1)
    return buffer.getvalue()
