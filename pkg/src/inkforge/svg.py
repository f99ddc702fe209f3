"""SVG stroke visualization.

Strokes cycle through the ROYGBIV rainbow by stroke index and shade from
dark to light along each stroke, so stroke order and direction are
readable at a glance. Output is deterministic.
"""

from __future__ import annotations

import base64
import colorsys
import io
from typing import Sequence

from PIL import Image

from .ink import DigitalInk
from .raster import RasterImage

_HUES = (0.0, 30.0, 60.0, 120.0, 210.0, 240.0, 275.0)  # ROYGBIV, degrees


def _color(hue_deg: float, lightness: float) -> str:
    r, g, b = colorsys.hls_to_rgb(hue_deg / 360.0, lightness, 0.9)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _hue_indices(n_strokes: int, groups: Sequence[int] | None) -> list[int]:
    # rainbow order restarts at each group (one group per word)
    if not groups:
        return list(range(n_strokes))
    out = []
    for size in groups:
        out.extend(range(size))
    out.extend(range(n_strokes - len(out)))  # strokes beyond the groups
    return out[:n_strokes]


def ink_to_svg(
    ink: DigitalInk,
    width: float,
    height: float,
    stroke_width: float = 2.0,
    background: RasterImage | None = None,
    groups: Sequence[int] | None = None,
) -> str:
    """Render an ink as an SVG document; optionally over an embedded image.

    ``groups`` gives per-word stroke counts so the rainbow ordering
    restarts at each word.
    """
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
    ]
    if background is not None:
        buf = io.BytesIO()
        Image.fromarray(background.pixels).save(buf, format="PNG")
        data = base64.b64encode(buf.getvalue()).decode("ascii")
        out.append(
            f'  <image href="data:image/png;base64,{data}" x="0" y="0" '
            f'width="{background.width}" height="{background.height}" opacity="0.35"/>'
        )
    hue_idx = _hue_indices(len(ink.strokes), groups)
    for si, stroke in enumerate(ink.strokes):
        hue = _HUES[hue_idx[si] % len(_HUES)]
        pts = stroke.xy
        if len(pts) == 1:
            out.append(
                f'  <circle cx="{_fmt(pts[0, 0])}" cy="{_fmt(pts[0, 1])}" '
                f'r="{_fmt(stroke_width / 2)}" fill="{_color(hue, 0.35)}"/>'
            )
            continue
        nseg = len(pts) - 1
        for k in range(nseg):
            lightness = 0.25 + 0.45 * (k / max(nseg - 1, 1))
            out.append(
                f'  <path d="M {_fmt(pts[k, 0])} {_fmt(pts[k, 1])} '
                f'L {_fmt(pts[k + 1, 0])} {_fmt(pts[k + 1, 1])}" '
                f'stroke="{_color(hue, lightness)}" stroke-width="{_fmt(stroke_width)}" '
                'stroke-linecap="round" fill="none"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
