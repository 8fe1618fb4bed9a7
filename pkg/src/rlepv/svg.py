"""Deterministic SVG figures: pitch heatmaps of zone values and z-score grids.

Output depends only on the input values; coordinates and colours are
formatted with fixed precision so identical input gives identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import MissingGeometry

# ColorBrewer YlOrRd, light (low) to dark (high)
SEQUENTIAL = ("#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c", "#fc4e2a", "#e31a1c", "#b10026")
# ColorBrewer RdBu reversed, blue (low) to red (high)
DIVERGING = ("#2166ac", "#67a9cf", "#d1e5f0", "#f7f7f7", "#fddbc7", "#ef8a62", "#b2182b")
NO_DATA = "#d9d9d9"

SCALE = 6.0  # px per metre
MARGIN = 20.0
PITCH_LINES = ((0, "try line"), (20, "20m"), (50, "50m"), (80, "20m"), (100, "try line"))


def _hex(rgb) -> str:
    return "#" + "".join(f"{int(round(c)):02x}" for c in rgb)


def _rgb(color: str) -> np.ndarray:
    return np.array([int(color[i:i + 2], 16) for i in (1, 3, 5)], dtype=float)


def color_at(f: float, palette=SEQUENTIAL) -> str:
    """Colour at fraction ``f`` in [0, 1] along a piecewise-linear palette."""
    f = min(max(f, 0.0), 1.0)
    pos = f * (len(palette) - 1)
    i = min(int(math.floor(pos)), len(palette) - 2)
    w = pos - i
    return _hex((1 - w) * _rgb(palette[i]) + w * _rgb(palette[i + 1]))


def value_colors(values, lo: float | None = None, hi: float | None = None, palette=SEQUENTIAL) -> list[str]:
    """Map values onto the palette over [lo, hi] (default: data min and max).

    ``None``/``nan`` values get the no-data grey; a constant input maps to
    the low end.
    """
    arr = np.array([np.nan if v is None else float(v) for v in values])
    finite = arr[np.isfinite(arr)]
    if lo is None:
        lo = float(finite.min()) if finite.size else 0.0
    if hi is None:
        hi = float(finite.max()) if finite.size else 1.0
    span = hi - lo
    return [
        NO_DATA if not math.isfinite(v) else color_at((v - lo) / span if span > 0 else 0.0, palette)
        for v in arr
    ]


def _f(v: float) -> str:
    return f"{v:.2f}"


def pitch_heatmap(model_doc: dict, title: str | None = None) -> str:
    """SVG of a model document (``EPVModel.to_dict()`` layout).

    Each zone rectangle is filled by its EPV on a sequential scale; the try
    lines, 20m lines and halfway line are overlaid.
    """
    zones = model_doc.get("zones")
    if not zones or any(not z.get("bounds") for z in zones):
        raise MissingGeometry("model has no zone geometry to draw")
    zones = sorted(zones, key=lambda z: z["id"])
    values = [z.get("epv") for z in zones]
    colors = value_colors(values)
    finite = [v for v in values if v is not None]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 0.0)
    labelled = model_doc.get("system", {}).get("kind") == "aggregated"

    width = 68 * SCALE + 2 * MARGIN + 90
    height = 120 * SCALE + 2 * MARGIN + 30
    px = lambda x: MARGIN + x * SCALE  # noqa: E731
    py = lambda y: MARGIN + 30 + (110 - y) * SCALE  # noqa: E731

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{_f(MARGIN)}" y="{_f(MARGIN + 10)}" font-size="14">{escape(title)}</text>')
    out.append(
        f'<rect x="{_f(px(0))}" y="{_f(py(110))}" width="{_f(68 * SCALE)}" height="{_f(120 * SCALE)}" '
        'fill="#f4f4f4" stroke="#000000" stroke-width="1"/>'
    )
    out.append('<g id="zones" stroke="#ffffff" stroke-width="0.5">')
    for z, color in zip(zones, colors):
        epv = z.get("epv")
        tip = f'zone {z["id"]}: ' + ("no data" if epv is None else f"{epv:.4f}")
        for x0, x1, y0, y1 in z["bounds"]:
            out.append(
                f'<rect x="{_f(px(x0))}" y="{_f(py(y1))}" width="{_f((x1 - x0) * SCALE)}" '
                f'height="{_f((y1 - y0) * SCALE)}" fill="{color}"><title>{escape(tip)}</title></rect>'
            )
    out.append("</g>")
    out.append('<g id="lines" stroke="#000000">')
    for y, _name in PITCH_LINES:
        dash = "" if y in (0, 100) else ' stroke-dasharray="6,4"'
        sw = "2" if y in (0, 100) else "1"
        out.append(f'<line x1="{_f(px(0))}" y1="{_f(py(y))}" x2="{_f(px(68))}" y2="{_f(py(y))}" stroke-width="{sw}"{dash}/>')
    out.append("</g>")
    if labelled:
        out.append('<g id="labels" font-size="11" text-anchor="middle">')
        for z in zones:
            x0, x1, y0, y1 = max(z["bounds"], key=lambda r: ((r[1] - r[0]) * (r[3] - r[2]), -r[0]))
            out.append(f'<text x="{_f(px((x0 + x1) / 2))}" y="{_f(py((y0 + y1) / 2) + 4)}">{z["id"]}</text>')
        out.append("</g>")
    # colour bar
    bx, by, bh = px(68) + 20, py(100), 100 * SCALE
    n = 50
    out.append('<g id="colorbar">')
    for i in range(n):
        f0 = i / n
        out.append(
            f'<rect x="{_f(bx)}" y="{_f(by + bh * (1 - (i + 1) / n))}" width="16" height="{_f(bh / n)}" '
            f'fill="{color_at(f0 + 0.5 / n)}" stroke="none"/>'
        )
    out.append(f'<text x="{_f(bx + 20)}" y="{_f(by + 4)}" font-size="11">{hi:.3f}</text>')
    out.append(f'<text x="{_f(bx + 20)}" y="{_f(by + bh + 4)}" font-size="11">{lo:.3f}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def zscore_heatmap(teams, zone_ids, z: np.ndarray, title: str | None = None, limit: float = 3.0) -> str:
    """Team-by-zone grid of z-scores on a diverging scale clipped to +/- ``limit``."""
    cell_w, cell_h = 34.0, 22.0
    left, top = 60.0, 40.0
    width = left + cell_w * len(zone_ids) + MARGIN
    height = top + cell_h * len(teams) + MARGIN
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}" font-family="sans-serif" font-size="10">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{_f(left)}" y="14" font-size="13">{escape(title)}</text>')
    for j, s in enumerate(zone_ids):
        out.append(f'<text x="{_f(left + cell_w * (j + 0.5))}" y="{_f(top - 6)}" text-anchor="middle">{s}</text>')
    for i, team in enumerate(teams):
        y = top + cell_h * i
        out.append(f'<text x="{_f(left - 6)}" y="{_f(y + cell_h / 2 + 3)}" text-anchor="end">{escape(str(team))}</text>')
        for j in range(len(zone_ids)):
            v = float(z[i, j])
            color = color_at((v + limit) / (2 * limit), DIVERGING)
            x = left + cell_w * j
            out.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cell_w)}" height="{_f(cell_h)}" '
                f'fill="{color}" stroke="#ffffff"/>'
            )
            out.append(f'<text x="{_f(x + cell_w / 2)}" y="{_f(y + cell_h / 2 + 3)}" text-anchor="middle">{v:.1f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
