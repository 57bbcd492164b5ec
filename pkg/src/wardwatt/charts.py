"""Static SVG line charts for the report bundle.

Pure functions of the data: no timestamps, no randomness, fixed float
formatting, so the same inputs always render byte-identical files.
"""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH = 860
HEIGHT = 340
MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 42
MARGIN_BOTTOM = 46
N_TICKS = 5


def _coord(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def line_chart(
    series: dict[str, np.ndarray],
    title: str,
    y_label: str = "kW",
    x_label: str = "hour",
) -> str:
    """Render labelled value arrays as one SVG line chart.

    All arrays share an implicit hourly x axis starting at 0; they may
    have different lengths. Colors follow insertion order.
    """
    if not series:
        raise ValueError("chart needs at least one series")
    arrays = {}
    for label, values in series.items():
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or len(arr) == 0 or not np.all(np.isfinite(arr)):
            raise ValueError(f"series {label!r} must be a finite nonempty 1-D array")
        arrays[str(label)] = arr

    x_max = max(len(a) for a in arrays.values()) - 1
    x_max = max(x_max, 1)
    lo = min(float(a.min()) for a in arrays.values())
    hi = max(float(a.max()) for a in arrays.values())
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    else:
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: float) -> float:
        return MARGIN_LEFT + plot_w * x / x_max

    def sy(y: float) -> float:
        return MARGIN_TOP + plot_h * (hi - y) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_LEFT}" y="24" font-size="15" fill="#222">{title}</text>',
    ]
    for tick in np.linspace(lo, hi, N_TICKS):
        y = sy(float(tick))
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_coord(y)}" x2="{WIDTH - MARGIN_RIGHT}" '
            f'y2="{_coord(y)}" stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_coord(y + 4)}" font-size="11" '
            f'fill="#555" text-anchor="end">{_tick_label(float(tick))}</text>'
        )
    for tick in np.linspace(0.0, x_max, N_TICKS):
        x = sx(float(tick))
        parts.append(
            f'<line x1="{_coord(x)}" y1="{MARGIN_TOP}" x2="{_coord(x)}" '
            f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="#eee" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_coord(x)}" y="{HEIGHT - MARGIN_BOTTOM + 16}" font-size="11" '
            f'fill="#555" text-anchor="middle">{_tick_label(float(tick))}</text>'
        )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" '
        f'x2="{WIDTH - MARGIN_RIGHT}" y2="{HEIGHT - MARGIN_BOTTOM}" '
        f'stroke="#444" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="#444" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) // 2}" y="{HEIGHT - 8}" '
        f'font-size="12" fill="#333" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="14" y="{(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) // 2}" font-size="12" '
        f'fill="#333" text-anchor="middle" '
        f'transform="rotate(-90 14 {(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) // 2})">{y_label}</text>'
    )

    legend_x = MARGIN_LEFT + 8
    for i, (label, arr) in enumerate(arrays.items()):
        color = PALETTE[i % len(PALETTE)]
        if len(arr) == 1:
            points = f"{_coord(sx(0))},{_coord(sy(float(arr[0])))} " \
                f"{_coord(sx(1))},{_coord(sy(float(arr[0])))}"
        else:
            points = " ".join(
                f"{_coord(sx(j))},{_coord(sy(float(v)))}" for j, v in enumerate(arr)
            )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        parts.append(
            f'<rect x="{legend_x}" y="{MARGIN_TOP + 4}" width="10" height="10" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{legend_x + 14}" y="{MARGIN_TOP + 13}" font-size="11" '
            f'fill="#333">{label}</text>'
        )
        legend_x += 24 + 7 * len(label)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_chart(svg: str, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(svg)
