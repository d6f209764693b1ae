"""Minimal native SVG output for the two report plots.

Hand-rolled markup keeps emission byte-deterministic: fixed canvas sizes,
fixed decimal formatting, and a fixed categorical palette assigned by label
position.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def color_for(index: int) -> str:
    return PALETTE[index % len(PALETTE)]


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_esc(title)}</text>',
    ]


def bar_chart_svg(values: dict, title: str, y_label: str = "") -> str:
    """Vertical bars, one per key; None values render as 'n/a'."""
    if not values:
        raise ValueError("no values to plot")
    width, height = 640, 420
    left, right, top, bottom = 70, 20, 50, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    defined = [v for v in values.values() if v is not None]
    vmax = max(defined) if defined else 1.0
    vmax = vmax if vmax > 0 else 1.0

    parts = _header(width, height, title)
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" '
                 f'y2="{top + plot_h}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top + plot_h}" '
                 f'x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>')
    if y_label:
        parts.append(f'<text x="18" y="{top + plot_h // 2}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 18 {top + plot_h // 2})">'
                     f'{_esc(y_label)}</text>')
    for k in range(5):
        val = vmax * k / 4.0
        y = top + plot_h - plot_h * k / 4.0
        parts.append(f'<line x1="{left - 4}" y1="{_fmt(y)}" x2="{left}" '
                     f'y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{_fmt(val)}</text>')

    n = len(values)
    slot = plot_w / n
    bar_w = slot * 0.6
    for i, (label, value) in enumerate(values.items()):
        x = left + slot * i + (slot - bar_w) / 2.0
        if value is None:
            parts.append(f'<text x="{_fmt(x + bar_w / 2)}" '
                         f'y="{top + plot_h - 8}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">n/a</text>')
        else:
            h = plot_h * value / vmax
            parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(top + plot_h - h)}" '
                         f'width="{_fmt(bar_w)}" height="{_fmt(h)}" '
                         f'fill="{color_for(i)}"/>')
            parts.append(f'<text x="{_fmt(x + bar_w / 2)}" '
                         f'y="{_fmt(top + plot_h - h - 5)}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{_fmt(value)}</text>')
        parts.append(f'<text x="{_fmt(x + bar_w / 2)}" y="{top + plot_h + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="12">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(points, labels: Sequence, title: str,
                label_order: Optional[Sequence] = None) -> str:
    """2D scatter colored by label, with a legend."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be an n x 2 array")
    if points.shape[0] != len(labels):
        raise ValueError("one label per point required")
    if points.shape[0] == 0:
        raise ValueError("no points to plot")
    order = list(label_order) if label_order is not None else sorted(set(labels))
    color = {lab: color_for(i) for i, lab in enumerate(order)}

    width, height = 640, 480
    left, right, top, bottom = 50, 150, 50, 30
    plot_w = width - left - right
    plot_h = height - top - bottom
    mins = points.min(axis=0)
    spans = points.max(axis=0) - mins
    spans[spans == 0] = 1.0

    parts = _header(width, height, title)
    parts.append(f'<rect x="{left}" y="{top}" width="{plot_w}" '
                 f'height="{plot_h}" fill="none" stroke="black"/>')
    for p, lab in zip(points, labels):
        x = left + (p[0] - mins[0]) / spans[0] * plot_w
        y = top + plot_h - (p[1] - mins[1]) / spans[1] * plot_h
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" '
                     f'fill="{color[lab]}" fill-opacity="0.7"/>')
    for i, lab in enumerate(order):
        ly = top + 16 + i * 20
        lx = left + plot_w + 16
        parts.append(f'<circle cx="{lx}" cy="{ly - 4}" r="5" fill="{color[lab]}"/>')
        parts.append(f'<text x="{lx + 12}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{_esc(lab)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
