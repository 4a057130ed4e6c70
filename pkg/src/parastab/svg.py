"""Minimal single-panel SVG line charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _bounds(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_chart(series, xlabel: str, ylabel: str, title: str = "") -> str:
    """Render ``series``, a list of ``(label, xs, ys)``, as an SVG document.

    Non-finite y values break the polyline so solver gaps stay visible.
    """
    xlo, xhi = _bounds([x for _, xs, _ in series for x in xs])
    ylo, yhi = _bounds([y for _, _, ys in series for y in ys])
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - ylo) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 18}" text-anchor="start">{xlo:.4g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 18}" text-anchor="end">{xhi:.4g}</text>',
        f'<text x="{MARGIN - 5}" y="{HEIGHT - MARGIN}" text-anchor="end">{ylo:.4g}</text>',
        f'<text x="{MARGIN - 5}" y="{MARGIN + 10}" text-anchor="end">{yhi:.4g}</text>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="30" text-anchor="middle">{escape(title)}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        colour = PALETTE[idx % len(PALETTE)]
        segment = []
        for x, y in list(zip(xs, ys)) + [(math.nan, math.nan)]:
            if math.isfinite(y):
                segment.append(f"{px(x):.2f},{py(y):.2f}")
                continue
            if segment:
                out.append(
                    f'<polyline fill="none" stroke="{colour}" points="{" ".join(segment)}"/>'
                )
            segment = []
        ly = MARGIN + 15 + 15 * idx
        out.append(
            f'<text x="{WIDTH - MARGIN - 5}" y="{ly}" text-anchor="end" fill="{colour}">'
            f"{escape(str(label))}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
