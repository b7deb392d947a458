"""Minimal static SVG line and scatter plots."""
from __future__ import annotations

from html import escape

import numpy as np

WIDTH, HEIGHT = 480, 400
MARGIN = 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def render(series, title="", xlabel="x", ylabel="y", hlines=()) -> str:
    """Render series as an SVG document.

    Parameters
    ----------
    series : list of dict
        Each has ``xy`` (an ``(k, 2)`` array), ``kind`` (``"line"`` or
        ``"points"``), and optional ``color``, ``label`` and ``dash``.
    hlines : sequence of (y, color)
        Horizontal reference lines.
    """
    allxy = np.vstack([np.asarray(s["xy"], dtype=float).reshape(-1, 2) for s in series])
    ys = np.concatenate([allxy[:, 1], [h[0] for h in hlines]]) if hlines else allxy[:, 1]
    x0, x1 = float(allxy[:, 0].min()), float(allxy[:, 0].max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (np.asarray(x) - x0) / (x1 - x0) * pw

    def sy(y):
        return HEIGHT - MARGIN - (np.asarray(y) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(sx(t))}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle" font-size="10">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN - 5}" y="{_fmt(sy(t) + 3)}" text-anchor="end" font-size="10">{t:.3g}</text>')
    for y, color in hlines:
        out.append(
            f'<line x1="{MARGIN}" y1="{_fmt(sy(y))}" x2="{WIDTH - MARGIN}" y2="{_fmt(sy(y))}" stroke="{color}"/>'
        )
    for i, s in enumerate(series):
        xy = np.asarray(s["xy"], dtype=float).reshape(-1, 2)
        color = s.get("color", "black")
        if s.get("kind", "line") == "points":
            for a, b in zip(sx(xy[:, 0]), sy(xy[:, 1])):
                out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="1" fill="{color}" fill-opacity="0.4"/>')
        else:
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(sx(xy[:, 0]), sy(xy[:, 1])))
            dash = ' stroke-dasharray="4 3"' if s.get("dash") else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        if s.get("label"):
            out.append(
                f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * i}" text-anchor="end" font-size="10" '
                f'fill="{color}">{escape(s["label"])}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
