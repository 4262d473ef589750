"""Minimal static SVG line charts for result eyeballing.

Hand-rolled SVG 1.1: axes, a light grid, up to two polyline series, and a
small legend. Plots are derived views only; they never feed back into the
CSV data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN_L = 64
MARGIN_R = 16
MARGIN_T = 28
MARGIN_B = 46
COLORS = ("#1f77b4", "#d62728")


def _ticks(lo: float, hi: float, n: int = 6) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_line_svg(x, series, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Render up to two (label, y-values) series against a shared x axis."""
    if len(series) == 0 or len(series) > 2:
        raise ValueError("render_line_svg draws one or two series")
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for _, y in series]
    for y in ys:
        if y.shape != x.shape:
            raise ValueError("series length must match x")

    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo = min(float(y.min()) for y in ys)
    y_hi = max(float(y.max()) for y in ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(v: float) -> float:
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{title}</text>')

    for tx in _ticks(x_lo, x_hi):
        gx = px(tx)
        out.append(f'<line x1="{gx:.1f}" y1="{MARGIN_T}" x2="{gx:.1f}" '
                   f'y2="{MARGIN_T + plot_h}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{gx:.1f}" y="{MARGIN_T + plot_h + 16}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                   f'{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        gy = py(ty)
        out.append(f'<line x1="{MARGIN_L}" y1="{gy:.1f}" x2="{MARGIN_L + plot_w}" '
                   f'y2="{gy:.1f}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{gy + 4:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>')

    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#333333"/>')

    for (label, _), y, color in zip(series, ys, COLORS):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
    for i, ((label, _), color) in enumerate(zip(series, COLORS)):
        ly = MARGIN_T + 14 + 16 * i
        lx = MARGIN_L + plot_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                   f'font-size="12">{label}</text>')

    if xlabel:
        out.append(f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 10}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="12">'
                   f'{xlabel}</text>')
    if ylabel:
        cy = MARGIN_T + plot_h / 2
        out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 16 {cy:.1f})">{ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(path: str | Path, svg_text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg_text)
    return path
