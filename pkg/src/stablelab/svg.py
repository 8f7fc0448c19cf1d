"""Minimal static SVG plots: scatter points plus an optional fitted line.

Hand-rolled on purpose so report plots need no plotting stack at runtime.
Only the two shapes the experiments use are supported: linear scatter and
log-log scatter with a power-law fit line.
"""

from __future__ import annotations

import math

WIDTH = 640
HEIGHT = 440
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 40
MARGIN_B = 55


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _tick_values(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def scatter_plot(path, xs, ys, title: str, xlabel: str, ylabel: str,
                 fit=None, loglog: bool = False) -> None:
    """Write an SVG scatter of (xs, ys); fit = (slope, intercept) draws a
    line in the plotting coordinates (log10 coordinates when loglog)."""
    if len(xs) != len(ys) or not xs:
        raise ValueError("need matching nonempty xs and ys")
    if loglog:
        px = [math.log10(v) for v in xs]
        py = [math.log10(v) for v in ys]
    else:
        px = list(map(float, xs))
        py = list(map(float, ys))
    x_lo, x_hi = min(px), max(px)
    y_lo, y_hi = min(py), max(py)
    x_pad = 0.08 * (x_hi - x_lo or 1.0)
    y_pad = 0.12 * (y_hi - y_lo or 1.0)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>')
    for v in _tick_values(x_lo, x_hi):
        x = sx(v)
        label = _fmt(10 ** v) if loglog else _fmt(v)
        parts.append(f'<line x1="{x:.1f}" y1="{MARGIN_T + plot_h}" '
                     f'x2="{x:.1f}" y2="{MARGIN_T + plot_h + 5}" '
                     f'stroke="#444"/>')
        parts.append(f'<text x="{x:.1f}" y="{MARGIN_T + plot_h + 20}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    for v in _tick_values(y_lo, y_hi):
        y = sy(v)
        label = _fmt(10 ** v) if loglog else _fmt(v)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" '
                     f'x2="{MARGIN_L}" y2="{y:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    parts.append(f'<text x="{MARGIN_L + plot_w / 2}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{MARGIN_T + plot_h / 2}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" transform="rotate(-90 18 '
                 f'{MARGIN_T + plot_h / 2})">{ylabel}</text>')
    if fit is not None:
        slope, intercept = fit
        # clip the fit line to the padded data range
        y1 = slope * x_lo + intercept
        y2 = slope * x_hi + intercept
        parts.append(f'<line x1="{sx(x_lo):.1f}" y1="{sy(y1):.1f}" '
                     f'x2="{sx(x_hi):.1f}" y2="{sy(y2):.1f}" '
                     f'stroke="#c0392b" stroke-width="1.5" '
                     f'stroke-dasharray="6 3"/>')
    for vx, vy in zip(px, py):
        parts.append(f'<circle cx="{sx(vx):.1f}" cy="{sy(vy):.1f}" r="4" '
                     f'fill="#2471a3" fill-opacity="0.85"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
