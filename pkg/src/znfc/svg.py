"""Tiny SVG writers for line plots and heatmaps (no plotting backend needed)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
ML, MR, MT, MB = 60, 20, 30, 45
PALETTE = ("#1f3b73", "#d9534f", "#2a9d8f", "#e9a23b")


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) * (b - a) / (hi - lo)


def _axes(x0, x1, y0, y1, title, xlabel, ylabel):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" '
        'fill="none" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        px = _scale(xv, x0, x1, ML, W - MR)
        parts.append(f'<text x="{px:.1f}" y="{H - MB + 15}" text-anchor="middle">{xv:.3g}</text>')
        yv = y0 + (y1 - y0) * k / 4
        py = _scale(yv, y0, y1, H - MB, MT)
        parts.append(f'<text x="{ML - 5}" y="{py + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{W / 2:.1f}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {H / 2:.1f})">{escape(ylabel)}</text>')
    return parts


def line_plot(x, series: dict, title="", xlabel="", ylabel="") -> str:
    """``series`` maps a legend label to y values sampled on ``x``."""
    x = np.asarray(x, float)
    ys = [np.asarray(v, float) for v in series.values()]
    y0 = min(float(np.nanmin(y)) for y in ys)
    y1 = max(float(np.nanmax(y)) for y in ys)
    parts = _axes(x[0], x[-1], y0, y1, title, xlabel, ylabel)
    # thin dense series so files stay small
    step = max(1, x.size // 1500)
    for k, (label, y) in enumerate(zip(series, ys)):
        pts = " ".join(
            f"{_scale(a, x[0], x[-1], ML, W - MR):.2f},{_scale(b, y0, y1, H - MB, MT):.2f}"
            for a, b in zip(x[::step], y[::step])
        )
        color = PALETTE[k % len(PALETTE)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{W - MR - 5}" y="{MT + 15 + 14 * k}" text-anchor="end" '
                     f'fill="{color}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _color(v):
    # white -> navy ramp
    v = min(max(v, 0.0), 1.0)
    r = int(255 - v * (255 - 31))
    g = int(255 - v * (255 - 59))
    b = int(255 - v * (255 - 115))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(x, y, z, title="", xlabel="", ylabel="") -> str:
    """``z`` has shape (len(y), len(x)); NaN cells are drawn grey."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    parts = _axes(x[0], x[-1], y[0], y[-1], title, xlabel, ylabel)
    zmin, zmax = np.nanmin(z), np.nanmax(z)
    cw = (W - ML - MR) / len(x)
    ch = (H - MT - MB) / len(y)
    for i in range(len(y)):
        for j in range(len(x)):
            v = z[i, j]
            fill = "#bbbbbb" if not np.isfinite(v) else _color(
                0.0 if zmax == zmin else (v - zmin) / (zmax - zmin))
            parts.append(f'<rect x="{ML + j * cw:.2f}" y="{H - MB - (i + 1) * ch:.2f}" '
                         f'width="{cw + 0.1:.2f}" height="{ch + 0.1:.2f}" fill="{fill}"/>')
    parts.append(f'<text x="{W - MR}" y="{MT - 8}" text-anchor="end">'
                 f'max {zmax:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
