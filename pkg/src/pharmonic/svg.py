"""Minimal self-contained SVG line plots (no external assets)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

W, H, PAD = 480, 360, 48


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _axis_map(lo, hi, a, b, log=False):
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
    if hi == lo:
        hi = lo + 1.0

    def f(v):
        v = math.log10(v) if log else v
        return a + (v - lo) / (hi - lo) * (b - a)

    return f


def line_plot(series, title="", xlabel="", ylabel="", logx=False, logy=False) -> str:
    """``series`` is a list of ``(label, xs, ys)``."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    if logy:
        ys = ys[ys > 0]
    if logx:
        xs = xs[xs > 0]
    fx = _axis_map(xs.min(), xs.max(), PAD, W - PAD / 2, logx)
    fy = _axis_map(ys.min(), ys.max(), H - PAD, PAD / 2, logy)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD / 2}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{PAD}" y2="{PAD / 2}" stroke="black"/>',
        f'<text x="{W / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
        f'<text x="12" y="{H / 2}" font-size="11" transform="rotate(-90 12 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{PAD}" y="{H - PAD + 14}" font-size="10">{_fmt(xs.min())}</text>',
        f'<text x="{W - PAD / 2}" y="{H - PAD + 14}" font-size="10" text-anchor="end">{_fmt(xs.max())}</text>',
        f'<text x="{PAD - 4}" y="{H - PAD}" font-size="10" text-anchor="end">{_fmt(ys.min())}</text>',
        f'<text x="{PAD - 4}" y="{PAD / 2 + 8}" font-size="10" text-anchor="end">{_fmt(ys.max())}</text>',
    ]
    for k, (label, sx, sy) in enumerate(series):
        pts = [
            f"{fx(x):.2f},{fy(y):.2f}"
            for x, y in zip(np.asarray(sx, float), np.asarray(sy, float))
            if (not logx or x > 0) and (not logy or y > 0)
        ]
        col = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        out.append(f'<text x="{W - PAD}" y="{PAD / 2 + 14 * (k + 1)}" font-size="10" fill="{col}" text-anchor="end">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polar_plot(theta, density, title="") -> str:
    """Density drawn as the closed curve ``r = density(theta)``."""
    theta = np.asarray(theta, float)
    r = np.asarray(density, float)
    rmax = float(r.max()) or 1.0
    cx, cy, R = W / 2, H / 2 + 8, min(W, H) / 2 - PAD / 2
    x = cx + R * r / rmax * np.cos(theta)
    y = cy - R * r / rmax * np.sin(theta)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">\n'
        f'<rect width="{W}" height="{H}" fill="white"/>\n'
        f'<circle cx="{cx}" cy="{cy}" r="{R}" fill="none" stroke="#bbb"/>\n'
        f'<text x="{W / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>\n'
        f'<text x="{cx + R}" y="{cy + 12}" font-size="10" text-anchor="end">max {_fmt(rmax)}</text>\n'
        f'<polygon fill="none" stroke="#1f77b4" stroke-width="1.5" points="{pts}"/>\n'
        "</svg>\n"
    )
