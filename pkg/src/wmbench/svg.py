"""Minimal deterministic SVG line plots.

Output depends only on the data (fixed float formatting, no timestamps or
random ids), so identical inputs give byte-identical files.
"""
from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_plot(
    series: dict[str, tuple[list[float], list[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logy: bool = False,
    xticklabels: list[str] | None = None,
    ylim: tuple[float, float] | None = None,
) -> str:
    """Render ``{label: (xs, ys)}`` as an SVG document string.

    Non-finite points (and non-positive ones when ``logy``) are skipped.
    """

    def ty(v):
        return math.log10(v) if logy else v

    pts = {
        name: [(x, ty(y)) for x, y in zip(xs, ys) if math.isfinite(y) and (y > 0 or not logy)]
        for name, (xs, ys) in series.items()
    }
    allx = [x for p in pts.values() for x, _ in p] or [0.0, 1.0]
    ally = [y for p in pts.values() for _, y in p] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    if ylim is not None:
        y0, y1 = (ty(ylim[0]), ty(ylim[1]))
    else:
        y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    xt = sorted(set(allx)) if xticklabels else _ticks(x0, x1)
    for i, x in enumerate(xt):
        label = xticklabels[i] if xticklabels and i < len(xticklabels) else f"{x:.3g}"
        out.append(
            f'<text x="{_fmt(sx(x))}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{escape(label)}</text>'
        )
    for y in _ticks(y0, y1):
        label = f"1e{y:.1f}" if logy else f"{y:.3g}"
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(sy(y) + 4)}" text-anchor="end">{label}</text>')
        out.append(
            f'<line x1="{MARGIN_L}" y1="{_fmt(sy(y))}" x2="{MARGIN_L + pw}" y2="{_fmt(sy(y))}" '
            f'stroke="#dddddd"/>'
        )
    out.append(
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (name, p) in enumerate(pts.items()):
        color = COLORS[i % len(COLORS)]
        if p:
            path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in p)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in p:
                out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="{color}"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = MARGIN_L + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
