"""Minimal SVG writer for log-log convergence plots."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=80, right=170, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class Series:
    label: str
    h: tuple
    err: tuple
    marker: str = "circle"  # or "triangle"
    slope: float | None = None  # reference slope drawn next to the curve


def _decades(lo: float, hi: float):
    return range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)


def _marker(kind, x, y, color):
    if kind == "triangle":
        pts = f"{x:.1f},{y - 5:.1f} {x - 5:.1f},{y + 4:.1f} {x + 5:.1f},{y + 4:.1f}"
        return f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
    return f'<circle cx="{x:.1f}" cy="{y:.1f}" r="4" fill="none" stroke="{color}" stroke-width="1.5"/>'


def loglog_svg(series, title: str = "", xlabel: str = "Mesh size h", ylabel: str = "") -> str:
    """Render ``series`` as an SVG document.

    The h axis decreases from left to right, so refinement reads forward.
    Every series with ``slope`` set gets a reference triangle below its
    finest point.
    """
    series = [s for s in series if len(s.h)]
    if not series:
        raise ValueError("nothing to plot")
    hs = [v for s in series for v in s.h]
    es = [v for s in series for v in s.err if v > 0]
    if not es:
        raise ValueError("errors must contain positive values")
    hlo, hhi = min(hs) / 1.3, max(hs) * 1.3
    elo, ehi = min(es) / 10.0, max(es) * 3.0
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(h):  # large h on the left
        t = (math.log10(hhi) - math.log10(h)) / (math.log10(hhi) - math.log10(hlo))
        return x0 + t * (x1 - x0)

    def py(e):
        t = (math.log10(ehi) - math.log10(e)) / (math.log10(ehi) - math.log10(elo))
        return y0 + t * (y1 - y0)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" fill="none" stroke="black"/>']
    for d in _decades(elo, ehi):
        e = 10.0**d
        if elo <= e <= ehi:
            y = py(e)
            out.append(f'<line x1="{x0}" y1="{y:.1f}" x2="{x1}" y2="{y:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{x0 - 6}" y="{y + 4:.1f}" text-anchor="end">1e{d}</text>')
    for h in sorted(set(round(v, 6) for v in hs)):
        x = px(h)
        out.append(f'<line x1="{x:.1f}" y1="{y1}" x2="{x:.1f}" y2="{y1 + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{y1 + 18}" text-anchor="middle">{h:.3g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{y0 - 14}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(h), py(e)) for h, e in zip(s.h, s.err) if e > 0]
        if len(pts) > 1:
            path = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        out.extend(_marker(s.marker, x, y, color) for x, y in pts)
        ly = y0 + 16 + 16 * i
        out.append(_marker(s.marker, x1 + 16, ly - 4, color))
        out.append(f'<text x="{x1 + 26}" y="{ly}">{escape(s.label)}</text>')
        if s.slope is not None and len(s.h) > 1:
            # triangle spanning the last refinement step, shifted below the data
            ha, hb = s.h[-2], s.h[-1]
            eb = min(s.err) / 3.0
            ea = eb * (ha / hb) ** s.slope
            xa, xb, ya, yb = px(ha), px(hb), py(ea), py(eb)
            out.append(f'<polygon points="{xa:.1f},{ya:.1f} {xa:.1f},{yb:.1f} {xb:.1f},{yb:.1f}" '
                       f'fill="none" stroke="{color}" stroke-dasharray="3,2"/>')
            out.append(f'<text x="{xa - 4:.1f}" y="{(ya + yb) / 2 + 4:.1f}" text-anchor="end" '
                       f'fill="{color}" font-weight="bold">{s.slope:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_loglog(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(loglog_svg(series, **kwargs))
