"""Static SVG 1.1 line plots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#2c3e50")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    dashed: bool = False


@dataclass
class Marker:
    x: float
    y: float
    label: str


@dataclass
class Figure:
    """Axes with polylines, point markers and shaded vertical bands."""

    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 440
    series: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    bands: list = field(default_factory=list)

    def add(self, x, y, label="", dashed=False):
        self.series.append(Series(np.asarray(x, float), np.asarray(y, float), label, dashed))

    def mark(self, x, y, label):
        self.markers.append(Marker(float(x), float(y), label))

    def band(self, lo, hi, label):
        self.bands.append((float(lo), float(hi), label))

    def to_svg(self) -> str:
        return render(self)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.6g}" if v != 0 else "0"


def _extent(values):
    values = values[np.isfinite(values)]
    if values.size == 0:
        return 0.0, 1.0
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render(fig: Figure) -> str:
    ml, mr, mt, mb = 78, 150, 40, 56
    pw, ph = fig.width - ml - mr, fig.height - mt - mb
    xs = np.concatenate([s.x for s in fig.series] + [np.array([m.x for m in fig.markers])]
                        + [np.array([b for band in fig.bands for b in band[:2]])])
    ys = np.concatenate([s.y for s in fig.series] + [np.array([m.y for m in fig.markers])])
    x0, x1 = _extent(xs)
    y0, y1 = _extent(ys)

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fig.width}" '
        f'height="{fig.height}" viewBox="0 0 {fig.width} {fig.height}" '
        'font-family="Helvetica, Arial, sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{fig.width}" height="{fig.height}" fill="white"/>',
    ]
    if fig.title:
        out.append(f'<text x="{ml + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
                   f'{escape(fig.title)}</text>')
    for lo, hi, label in fig.bands:
        a, b = px(lo), px(hi)
        w = max(b - a, 1.0)
        out.append(f'<rect x="{a:.2f}" y="{mt}" width="{w:.2f}" height="{ph}" fill="#f5b041" '
                   f'fill-opacity="0.35"><title>{escape(label)}</title></rect>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{ml - 5}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    if fig.xlabel:
        out.append(f'<text x="{ml + pw / 2:.2f}" y="{fig.height - 14}" text-anchor="middle">'
                   f'{escape(fig.xlabel)}</text>')
    if fig.ylabel:
        out.append(f'<text x="18" y="{mt + ph / 2:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {mt + ph / 2:.2f})">{escape(fig.ylabel)}</text>')
    for k, s in enumerate(fig.series):
        colour = PALETTE[k % len(PALETTE)]
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s.x[ok], s.y[ok]))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.6"{dash}/>')
        if s.label:
            ly = mt + 16 + 18 * k
            out.append(f'<line x1="{ml + pw + 12}" y1="{ly - 4}" x2="{ml + pw + 36}" y2="{ly - 4}" '
                       f'stroke="{colour}" stroke-width="2"{dash}/>')
            out.append(f'<text x="{ml + pw + 42}" y="{ly}">{escape(s.label)}</text>')
    for m in fig.markers:
        X, Y = px(m.x), py(m.y)
        out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="4" fill="none" stroke="black" '
                   'stroke-width="1.4"/>')
        out.append(f'<text x="{X + 6:.2f}" y="{Y - 6:.2f}">{escape(m.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
