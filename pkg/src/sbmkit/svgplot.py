"""Minimal SVG plots: lines, scatter with error bars, log axes."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .io import atomic_write_text

W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 55
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo: float, hi: float, log: bool) -> list:
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        step = max(1, (b - a) // 6)
        return [10.0**k for k in range(a, b + 1, step) if lo <= 10.0**k <= hi] or [lo, hi]
    span = hi - lo or 1.0
    raw = span / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * span:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def plot(path, series: Sequence[dict], title: str = "", xlabel: str = "", ylabel: str = "",
         logx: bool = False, logy: bool = False, hlines: Optional[Sequence[float]] = None) -> str:
    """series items: {x, y, yerr (optional), label, style: 'line'|'points'}."""
    xs = [x for s in series for x in s["x"] if not logx or x > 0]
    ys = [y for s in series for y in s["y"] if (not logy or y > 0) and math.isfinite(y)]
    for s in series:
        for y, e in zip(s["y"], s.get("yerr") or [0] * len(s["y"])):
            if math.isfinite(y) and math.isfinite(e):
                ys += [y - e, y + e] if not logy else [v for v in (y - e, y + e) if v > 0]
    ys += list(hlines or [])
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x0 == x1:
        x0, x1 = (x0 / 2, x0 * 2) if logx else (x0 - 1, x1 + 1)
    if y0 == y1:
        y0, y1 = (y0 / 2, y0 * 2) if logy else (y0 - 1, y1 + 1)
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    a0, a1, b0, b1 = tx(x0), tx(x1), ty(y0), ty(y1)
    pad = 0.05 * (b1 - b0)
    b0, b1 = b0 - pad, b1 + pad

    def px(v):
        return ML + (tx(v) - a0) / (a1 - a0) * (W - ML - MR)

    def py(v):
        return H - MB - (ty(v) - b0) / (b1 - b0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
           f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="16" y="{H / 2}" text-anchor="middle" transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>']
    for v in _ticks(x0, x1, logx):
        out.append(f'<line x1="{px(v):.1f}" y1="{H - MB}" x2="{px(v):.1f}" y2="{H - MB + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.1f}" y="{H - MB + 18}" text-anchor="middle">{_fmt(v)}</text>')
    ylo, yhi = (10**b0, 10**b1) if logy else (b0, b1)
    for v in _ticks(ylo, yhi, logy):
        out.append(f'<line x1="{ML - 5}" y1="{py(v):.1f}" x2="{ML}" y2="{py(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{ML - 8}" y="{py(v) + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
    for h in hlines or []:
        out.append(f'<line x1="{ML}" y1="{py(h):.1f}" x2="{W - MR}" y2="{py(h):.1f}" stroke="#888" stroke-dasharray="4 3"/>')
    for i, s in enumerate(series):
        c = COLORS[i % len(COLORS)]
        pts = [(x, y) for x, y in zip(s["x"], s["y"]) if math.isfinite(y) and (not logx or x > 0) and (not logy or y > 0)]
        if s.get("style", "line") == "line" and len(pts) > 1:
            d = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{c}"/>')
        for x, y, e in zip(s["x"], s["y"], s.get("yerr") or []):
            if not (math.isfinite(y) and math.isfinite(e)) or e <= 0:
                continue
            lo, hi = y - e, y + e
            if logy:
                lo = max(lo, y * 1e-3)
            out.append(f'<line x1="{px(x):.1f}" y1="{py(lo):.1f}" x2="{px(x):.1f}" y2="{py(hi):.1f}" stroke="{c}"/>')
        if s.get("label"):
            out.append(f'<text x="{W - MR - 150}" y="{MT + 16 * (i + 1)}" fill="{c}">{escape(str(s["label"]))}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    atomic_write_text(path, text)
    return str(path)
