"""Small deterministic SVG line plots (no plotting library needed)."""

from __future__ import annotations

import math
from typing import Sequence, Tuple
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

Curve = Tuple[str, Sequence[float], Sequence[float]]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _bounds(curves):
    xs = [x for _, xv, _ in curves for x in xv if math.isfinite(x)]
    ys = [y for _, _, yv in curves for y in yv if math.isfinite(y)]
    if not xs or not ys:
        raise ValueError("no finite data to plot")
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    return x0, x1, y0 - pad, y1 + pad


def _panel(curves, ox, oy, width, height, title, xlabel, ylabel):
    for label, xv, yv in curves:
        if len(xv) != len(yv):
            raise ValueError(f"curve {label!r}: x and y lengths differ")
        if len(xv) == 0:
            raise ValueError(f"curve {label!r} is empty")
    x0, x1, y0, y1 = _bounds(curves)
    left, right, top, bottom = 60, 20, 30, 45
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return ox + left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return oy + top + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<rect x="{_fmt(ox + left)}" y="{_fmt(oy + top)}" width="{_fmt(pw)}" height="{_fmt(ph)}" '
           f'fill="none" stroke="#000"/>']
    for t in _nice_ticks(x0, x1):
        if x0 <= t <= x1:
            out.append(f'<line x1="{_fmt(sx(t))}" y1="{_fmt(oy + top + ph)}" x2="{_fmt(sx(t))}" '
                       f'y2="{_fmt(oy + top + ph + 4)}" stroke="#000"/>')
            out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(oy + top + ph + 16)}" font-size="10" '
                       f'text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        if y0 <= t <= y1:
            out.append(f'<line x1="{_fmt(ox + left - 4)}" y1="{_fmt(sy(t))}" x2="{_fmt(ox + left)}" '
                       f'y2="{_fmt(sy(t))}" stroke="#000"/>')
            out.append(f'<text x="{_fmt(ox + left - 6)}" y="{_fmt(sy(t) + 3)}" font-size="10" '
                       f'text-anchor="end">{t:g}</text>')
    if title:
        out.append(f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + 18)}" font-size="12" '
                   f'text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + height - 8)}" font-size="11" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cx, cy = ox + 14, oy + top + ph / 2
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="11" text-anchor="middle" '
                   f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{escape(ylabel)}</text>')
    for i, (label, xv, yv) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xv, yv) if math.isfinite(x) and math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = oy + top + 12 + 14 * i
        lx = ox + left + pw - 120
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 18)}" y2="{_fmt(ly - 4)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_fmt(lx + 22)}" y="{_fmt(ly)}" font-size="10">{escape(str(label))}</text>')
    return out


def render_panels(panels, width: int = 560, height: int = 380) -> str:
    """``panels``: list of dicts with keys curves, and optionally title, xlabel, ylabel."""
    if not panels:
        raise ValueError("nothing to plot")
    total_w = width * len(panels)
    body = []
    for k, p in enumerate(panels):
        if not p.get("curves"):
            raise ValueError("empty panel")
        body += _panel(p["curves"], k * width, 0, width, height, p.get("title", ""), p.get("xlabel", ""),
                       p.get("ylabel", ""))
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{height}" '
            f'viewBox="0 0 {total_w} {height}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{total_w}" height="{height}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def emit_svg(curves, path, title: str = "", xlabel: str = "", ylabel: str = ""):
    if not curves:
        raise ValueError("no curves to plot")
    text = render_panels([{"curves": curves, "title": title, "xlabel": xlabel, "ylabel": ylabel}])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def emit_svg_panels(panels, path):
    text = render_panels(panels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path
