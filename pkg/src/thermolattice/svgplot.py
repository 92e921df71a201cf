"""Tiny dependency-free SVG writer: line plots with error bars, and histograms.

Every coordinate is formatted with fixed precision so a rerun that produces
the same floats produces byte-identical files.
"""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH = 640
HEIGHT = 420
LEFT, RIGHT, TOP, BOTTOM = 64, 18, 34, 46


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions (1/2/5 x 10^k spacing) covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0, 1.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * mag
    for mult in (1.0, 2.0, 5.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out or [lo, hi]


def _label(x: float) -> str:
    if x == int(x) and abs(x) < 1e7:
        return str(int(x))
    return f"{x:.4g}"


def _finite(vals) -> list[float]:
    return [float(v) for v in vals if v is not None and math.isfinite(float(v))]


class _Frame:
    """Data-to-pixel mapping plus the shared axes/tick boilerplate."""

    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y: float) -> float:
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)

    def axes(self, title: str, xlabel: str, ylabel: str) -> list[str]:
        parts = [
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
            f'font-size="15" font-family="sans-serif">{title}</text>',
        ]
        x_axis = HEIGHT - BOTTOM
        parts.append(f'<line x1="{LEFT}" y1="{x_axis}" x2="{WIDTH - RIGHT}" '
                     f'y2="{x_axis}" stroke="black"/>')
        parts.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{x_axis}" stroke="black"/>')
        for t in _ticks(self.x0, self.x1):
            if t < self.x0 - 1e-12 or t > self.x1 + 1e-12:
                continue
            x = self.px(t)
            parts.append(f'<line x1="{x:.2f}" y1="{x_axis}" x2="{x:.2f}" '
                         f'y2="{x_axis + 5}" stroke="black"/>')
            parts.append(f'<text x="{x:.2f}" y="{x_axis + 18}" text-anchor="middle" '
                         f'font-size="11" font-family="sans-serif">{_label(t)}</text>')
        for t in _ticks(self.y0, self.y1):
            if t < self.y0 - 1e-12 or t > self.y1 + 1e-12:
                continue
            y = self.py(t)
            parts.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" '
                         f'y2="{y:.2f}" stroke="black"/>')
            parts.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end" '
                         f'font-size="11" font-family="sans-serif">{_label(t)}</text>')
        parts.append(f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.1f}" y="{HEIGHT - 10}" '
                     f'text-anchor="middle" font-size="12" font-family="sans-serif">{xlabel}</text>')
        parts.append(f'<text x="16" y="{(TOP + HEIGHT - BOTTOM) / 2:.1f}" text-anchor="middle" '
                     f'font-size="12" font-family="sans-serif" '
                     f'transform="rotate(-90 16 {(TOP + HEIGHT - BOTTOM) / 2:.1f})">{ylabel}</text>')
        return parts


def _document(parts: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head] + parts + ["</svg>"]) + "\n"


def line_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """Write a multi-series line plot.

    series: iterable of dicts with keys "label", "x", "y" and optionally
    "yerr"; non-finite points are dropped per series.
    """
    xs, ys = [], []
    for s in series:
        for x, y in zip(s["x"], s["y"]):
            if math.isfinite(float(x)) and math.isfinite(float(y)):
                xs.append(float(x))
                ys.append(float(y))
        for e, y in zip(s.get("yerr") or [], s["y"]):
            if math.isfinite(float(e)) and math.isfinite(float(y)):
                ys.extend([float(y) - float(e), float(y) + float(e)])
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    pad_x = 0.05 * (max(xs) - min(xs) or 1.0)
    pad_y = 0.05 * (max(ys) - min(ys) or max(abs(v) for v in ys) or 1.0)
    frame = _Frame((min(xs) - pad_x, max(xs) + pad_x), (min(ys) - pad_y, max(ys) + pad_y))
    parts = frame.axes(title, xlabel, ylabel)
    for k, s in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = [(float(x), float(y)) for x, y in zip(s["x"], s["y"])
               if math.isfinite(float(x)) and math.isfinite(float(y))]
        if not pts:
            continue
        poly = " ".join(f"{frame.px(x):.2f},{frame.py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{frame.px(x):.2f}" cy="{frame.py(y):.2f}" '
                         f'r="3" fill="{color}"/>')
        if s.get("yerr") is not None:
            for (x, y), e in zip(pts, [float(v) for v in s["yerr"]]):
                if not math.isfinite(e) or e <= 0:
                    continue
                x_px = frame.px(x)
                parts.append(f'<line x1="{x_px:.2f}" y1="{frame.py(y - e):.2f}" '
                             f'x2="{x_px:.2f}" y2="{frame.py(y + e):.2f}" '
                             f'stroke="{color}" stroke-width="1"/>')
        parts.append(f'<text x="{WIDTH - RIGHT - 6}" y="{TOP + 16 + 15 * k}" text-anchor="end" '
                     f'font-size="12" font-family="sans-serif" fill="{color}">{s["label"]}</text>')
    with open(path, "w") as fh:
        fh.write(_document(parts))


def bar_plot(path, bin_lows, counts, bin_width: float,
             title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """Write a histogram of pre-binned counts (bars anchored at bin_lows)."""
    lows = [float(b) for b in bin_lows]
    cnts = [float(c) for c in counts]
    if not lows:
        lows, cnts = [0.0], [0.0]
    frame = _Frame((min(lows) - 0.5 * bin_width, max(lows) + 1.5 * bin_width),
                   (0.0, max(cnts) * 1.05 or 1.0))
    parts = frame.axes(title, xlabel, ylabel)
    floor_y = frame.py(0.0)
    for b, c in zip(lows, cnts):
        x = frame.px(b)
        w = frame.px(b + bin_width) - x
        y = frame.py(c)
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" '
                     f'height="{floor_y - y:.2f}" fill="{PALETTE[0]}" stroke="white"/>')
    with open(path, "w") as fh:
        fh.write(_document(parts))
