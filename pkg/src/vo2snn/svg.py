"""Minimal standalone SVG plots: line/marker/bar series and labelled grids.

Output depends only on the input data; numbers are written with fixed
precision so identical inputs give identical bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptyData

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=78, right=150, top=40, bottom=56)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass
class Series:
    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    style: str = "line"  # line | marker | bar
    color: Optional[str] = None


@dataclass
class Grid:
    """Categorical map over (x, y) cell centres; ``values[j, i]`` at (x[i], y[j])."""

    x: Sequence[float]
    y: Sequence[float]
    values: np.ndarray
    categories: Dict[int, str]
    colors: Dict[int, str] = field(default_factory=dict)
    marker: Optional[Tuple[float, float]] = None
    marker_label: str = "triple point"


def _f(v: float) -> str:
    return f"{v:.2f}"


def _tick_values(lo: float, hi: float, log: bool, n: int = 5) -> List[float]:
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**k for k in range(a, b + 1) if lo <= 10.0**k <= hi] or [lo, hi]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


class _Axes:
    def __init__(self, xlim, ylim, log_x=False, log_y=False):
        self.log_x, self.log_y = log_x, log_y
        self.x0, self.x1 = self._pad(xlim, log_x)
        self.y0, self.y1 = self._pad(ylim, log_y)
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    @staticmethod
    def _pad(lim, log):
        lo, hi = float(lim[0]), float(lim[1])
        if log:
            if lo <= 0:
                raise ValueError("log axis needs positive data")
            if lo == hi:
                lo, hi = lo / 2, hi * 2
            return lo, hi
        if lo == hi:
            d = abs(lo) * 0.1 or 1.0
            return lo - d, hi + d
        return lo, hi

    def _norm(self, v, lo, hi, log):
        if log:
            return (math.log10(v) - math.log10(lo)) / (math.log10(hi) - math.log10(lo))
        return (v - lo) / (hi - lo)

    def px(self, x):
        return MARGIN["left"] + self._norm(x, self.x0, self.x1, self.log_x) * self.pw

    def py(self, y):
        return MARGIN["top"] + (1 - self._norm(y, self.y0, self.y1, self.log_y)) * self.ph


def _frame(ax: _Axes, title: str, xlabel: str, ylabel: str) -> List[str]:
    L, T = MARGIN["left"], MARGIN["top"]
    out = [
        f'<rect x="{L}" y="{T}" width="{_f(ax.pw)}" height="{_f(ax.ph)}" fill="none" stroke="#000"/>',
        f'<text x="{_f(L + ax.pw / 2)}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<text x="{_f(L + ax.pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
        f'<text x="18" y="{_f(T + ax.ph / 2)}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {_f(T + ax.ph / 2)})">{escape(ylabel)}</text>',
    ]
    for v in _tick_values(ax.x0, ax.x1, ax.log_x):
        x = ax.px(v)
        out.append(f'<line x1="{_f(x)}" y1="{_f(T + ax.ph)}" x2="{_f(x)}" y2="{_f(T + ax.ph + 5)}" stroke="#000"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(T + ax.ph + 19)}" text-anchor="middle" font-size="11">{v:.4g}</text>')
    for v in _tick_values(ax.y0, ax.y1, ax.log_y):
        y = ax.py(v)
        out.append(f'<line x1="{L - 5}" y1="{_f(y)}" x2="{L}" y2="{_f(y)}" stroke="#000"/>')
        out.append(f'<text x="{L - 8}" y="{_f(y + 4)}" text-anchor="end" font-size="11">{v:.4g}</text>')
    return out


def _legend(entries: List[Tuple[str, str, str]]) -> List[str]:
    x = WIDTH - MARGIN["right"] + 12
    out = []
    for k, (label, color, kind) in enumerate(entries):
        y = MARGIN["top"] + 14 + 20 * k
        if kind == "line":
            out.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        elif kind == "cross":
            out.append(_cross(x + 9, y, color))
        else:
            out.append(f'<rect x="{x + 3}" y="{y - 6}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{x + 24}" y="{y + 4}" font-size="12">{escape(label)}</text>')
    return out


def _cross(x, y, color, r=6):
    return (f'<path d="M{_f(x - r)},{_f(y - r)}L{_f(x + r)},{_f(y + r)}M{_f(x - r)},{_f(y + r)}'
            f'L{_f(x + r)},{_f(y - r)}" stroke="{color}" stroke-width="2.5"/>')


def _document(body: List[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _series_svg(series: List[Series], title, xlabel, ylabel, log_x, log_y) -> str:
    pts = []
    for s in series:
        x, y = np.asarray(s.x, dtype=float), np.asarray(s.y, dtype=float)
        if x.shape != y.shape:
            raise ValueError(f"series {s.label!r}: x and y differ in length")
        ok = np.isfinite(x) & np.isfinite(y)
        pts.append((x[ok], y[ok]))
    if not any(x.size for x, _ in pts):
        raise EmptyData("nothing to plot")
    xs = np.concatenate([x for x, _ in pts])
    ys = np.concatenate([y for _, y in pts])
    has_bar = any(s.style == "bar" for s in series)
    ylo = min(ys.min(), 0.0) if has_bar else ys.min()
    ax = _Axes((xs.min(), xs.max()), (ylo, ys.max()), log_x, log_y)
    if has_bar:
        ax.x0, ax.x1 = ax.x0 - 0.5, ax.x1 + 0.5
    body = _frame(ax, title, xlabel, ylabel)
    legend = []
    for k, (s, (x, y)) in enumerate(zip(series, pts)):
        color = s.color or PALETTE[k % len(PALETTE)]
        if s.style == "line" and x.size > 1:
            d = "M" + "L".join(f"{_f(ax.px(a))},{_f(ax.py(b))}" for a, b in zip(x, y))
            body.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        elif s.style == "bar":
            base = ax.py(max(ax.y0, 0.0))
            w = 0.7 * ax.pw / max(ax.x1 - ax.x0, 1.0)
            for a, b in zip(x, y):
                top = ax.py(b)
                body.append(f'<rect x="{_f(ax.px(a) - w / 2)}" y="{_f(min(top, base))}" width="{_f(w)}" '
                            f'height="{_f(abs(base - top))}" fill="{color}"/>')
        else:
            r = 3.0 if x.size < 2000 else 1.2
            for a, b in zip(x, y):
                body.append(f'<circle cx="{_f(ax.px(a))}" cy="{_f(ax.py(b))}" r="{r}" fill="{color}"/>')
        if s.label:
            legend.append((s.label, color, "line" if s.style == "line" and x.size > 1 else "box"))
    return _document(body + _legend(legend))


def _grid_svg(grid: Grid, title, xlabel, ylabel, log_x, log_y) -> str:
    vals = np.asarray(grid.values)
    x, y = np.asarray(grid.x, dtype=float), np.asarray(grid.y, dtype=float)
    if vals.size == 0 or x.size == 0 or y.size == 0:
        raise EmptyData("empty grid")
    if vals.shape != (y.size, x.size):
        raise ValueError(f"grid values {vals.shape} do not match axes ({y.size}, {x.size})")

    def edges(c, log):
        c = np.log10(c) if log else c
        if c.size == 1:
            e = np.array([c[0] - 0.5, c[0] + 0.5])
        else:
            mid = (c[1:] + c[:-1]) / 2
            e = np.concatenate([[2 * c[0] - mid[0]], mid, [2 * c[-1] - mid[-1]]])
        return 10**e if log else e

    ex, ey = edges(x, log_x), edges(y, log_y)
    ax = _Axes((ex[0], ex[-1]), (ey[0], ey[-1]), log_x, log_y)
    colors = {k: grid.colors.get(k, PALETTE[i % len(PALETTE)]) for i, k in enumerate(sorted(grid.categories))}
    body = []
    for j in range(y.size):
        y_top, y_bot = ax.py(ey[j + 1]), ax.py(ey[j])
        for i in range(x.size):
            x_l, x_r = ax.px(ex[i]), ax.px(ex[i + 1])
            c = colors.get(int(vals[j, i]), "#999")
            body.append(f'<rect x="{_f(x_l)}" y="{_f(y_top)}" width="{_f(x_r - x_l)}" '
                        f'height="{_f(y_bot - y_top)}" fill="{c}" stroke="{c}" stroke-width="0.3"/>')
    body += _frame(ax, title, xlabel, ylabel)
    legend = [(grid.categories[k], colors[k], "box") for k in sorted(grid.categories)]
    if grid.marker is not None:
        mx, my = grid.marker
        body.append(_cross(ax.px(mx), ax.py(my), "#000"))
        legend.append((grid.marker_label, "#000", "cross"))
    return _document(body + _legend(legend))


def emit_svg(
    data: Union[Series, Sequence[Series], Grid],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> str:
    """Render one or more series, or a categorical grid, as an SVG string."""
    if isinstance(data, Grid):
        return _grid_svg(data, title, xlabel, ylabel, log_x, log_y)
    series = [data] if isinstance(data, Series) else list(data)
    if not series:
        raise EmptyData("no series given")
    return _series_svg(series, title, xlabel, ylabel, log_x, log_y)
