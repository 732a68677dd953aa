"""Bare-bones SVG line plots, no plotting dependency needed for --svg output."""
from __future__ import annotations

import math

_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
_W, _H = 760, 480
_MARGIN = 62


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def line_plot(path: str, series: list[tuple[str, list[float], list[float]]],
              title: str = "", x_label: str = "", y_label: str = "",
              log_x: bool = False, log_y: bool = False) -> None:
    def fx(v):
        return math.log10(v) if log_x else v

    def fy(v):
        return math.log10(v) if log_y else v

    xs = [fx(x) for _, sx, _ in series for x in sx]
    ys = [fy(y) for _, _, sy in series for y in sy if not (log_y and y <= 0)]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi += 1.0
    if y_hi == y_lo:
        y_hi += 1.0

    def px(v):
        return _MARGIN + (fx(v) - x_lo) / (x_hi - x_lo) * (_W - 2 * _MARGIN)

    def py(v):
        return _H - _MARGIN - (fy(v) - y_lo) / (y_hi - y_lo) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN}" '
        f'height="{_H - 2 * _MARGIN}" fill="none" stroke="#444"/>',
        f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_W / 2:.0f}" y="{_H - 14}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="18" y="{_H / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_H / 2:.0f})">{y_label}</text>',
    ]
    for tv in _ticks(x_lo, x_hi):
        raw = 10**tv if log_x else tv
        parts.append(
            f'<text x="{_MARGIN + (tv - x_lo) / (x_hi - x_lo) * (_W - 2 * _MARGIN):.1f}" '
            f'y="{_H - _MARGIN + 16}" text-anchor="middle" font-size="10">{raw:.4g}</text>'
        )
    for tv in _ticks(y_lo, y_hi):
        raw = 10**tv if log_y else tv
        parts.append(
            f'<text x="{_MARGIN - 6}" '
            f'y="{_H - _MARGIN - (tv - y_lo) / (y_hi - y_lo) * (_H - 2 * _MARGIN) + 4:.1f}" '
            f'text-anchor="end" font-size="10">{raw:.4g}</text>'
        )
    for i, (name, sx, sy) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(sx, sy)
            if not (log_y and y <= 0) and not (log_x and x <= 0)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        parts.append(
            f'<text x="{_W - _MARGIN - 4}" y="{_MARGIN + 16 + 15 * i}" text-anchor="end" '
            f'font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
