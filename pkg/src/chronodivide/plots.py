"""Self-contained SVG charts: decision series, CV error curve, distance map.

No plotting dependency; each function returns a complete <svg> document
string suitable for writing straight to disk.
"""

from __future__ import annotations

from typing import Sequence

from .analysis import DecisionSeries, DistanceSummary, DivideReport
from .selection import CvCurvePoint

_W, _H = 820, 420
_MARGIN = 55


def _scale(lo: float, hi: float, span: float):
    if hi <= lo:
        hi = lo + 1.0
    return lambda v: (v - lo) / (hi - lo) * span


def _frame(title: str, x_label: str, y_label: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_W / 2:.0f}" y="{_H - 10}" text-anchor="middle">{x_label}</text>',
        f'<text x="14" y="{_H / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_H / 2:.0f})">{y_label}</text>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN}" '
        f'height="{_H - 2 * _MARGIN}" fill="none" stroke="#888"/>',
    ]


def _axis_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    step = (hi - lo) / max(n - 1, 1)
    return [lo + i * step for i in range(n)]


def decision_series_svg(series: DecisionSeries, divide: DivideReport | None = None) -> str:
    """Scatter/line plot of S(n) with the zero line and the detected split."""
    xs = list(series.ordinals)
    ys = list(series.values)
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys + [0.0]), max(ys + [0.0])
    pad = 0.08 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    plot_w, plot_h = _W - 2 * _MARGIN, _H - 2 * _MARGIN
    sx = _scale(x_lo, x_hi, plot_w)
    sy = _scale(y_lo, y_hi, plot_h)

    def px(x): return _MARGIN + sx(x)
    def py(y): return _H - _MARGIN - sy(y)  # screen y grows downward

    parts = _frame("Decision values over ordered samples", "sample ordinal", "decision value")
    zero_y = py(0.0)
    parts.append(
        f'<line x1="{_MARGIN}" y1="{zero_y:.1f}" x2="{_W - _MARGIN}" y2="{zero_y:.1f}" '
        'stroke="#bbb" stroke-dasharray="4 3"/>'
    )
    if divide is not None and divide.divide_after_ordinal is not None:
        dx = px(divide.divide_after_ordinal + 0.5)
        color = "#2a7" if divide.divide_found else "#d95"
        parts.append(
            f'<line x1="{dx:.1f}" y1="{_MARGIN}" x2="{dx:.1f}" '
            f'y2="{_H - _MARGIN}" stroke="{color}" stroke-dasharray="6 3"/>'
        )
    points = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#69c" stroke-width="1"/>')
    for x, y in zip(xs, ys):
        fill = "#36c" if y >= 0 else "#c33"
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{fill}"/>')
    for tx in _axis_ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_H - _MARGIN + 16}" text-anchor="middle">{tx:.0f}</text>'
        )
    for ty in _axis_ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{py(ty):.1f}" text-anchor="end">{ty:.2f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cv_curve_svg(curve: Sequence[CvCurvePoint]) -> str:
    """Mean CV error against feature count, with one-standard-error bars."""
    xs = [p.d for p in curve]
    ys = [p.mean_error for p in curve]
    errs = [p.std_error for p in curve]
    y_lo = 0.0
    y_hi = max(y + e for y, e in zip(ys, errs)) * 1.1 or 1.0
    plot_w, plot_h = _W - 2 * _MARGIN, _H - 2 * _MARGIN
    sx = _scale(min(xs), max(xs), plot_w)
    sy = _scale(y_lo, y_hi, plot_h)

    def px(x): return _MARGIN + sx(x)
    def py(y): return _H - _MARGIN - sy(y)

    parts = _frame("Cross-validation error by feature count", "number of features d", "mean error")
    for x, y, e in zip(xs, ys, errs):
        parts.append(
            f'<line x1="{px(x):.1f}" y1="{py(y - e):.1f}" x2="{px(x):.1f}" '
            f'y2="{py(y + e):.1f}" stroke="#999"/>'
        )
    points = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#36c" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" fill="#36c"/>')
    for tx in _axis_ticks(min(xs), max(xs)):
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_H - _MARGIN + 16}" text-anchor="middle">{tx:.0f}</text>'
        )
    for ty in _axis_ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{py(ty):.1f}" text-anchor="end">{ty:.2f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(t: float) -> str:
    """Light-to-dark blue ramp for t in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    r = int(245 - 195 * t)
    g = int(248 - 178 * t)
    b = int(252 - 92 * t)
    return f"rgb({r},{g},{b})"


def distance_heatmap_svg(summary: DistanceSummary) -> str:
    """Heat map of the pairwise distance matrix with group boundaries."""
    n = len(summary.sample_ids)
    size = _H - 2 * _MARGIN
    cell = size / max(n, 1)
    d_max = float(summary.matrix.max()) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_H}" height="{_H}" '
        f'viewBox="0 0 {_H} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_H}" height="{_H}" fill="white"/>',
        f'<text x="{_H / 2:.0f}" y="20" text-anchor="middle" font-size="15">'
        "Pairwise distances between samples</text>",
    ]
    for i in range(n):
        for j in range(n):
            color = _heat_color(summary.matrix[i, j] / d_max)
            parts.append(
                f'<rect x="{_MARGIN + j * cell:.2f}" y="{_MARGIN + i * cell:.2f}" '
                f'width="{cell:.2f}" height="{cell:.2f}" fill="{color}"/>'
            )
    # separators where the group label changes along the ordered samples
    boundaries = [
        k + 1
        for k in range(n - 1)
        if summary.group_labels[k] != summary.group_labels[k + 1]
    ]
    for b in boundaries:
        offset = _MARGIN + b * cell
        parts.append(
            f'<line x1="{offset:.2f}" y1="{_MARGIN}" x2="{offset:.2f}" '
            f'y2="{_MARGIN + size:.2f}" stroke="#d33" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{_MARGIN}" y1="{offset:.2f}" x2="{_MARGIN + size:.2f}" '
            f'y2="{offset:.2f}" stroke="#d33" stroke-width="1"/>'
        )
    parts.append(
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{size}" height="{size}" '
        'fill="none" stroke="#888"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
