"""Minimal self-contained SVG line plots (no plotting dependency).

Renders log-scale norm curves with axes, tick labels, a legend and
optional vertical marker lines.  Output is deterministic for identical
input data.
"""

from __future__ import annotations

import math

_COLORS = ("#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df")

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_FLOOR = 1e-18


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    step = max(1, (hi_e - lo_e) // 8)
    return [10.0**e for e in range(lo_e, hi_e + 1, step)]


def _lin_ticks(lo: float, hi: float) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / 6.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * step:
        out.append(t)
        t += step
    return out


def render_log_plot(
    times,
    curves: dict[str, list[float]],
    title: str,
    markers: dict[str, float] | None = None,
) -> str:
    """SVG document: named curves on a log y-axis over a linear time axis."""
    times = list(map(float, times))
    t_lo, t_hi = min(times), max(times)
    if t_hi <= t_lo:
        t_hi = t_lo + 1.0
    vals = [max(abs(v), 0.0) for ys in curves.values() for v in ys]
    pos = [v for v in vals if v > _FLOOR]
    y_lo = min(pos) if pos else 1e-18
    y_hi = max(pos) if pos else 1.0
    y_lo = 10.0 ** math.floor(math.log10(y_lo))
    y_hi = 10.0 ** math.ceil(math.log10(max(y_hi, y_lo * 10)))

    def sx(t: float) -> float:
        return _ML + (_W - _ML - _MR) * (t - t_lo) / (t_hi - t_lo)

    def sy(v: float) -> float:
        lv = math.log10(max(v, _FLOOR))
        frac = (lv - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo))
        return _H - _MB - (_H - _MT - _MB) * frac

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_ML}" y="18" font-size="13">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for yt in _log_ticks(y_lo, y_hi):
        if yt < y_lo * 0.99 or yt > y_hi * 1.01:
            continue
        y = sy(yt)
        parts.append(f'<line x1="{_ML}" y1="{_fmt(y)}" x2="{_W-_MR}" y2="{_fmt(y)}" stroke="#ddd"/>')
        parts.append(f'<text x="{_ML-6}" y="{_fmt(y+4)}" text-anchor="end">1e{int(round(math.log10(yt)))}</text>')
    for xt in _lin_ticks(t_lo, t_hi):
        x = sx(xt)
        parts.append(f'<line x1="{_fmt(x)}" y1="{_MT}" x2="{_fmt(x)}" y2="{_H-_MB}" stroke="#eee"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{_H-_MB+16}" text-anchor="middle">{_fmt(xt)}</text>')
    parts.append(f'<text x="{(_ML+_W-_MR)//2}" y="{_H-12}" text-anchor="middle">t</text>')

    for ci, (name, ys) in enumerate(curves.items()):
        color = _COLORS[ci % len(_COLORS)]
        pts = []
        for t, v in zip(times, ys):
            if abs(v) > _FLOOR and math.isfinite(v):
                pts.append(f"{_fmt(sx(t))},{_fmt(sy(abs(v)))}")
        if pts:
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MT + 16 + 14 * ci
        parts.append(f'<line x1="{_W-_MR-150}" y1="{ly-4}" x2="{_W-_MR-120}" y2="{ly-4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_W-_MR-114}" y="{ly}">{name}</text>')

    for mi, (name, t) in enumerate(sorted((markers or {}).items())):
        if t_lo <= t <= t_hi:
            x = sx(t)
            parts.append(f'<line x1="{_fmt(x)}" y1="{_MT}" x2="{_fmt(x)}" y2="{_H-_MB}" '
                         f'stroke="#555" stroke-dasharray="4 3"/>')
            parts.append(f'<text x="{_fmt(x+4)}" y="{_MT+12+12*mi}">{name}={_fmt(t)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
