"""Minimal self-contained SVG line plots for experiment outputs.

Plots are written as plain SVG text: axes, ticks, polylines, optional
horizontal reference lines and a legend.  No drawing dependencies.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParam

_PALETTE = ("#1f6fb2", "#d1495b", "#3a7d44", "#8c5383", "#b07a1c", "#4f6d7a")

_MARGIN = dict(left=64, right=16, top=32, bottom=44)


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min(s for s in (1.0, 2.0, 2.5, 5.0, 10.0) if s * mag >= raw) * mag
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.1e}"
    return f"{v:.4g}"


def line_plot(path, series, *, title: str = "", xlabel: str = "",
              ylabel: str = "", hlines=(), log_x: bool = False,
              width: int = 640, height: int = 400) -> None:
    """Write a line plot to an SVG file.

    series: iterable of dicts with keys xs, ys, label (color optional);
    hlines: iterable of (value, label) reference lines.
    """
    series = list(series)
    if not series:
        raise BadParam("line_plot needs at least one series")
    xs_all = np.concatenate([np.asarray(s["xs"], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s["ys"], dtype=float) for s in series])
    ys_all = ys_all[np.isfinite(ys_all)]
    if log_x and np.any(xs_all <= 0):
        raise BadParam("log-scale x needs positive values")
    tx = np.log10(xs_all) if log_x else xs_all
    x_lo, x_hi = float(tx.min()), float(tx.max())
    y_vals = list(ys_all) + [h for h, _ in hlines]
    y_lo = float(min(y_vals)) if y_vals else 0.0
    y_hi = float(max(y_vals)) if y_vals else 1.0
    pad = 0.06 * (y_hi - y_lo) or 0.5
    y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0

    px_w = width - _MARGIN["left"] - _MARGIN["right"]
    px_h = height - _MARGIN["top"] - _MARGIN["bottom"]

    def sx(v):
        t = np.log10(v) if log_x else v
        return _MARGIN["left"] + (t - x_lo) / (x_hi - x_lo) * px_w

    def sy(v):
        return _MARGIN["top"] + (y_hi - v) / (y_hi - y_lo) * px_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    ax_b = _MARGIN["top"] + px_h
    ax_r = _MARGIN["left"] + px_w
    out.append(f'<line x1="{_MARGIN["left"]}" y1="{ax_b}" x2="{ax_r}" y2="{ax_b}" '
               'stroke="black"/>')
    out.append(f'<line x1="{_MARGIN["left"]}" y1="{_MARGIN["top"]}" '
               f'x2="{_MARGIN["left"]}" y2="{ax_b}" stroke="black"/>')

    if log_x:
        lo_e, hi_e = int(np.floor(x_lo)), int(np.ceil(x_hi))
        x_ticks = [10.0 ** e for e in range(lo_e, hi_e + 1)
                   if x_lo <= e <= x_hi]
    else:
        x_ticks = _ticks(x_lo, x_hi)
    for v in x_ticks:
        x = sx(v)
        out.append(f'<line x1="{x:.1f}" y1="{ax_b}" x2="{x:.1f}" y2="{ax_b + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{ax_b + 18}" '
                   f'text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y_lo, y_hi):
        y = sy(v)
        out.append(f'<line x1="{_MARGIN["left"] - 5}" y1="{y:.1f}" '
                   f'x2="{_MARGIN["left"]}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<line x1="{_MARGIN["left"]}" y1="{y:.1f}" x2="{ax_r}" '
                   f'y2="{y:.1f}" stroke="#dddddd"/>')
        out.append(f'<text x="{_MARGIN["left"] - 8}" y="{y + 4:.1f}" '
                   f'text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{(_MARGIN["left"] + ax_r) / 2:.0f}" y="{height - 8}" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{(_MARGIN["top"] + ax_b) / 2:.0f}" '
               f'text-anchor="middle" transform="rotate(-90 14 '
               f'{(_MARGIN["top"] + ax_b) / 2:.0f})">{ylabel}</text>')

    for hv, hl in hlines:
        y = sy(hv)
        out.append(f'<line x1="{_MARGIN["left"]}" y1="{y:.1f}" x2="{ax_r}" '
                   f'y2="{y:.1f}" stroke="#555555" stroke-dasharray="6 4"/>')
        if hl:
            out.append(f'<text x="{ax_r - 4}" y="{y - 5:.1f}" '
                       f'text-anchor="end" fill="#555555">{hl}</text>')

    legend_y = _MARGIN["top"] + 6
    for i, s in enumerate(series):
        color = s.get("color", _PALETTE[i % len(_PALETTE)])
        xs = np.asarray(s["xs"], dtype=float)
        ys = np.asarray(s["ys"], dtype=float)
        keep = np.isfinite(ys)
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}"
                       for x, y in zip(xs[keep], ys[keep]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.8"/>')
        label = s.get("label")
        if label:
            out.append(f'<line x1="{_MARGIN["left"] + 10}" y1="{legend_y}" '
                       f'x2="{_MARGIN["left"] + 34}" y2="{legend_y}" '
                       f'stroke="{color}" stroke-width="1.8"/>')
            out.append(f'<text x="{_MARGIN["left"] + 40}" '
                       f'y="{legend_y + 4}">{label}</text>')
            legend_y += 16
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
