"""Minimal deterministic SVG line plots for flux overlays.

Hand-rolled rendering keeps byte-identical output for identical inputs,
which the run manifests rely on.
"""

from __future__ import annotations

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")
_DASHES = ("none", "6,3", "2,2", "8,3,2,3", "none", "6,3", "2,2", "8,3,2,3")


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    t0 = np.ceil(lo / step) * step
    ticks = []
    t = t0
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _fmt(v):
    return f"{v:.6g}"


def line_plot(series, title="", xlabel="x", ylabel="phi0",
              width=800, height=500):
    """Render labelled (x, y) polylines as an SVG string.

    Parameters
    ----------
    series : sequence of (label, x, y)
        Curves drawn in order with a fixed palette.
    """
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return mt + (y_hi - y) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width/2:.1f}" y="24" font-size="16" '
                   f'text-anchor="middle" font-family="sans-serif">{title}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{mt+ph}" x2="{x:.2f}" '
                   f'y2="{mt+ph+5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt+ph+20}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        out.append(f'<line x1="{ml-5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{ml-8}" y="{y+4:.2f}" font-size="12" '
                   f'text-anchor="end" font-family="sans-serif">{_fmt(t)}</text>')
    out.append(f'<text x="{ml+pw/2:.1f}" y="{height-10}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    out.append(f'<text x="18" y="{mt+ph/2:.1f}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'transform="rotate(-90 18 {mt+ph/2:.1f})">{ylabel}</text>')

    for i, (label, x, y) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        dash = _DASHES[i % len(_DASHES)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}"
                       for a, b in zip(np.asarray(x), np.asarray(y)))
        style = f'fill="none" stroke="{color}" stroke-width="1.8"'
        if dash != "none":
            style += f' stroke-dasharray="{dash}"'
        out.append(f"<polyline {style} points=\"{pts}\"/>")
        ly = mt + 16 + 18 * i
        out.append(f'<line x1="{ml+pw-150}" y1="{ly-4}" x2="{ml+pw-120}" '
                   f'y2="{ly-4}" stroke="{color}" stroke-width="1.8"'
                   + (f' stroke-dasharray="{dash}"' if dash != "none" else "")
                   + "/>")
        out.append(f'<text x="{ml+pw-114}" y="{ly}" font-size="12" '
                   f'font-family="sans-serif">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_plot(path, series, **kwargs):
    with open(path, "w") as fh:
        fh.write(line_plot(series, **kwargs))
