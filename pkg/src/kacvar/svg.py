"""Minimal SVG line and histogram plots (fixed 800 x 600 view box)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 30, 50, 70


def _fmt(v):
    return f"{v:.6g}"


def _ticks(lo, hi, k=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / k
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


class Axes:
    def __init__(self, xlim, ylim, logx=False):
        self.logx = logx
        self.x0, self.x1 = (math.log(xlim[0]), math.log(xlim[1])) if logx else xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        x = math.log(x) if self.logx else x
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)

    def py(self, y):
        return H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)


def _frame(ax, xlabel, ylabel, title, meta):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">']
    if meta:
        out.append("<metadata>" + escape(meta) + "</metadata>")
    out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    out.append(f'<text x="{W / 2}" y="30" text-anchor="middle" font-size="18">{escape(title)}</text>')
    x_lo, x_hi = LEFT, W - RIGHT
    y_lo, y_hi = H - BOTTOM, TOP
    out.append(f'<line x1="{x_lo}" y1="{y_lo}" x2="{x_hi}" y2="{y_lo}" stroke="black"/>')
    out.append(f'<line x1="{x_lo}" y1="{y_lo}" x2="{x_lo}" y2="{y_hi}" stroke="black"/>')
    xt = _ticks(ax.x0, ax.x1)
    for t in xt:
        val = math.exp(t) if ax.logx else t
        px = ax.px(val)
        out.append(f'<line x1="{px:.2f}" y1="{y_lo}" x2="{px:.2f}" y2="{y_lo + 6}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{y_lo + 22}" text-anchor="middle" font-size="12">{_fmt(val)}</text>')
    for t in _ticks(ax.y0, ax.y1):
        py = ax.py(t)
        out.append(f'<line x1="{x_lo - 6}" y1="{py:.2f}" x2="{x_lo}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{x_lo - 10}" y="{py + 4:.2f}" text-anchor="end" font-size="12">{_fmt(t)}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 20}" text-anchor="middle" font-size="14">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{H / 2}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 20 {H / 2})">{escape(ylabel)}</text>')
    return out


def line_plot(x, ys, xlabel, ylabel, title="", labels=None, hlines=(), logx=False, meta=None):
    """Polyline plot of one or more series; ``hlines`` are (y, label) reference lines."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in ys]
    vals = np.concatenate([y[np.isfinite(y)] for y in ys] + [np.array([h for h, _ in hlines], float)])
    lo, hi = (float(vals.min()), float(vals.max())) if len(vals) else (0.0, 1.0)
    pad = 0.05 * (hi - lo if hi > lo else 1.0)
    ax = Axes((float(x.min()), float(x.max())), (lo - pad, hi + pad), logx=logx)
    out = _frame(ax, xlabel, ylabel, title, meta)
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    for k, y in enumerate(ys):
        ok = np.isfinite(y)
        pts = " ".join(f"{ax.px(a):.2f},{ax.py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        name = labels[k] if labels else f"series{k}"
        out.append(f'<polyline class="series" data-label="{escape(name)}" fill="none" '
                   f'stroke="{colors[k % len(colors)]}" stroke-width="1.5" points="{pts}"/>')
    for h, name in hlines:
        py = ax.py(h)
        out.append(f'<line class="reference" data-y="{float(h)!r}" data-label="{escape(name)}" x1="{LEFT}" '
                   f'y1="{py:.2f}" x2="{W - RIGHT}" y2="{py:.2f}" stroke="gray" stroke-dasharray="6,4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


OVERLAY_HALF_WIDTH = 6.5


def normal_density(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def histogram_plot(edges, counts, xlabel, ylabel="density", title="", overlay_points=801, meta=None):
    """Density histogram with the standard normal density drawn on top."""
    edges = np.asarray(edges, dtype=float)
    counts = np.asarray(counts, dtype=float)
    dens = counts / (counts.sum() * np.diff(edges))
    # wide enough that the drawn density carries all but 1e-10 of its mass
    lo, hi = min(edges[0], -OVERLAY_HALF_WIDTH), max(edges[-1], OVERLAY_HALF_WIDTH)
    xs = np.linspace(lo, hi, overlay_points)
    ax = Axes((lo, hi), (0.0, 1.1 * max(float(dens.max()), float(normal_density(0.0)))))
    out = _frame(ax, xlabel, ylabel, title, meta)
    for a, b, d in zip(edges[:-1], edges[1:], dens):
        x0, x1 = ax.px(a), ax.px(b)
        y0, y1 = ax.py(0.0), ax.py(d)
        out.append(f'<rect class="bar" data-lo="{float(a)!r}" data-hi="{float(b)!r}" '
                   f'data-density="{float(d)!r}" x="{x0:.2f}" '
                   f'y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" fill="#9ecae1" stroke="white"/>')
    pts = " ".join(f"{ax.px(a):.2f},{ax.py(b):.2f}" for a, b in zip(xs, normal_density(xs)))
    out.append(f'<polyline class="overlay" data-label="N(0,1)" data-lo="{float(lo)!r}" data-hi="{float(hi)!r}" '
               f'data-points="{overlay_points}" fill="none" stroke="#d62728" '
               f'stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
