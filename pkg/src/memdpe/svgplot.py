"""Tiny self-contained SVG line/histogram plotter (no plotting dependency;
CSV is the canonical output, these files are a convenience)."""
from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 440
ML, MR, MT, MB = 70, 20, 36, 52


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


class _Axis:
    def __init__(self, lo, hi, log):
        self.log = log
        if log:
            self.lo, self.hi = math.log10(lo), math.log10(hi)
        else:
            self.lo, self.hi = lo, hi
        if self.hi - self.lo < 1e-30:
            self.hi = self.lo + 1.0

    def unit(self, v):
        x = math.log10(v) if self.log else v
        return (x - self.lo) / (self.hi - self.lo)


def plot_lines(path, series, xlabel: str, ylabel: str, title: str = "",
               logx: bool = False, logy: bool = False) -> None:
    """series: iterable of (label, xs, ys)."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        raise ValueError("nothing to plot")
    pad = lambda lo, hi: (lo - 0.05 * (hi - lo or 1), hi + 0.05 * (hi - lo or 1))
    if logx:
        ax = _Axis(min(xs_all), max(xs_all), True)
    else:
        ax = _Axis(*pad(min(xs_all), max(xs_all)), False)
    if logy:
        ay = _Axis(min(ys_all), max(ys_all), True)
    else:
        ay = _Axis(*pad(min(ys_all), max(ys_all)), False)
    px = lambda x: ML + ax.unit(x) * (W - ML - MR)
    py = lambda y: H - MB - ay.unit(y) * (H - MT - MB)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W/2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>']
    # frame
    parts.append(f'<rect x="{ML}" y="{MT}" width="{W-ML-MR}" height="{H-MT-MB}" '
                 'fill="none" stroke="#333"/>')
    # ticks
    if logx:
        lo_d, hi_d = math.floor(ax.lo), math.ceil(ax.hi)
        xticks = [10 ** d for d in range(int(lo_d), int(hi_d) + 1)
                  if ax.lo - 1e-9 <= d <= ax.hi + 1e-9]
    else:
        xticks = _ticks(ax.lo, ax.hi)
    for t in xticks:
        x = px(t)
        parts.append(f'<line x1="{x:.1f}" y1="{H-MB}" x2="{x:.1f}" y2="{H-MB+5}" stroke="#333"/>')
        parts.append(f'<text x="{x:.1f}" y="{H-MB+18}" text-anchor="middle">{_fmt(t)}</text>')
    yticks = [10 ** d for d in range(int(math.floor(ay.lo)), int(math.ceil(ay.hi)) + 1)
              if ay.lo - 1e-9 <= d <= ay.hi + 1e-9] if logy else _ticks(ay.lo, ay.hi)
    for t in yticks:
        y = py(t)
        parts.append(f'<line x1="{ML-5}" y1="{y:.1f}" x2="{ML}" y2="{y:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{ML-8}" y="{y+4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    parts.append(f'<text x="{(ML+W-MR)/2:.0f}" y="{H-14}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(MT+H-MB)/2:.0f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(MT+H-MB)/2:.0f})">{ylabel}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = MT + 16 + 16 * i
        parts.append(f'<line x1="{W-MR-130}" y1="{ly-4}" x2="{W-MR-104}" y2="{ly-4}" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{W-MR-100}" y="{ly}">{label}</text>')
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def plot_hist(path, counts, edges, xlabel: str, title: str = "") -> None:
    n = max(sum(counts), 1)
    ax = _Axis(edges[0], edges[-1], False)
    top = max(max(counts), 1)
    px = lambda x: ML + ax.unit(x) * (W - ML - MR)
    ph = lambda c: (H - MT - MB) * c / top
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W/2:.0f}" y="18" text-anchor="middle" font-size="14">{title} (n={n})</text>',
             f'<rect x="{ML}" y="{MT}" width="{W-ML-MR}" height="{H-MT-MB}" fill="none" stroke="#333"/>']
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        if c == 0:
            continue
        x0, x1 = px(lo), px(hi)
        h = ph(c)
        parts.append(f'<rect x="{x0:.1f}" y="{H-MB-h:.1f}" width="{x1-x0:.1f}" '
                     f'height="{h:.1f}" fill="#1f77b4" stroke="white" stroke-width="0.5"/>')
    for t in _ticks(ax.lo, ax.hi):
        x = px(t)
        parts.append(f'<text x="{x:.1f}" y="{H-MB+18}" text-anchor="middle">{_fmt(t)}</text>')
    parts.append(f'<text x="{(ML+W-MR)/2:.0f}" y="{H-14}" text-anchor="middle">{xlabel}</text>')
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
