"""Minimal SVG line plots, enough to redraw the landscape figures without a plotting stack."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    width: float = 1.5
    dashed: bool = False
    color: str | None = None


@dataclass
class Panel:
    series: list[Series] = field(default_factory=list)
    title: str = ""
    xlabel: str = "theta"
    ylabel: str = ""
    ylim: tuple[float, float] | None = None

    def add(self, x, y, label="", **kw) -> "Panel":
        self.series.append(Series(np.asarray(x, float), np.asarray(y, float), label, **kw))
        return self


def _limits(panel: Panel):
    xs = np.concatenate([s.x[np.isfinite(s.x)] for s in panel.series])
    ys = np.concatenate([s.y[np.isfinite(s.y)] for s in panel.series])
    x0, x1 = float(xs.min()), float(xs.max())
    if panel.ylim is not None:
        y0, y1 = panel.ylim
    else:
        y0, y1 = float(ys.min()), float(ys.max())
        pad = 0.05 * (y1 - y0 or 1.0)
        y0, y1 = y0 - pad, y1 + pad
    return x0, x1 or 1.0, y0, y1


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    return np.arange(math.ceil(lo / step) * step, hi + 1e-12 * step, step)


def _path(px: np.ndarray, py: np.ndarray) -> str:
    """Polyline as a path, broken at non-finite values."""
    parts, pen = [], False
    for a, b in zip(px, py):
        if not (math.isfinite(a) and math.isfinite(b)):
            pen = False
            continue
        parts.append(f"{'L' if pen else 'M'}{a:.2f},{b:.2f}")
        pen = True
    return " ".join(parts)


def render_panel(panel: Panel, width: int = 420, height: int = 300) -> str:
    """SVG group (no outer <svg>) for one panel in a width x height box."""
    left, right, top, bottom = 60, 15, 28, 42
    w, h = width - left - right, height - top - bottom
    x0, x1, y0, y1 = _limits(panel)
    sx = lambda x: left + (np.asarray(x) - x0) / (x1 - x0) * w  # noqa: E731
    sy = lambda y: top + (1 - (np.asarray(y) - y0) / (y1 - y0)) * h  # noqa: E731
    out = [f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#333"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{top + h + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.1f}" font-size="11" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{left + w / 2}" y="{height - 6}" font-size="12" text-anchor="middle">'
               f'{escape(panel.xlabel)}</text>')
    out.append(f'<text x="14" y="{top + h / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + h / 2})">{escape(panel.ylabel)}</text>')
    out.append(f'<text x="{left}" y="{top - 9}" font-size="13">{escape(panel.title)}</text>')
    out.append(f'<clipPath id="c{id(panel)}"><rect x="{left}" y="{top}" width="{w}" height="{h}"/></clipPath>')
    for k, s in enumerate(panel.series):
        color = s.color or PALETTE[k % len(PALETTE)]
        dash = ' stroke-dasharray="5,4"' if s.dashed else ""
        out.append(f'<path d="{_path(sx(s.x), sy(s.y))}" fill="none" stroke="{color}" '
                   f'stroke-width="{s.width}"{dash} clip-path="url(#c{id(panel)})"/>')
    labels = [(k, s) for k, s in enumerate(panel.series) if s.label]
    for row, (k, s) in enumerate(labels):
        color = s.color or PALETTE[k % len(PALETTE)]
        y = top + 14 + 14 * row
        out.append(f'<line x1="{left + w - 95}" y1="{y - 4}" x2="{left + w - 75}" y2="{y - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + w - 70}" y="{y}" font-size="11">{escape(s.label)}</text>')
    return "\n".join(out)


def figure(panels: list[Panel], cols: int | None = None, width: int = 420, height: int = 300) -> str:
    """Complete SVG document with panels laid out row-major."""
    cols = cols or len(panels)
    rows = math.ceil(len(panels) / cols)
    body = []
    for k, p in enumerate(panels):
        dx, dy = (k % cols) * width, (k // cols) * height
        body.append(f'<g transform="translate({dx},{dy})">\n{render_panel(p, width, height)}\n</g>')
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * width}" height="{rows * height}" '
        f'font-family="sans-serif">\n<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body) + "\n</svg>\n"
    )
