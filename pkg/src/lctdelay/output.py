"""Deterministic CSV / JSON writers and small native SVG plots."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["fmt", "write_csv", "write_json", "to_jsonable", "svg_heatmap", "svg_lines"]


def fmt(value) -> str:
    """17 significant digits, which round-trips every double."""
    if isinstance(value, (str, bool, np.str_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


_PALETTE = {"Stable": "#4caf50", "Unstable": "#e53935", "Critical": "#fdd835", "Singular": "#424242"}
_LINE_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _axes(parts, x0, y0, w, h, xlim, ylim, xlabel, ylabel, title):
    parts.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="black"/>')
    for i in range(5):
        fx = i / 4
        xv = xlim[0] + fx * (xlim[1] - xlim[0])
        yv = ylim[0] + fx * (ylim[1] - ylim[0])
        px = x0 + fx * w
        py = y0 + h - fx * h
        parts.append(f'<text x="{px:.2f}" y="{y0 + h + 16}" font-size="11" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{x0 - 6}" y="{py + 4:.2f}" font-size="11" text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 34}" font-size="13" text-anchor="middle">{xlabel}</text>')
    parts.append(
        f'<text x="{x0 - 44}" y="{y0 + h / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 {x0 - 44} {y0 + h / 2})">{ylabel}</text>'
    )
    parts.append(f'<text x="{x0 + w / 2}" y="{y0 - 10}" font-size="14" text-anchor="middle">{title}</text>')


def svg_heatmap(path, x_grid, y_grid, classes, curve=None, xlabel="sigma", ylabel="epsilon", title="") -> Path:
    """Class map with ``classes[i, j]`` at ``(x_grid[j], y_grid[i])`` and an optional polyline."""
    x_grid, y_grid = np.asarray(x_grid, float), np.asarray(y_grid, float)
    W, H, x0, y0 = 520, 420, 70, 40
    pw, ph = W - x0 - 20, H - y0 - 50

    def edges(g):
        if g.size == 1:
            return np.array([g[0] - 0.5, g[0] + 0.5])
        mid = 0.5 * (g[1:] + g[:-1])
        return np.concatenate([[g[0] - (mid[0] - g[0])], mid, [g[-1] + (g[-1] - mid[-1])]])

    xe, ye = edges(x_grid), edges(y_grid)
    xlim, ylim = (xe[0], xe[-1]), (ye[0], ye[-1])
    sx = lambda v: x0 + (v - xlim[0]) / (xlim[1] - xlim[0]) * pw  # noqa: E731
    sy = lambda v: y0 + ph - (v - ylim[0]) / (ylim[1] - ylim[0]) * ph  # noqa: E731
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    parts.append('<rect width="100%" height="100%" fill="white"/>')
    for i in range(y_grid.size):
        for j in range(x_grid.size):
            col = _PALETTE.get(str(classes[i, j]), "#9e9e9e")
            xa, xb = sx(xe[j]), sx(xe[j + 1])
            ya, yb = sy(ye[i + 1]), sy(ye[i])
            parts.append(
                f'<rect x="{xa:.2f}" y="{ya:.2f}" width="{xb - xa + 0.05:.2f}" height="{yb - ya + 0.05:.2f}" fill="{col}"/>'
            )
    if curve is not None and len(curve[0]):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(*curve))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1a237e" stroke-width="2"/>')
    _axes(parts, x0, y0, pw, ph, xlim, ylim, xlabel, ylabel, title)
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


def svg_lines(path, x, series: dict, xlabel="t", ylabel="", title="") -> Path:
    """Line plot of ``series[name]`` against ``x``; long series are thinned to about 2000 points."""
    x = np.asarray(x, float)
    stride = max(1, x.size // 2000)
    idx = np.arange(0, x.size, stride)
    if idx[-1] != x.size - 1:
        idx = np.append(idx, x.size - 1)
    ys = {k: np.asarray(v, float)[idx] for k, v in series.items()}
    xs = x[idx]
    finite = np.concatenate([v[np.isfinite(v)] for v in ys.values()]) if ys else np.zeros(1)
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        lo, hi = lo - 0.5, hi + 0.5
    W, H, x0, y0 = 640, 360, 70, 40
    pw, ph = W - x0 - 130, H - y0 - 50
    xlim = (float(xs[0]), float(xs[-1]) if xs[-1] > xs[0] else float(xs[0]) + 1.0)
    sx = lambda v: x0 + (v - xlim[0]) / (xlim[1] - xlim[0]) * pw  # noqa: E731
    sy = lambda v: y0 + ph - (v - lo) / (hi - lo) * ph  # noqa: E731
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    parts.append('<rect width="100%" height="100%" fill="white"/>')
    for n, (name, vals) in enumerate(ys.items()):
        col = _LINE_COLORS[n % len(_LINE_COLORS)]
        ok = np.isfinite(vals)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs[ok], vals[ok]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.2"/>')
        parts.append(f'<text x="{x0 + pw + 10}" y="{y0 + 16 * (n + 1)}" font-size="12" fill="{col}">{name}</text>')
    _axes(parts, x0, y0, pw, ph, xlim, (lo, hi), xlabel, ylabel, title)
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path
