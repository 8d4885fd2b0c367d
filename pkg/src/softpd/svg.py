"""Deterministic SVG pictures of planar power diagrams."""

from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import escape

import numpy as np

from .geometry import Dataset, GeometryError, PowerDiagram

PALETTE = (
    "#1f77b4", "#2ca02c", "#d62728", "#e6b800", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22",
)


def _clip_interval(p0, u, normals, offsets, lo=-np.inf, hi=np.inf):
    """Restrict ``p0 + lam * u`` to ``normal . x <= offset`` for every row."""
    for a, g in zip(normals, offsets):
        rate = float(a @ u)
        room = float(g - a @ p0)
        if abs(rate) < 1e-15:
            if room < -1e-12:
                return None
            continue
        bound = room / rate
        if rate > 0:
            hi = min(hi, bound)
        else:
            lo = max(lo, bound)
    if hi - lo <= 1e-12:
        return None
    return lo, hi


def cell_boundaries(diagram: PowerDiagram, box: tuple[float, float, float, float]) -> list[tuple[int, int, np.ndarray, np.ndarray]]:
    """Visible wall segments ``(i, j, start, end)`` between adjacent cells inside ``box``."""
    if diagram.d != 2:
        raise GeometryError("cell boundaries are only drawn in the plane")
    xmin, ymin, xmax, ymax = box
    box_normals = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    box_offsets = np.array([-xmin, xmax, -ymin, ymax])
    s, g = diagram.sites.sites, diagram.gamma
    out = []
    for i in range(diagram.k):
        for j in range(i + 1, diagram.k):
            a = s[j] - s[i]
            off = g[j] - g[i]
            p0 = a * off / float(a @ a)
            u = np.array([-a[1], a[0]]) / np.linalg.norm(a)
            others = [m for m in range(diagram.k) if m not in (i, j)]
            normals = np.vstack([box_normals] + [(s[m] - s[i])[None, :] for m in others])
            offsets = np.concatenate([box_offsets, [g[m] - g[i] for m in others]])
            span = _clip_interval(p0, u, normals, offsets)
            if span is not None:
                out.append((i, j, p0 + span[0] * u, p0 + span[1] * u))
    return out


def emit_svg(
    diagram: PowerDiagram,
    data: Dataset,
    epsilon: float,
    support: Optional[Iterable[int]] = None,
    size: int = 600,
    title: Optional[str] = None,
) -> str:
    """SVG 1.1 document with points, sites, cell walls and the margin band.

    The band is drawn with half-width ``|epsilon|`` only when ``epsilon > 0``;
    otherwise the legend says so. Points listed in ``support`` are drawn
    enlarged.
    """
    if data.d != 2 or diagram.d != 2:
        raise GeometryError("SVG output requires two-dimensional data")
    support = set(support or ())
    pts = np.vstack([data.points, diagram.sites.sites])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.1 * max(float((hi - lo).max()), 1e-9)
    lo, hi = lo - pad, hi + pad
    extent = float((hi - lo).max())
    scale = (size - 40) / extent
    legend_h = 30

    def tx(p):
        return 20 + (p[0] - lo[0]) * scale, 20 + (hi[1] - p[1]) * scale

    def num(v):
        text = f"{v:.3f}"
        return "0.000" if text == "-0.000" else text

    width = int(round(40 + (hi[0] - lo[0]) * scale))
    height = int(round(40 + (hi[1] - lo[1]) * scale)) + legend_h
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if title:
        lines.append(f"<title>{escape(title)}</title>")
    lines.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')

    walls = cell_boundaries(diagram, (lo[0], lo[1], hi[0], hi[1]))
    if epsilon > 0:
        band = num(2 * epsilon * scale)
        for i, j, a, b in walls:
            (x1, y1), (x2, y2) = tx(a), tx(b)
            lines.append(
                f'<line class="band" x1="{num(x1)}" y1="{num(y1)}" x2="{num(x2)}" y2="{num(y2)}" '
                f'stroke="#999999" stroke-opacity="0.35" stroke-width="{band}"/>'
            )
    for i, j, a, b in walls:
        (x1, y1), (x2, y2) = tx(a), tx(b)
        lines.append(
            f'<line class="boundary" data-pair="{i}-{j}" x1="{num(x1)}" y1="{num(y1)}" '
            f'x2="{num(x2)}" y2="{num(y2)}" stroke="black" stroke-width="1.5"/>'
        )
    for l, (p, lab) in enumerate(zip(data.points, data.labels)):
        x, y = tx(p)
        color = PALETTE[lab % len(PALETTE)]
        if l in support:
            lines.append(
                f'<circle class="point support" cx="{num(x)}" cy="{num(y)}" r="6" fill="{color}" '
                f'stroke="black" stroke-width="1"/>'
            )
        else:
            lines.append(f'<circle class="point" cx="{num(x)}" cy="{num(y)}" r="3" fill="{color}"/>')
    for i, s in enumerate(diagram.sites.sites):
        x, y = tx(s)
        color = PALETTE[i % len(PALETTE)]
        lines.append(
            f'<circle class="site" cx="{num(x)}" cy="{num(y)}" r="8" fill="{color}" '
            f'stroke="black" stroke-width="2"/>'
        )
    if epsilon > 0:
        legend = f"margin eps = {epsilon:.6f}"
    else:
        legend = f"margin eps = {epsilon:.6f} (no band: eps <= 0)"
    lines.append(
        f'<text class="legend" x="20" y="{height - 10}" font-family="sans-serif" '
        f'font-size="14">{escape(legend)}</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
