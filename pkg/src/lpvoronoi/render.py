"""Self-contained SVG drawings of traced planar cells."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .lattice import enumerate_in_ball
from .planar import MIN_RUN, Cell2D, circular_runs, extract_facets

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class RenderOptions:
    facets: bool = True
    ties: bool = True
    points: bool = True
    size_px: int = 480


def _path(points: np.ndarray, close: bool = True) -> str:
    # y is flipped so the picture has the usual orientation
    cmds = [f"{'M' if i == 0 else 'L'}{x:.6g},{-y:.6g}" for i, (x, y) in enumerate(points)]
    return " ".join(cmds) + (" Z" if close else "")


def svg_string(cell: Cell2D, options: RenderOptions | None = None) -> str:
    opt = options or RenderOptions()
    D = np.array([s.direction for s in cell.samples])
    inner = D * np.array([s.radius for s in cell.samples])[:, None]
    outer = D * np.array([s.outer_radius for s in cell.samples])[:, None]
    lo, hi = outer.min(axis=0), outer.max(axis=0)
    center, half = 0.5 * (lo + hi), 0.6 * (hi - lo)
    half = np.maximum(half, 1e-9)
    x0, y0 = center[0] - half[0], -(center[1] + half[1])
    w, h = 2 * half
    px_w = opt.size_px
    px_h = max(1, int(round(opt.size_px * h / w)))
    stroke = f'vector-effect="non-scaling-stroke"'

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{px_w}" height="{px_h}" '
        f'viewBox="{x0:.6g} {y0:.6g} {w:.6g} {h:.6g}">',
        f"<title>{escape(cell.norm.label())} Voronoi cell</title>",
        f'<path id="cell" d="{_path(inner)}" fill="#dddddd" stroke="#000000" stroke-width="1.5" {stroke}/>',
    ]
    if opt.ties and np.any(np.abs(outer - inner) > 1e-9):
        ring = _path(outer) + " " + _path(inner[::-1])
        out.append(f'<path id="ties" d="{ring}" fill="#555555" fill-rule="evenodd" stroke="none"/>')
    if opt.facets:
        for i, f in enumerate(extract_facets(cell)):
            color = PALETTE[i % len(PALETTE)]
            mask = np.array([f.generator in s.tie_set for s in cell.samples])
            label = ",".join(str(c) for c in f.generator.coeffs)
            n = len(mask)
            for start, length in circular_runs(mask):
                if length < MIN_RUN:
                    continue
                pts = inner[[(start + t) % n for t in range(length)]]
                out.append(f'<path class="facet" data-generator="{label}" d="{_path(pts, close=False)}" '
                           f'fill="none" stroke="{color}" stroke-width="3" {stroke}/>')
    if opt.points:
        r = 0.01 * float(max(w, h))
        for v in enumerate_in_ball(cell.basis, cell.norm, None, 3.0 * cell.mu_upper):
            x, y = v.coords
            out.append(f'<circle class="lattice-point" cx="{x:.6g}" cy="{-y:.6g}" r="{r:.4g}" fill="#000000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(cell: Cell2D, out, options: RenderOptions | None = None) -> None:
    Path(out).write_text(svg_string(cell, options))
