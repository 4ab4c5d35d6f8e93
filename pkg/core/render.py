"""
Poincaré-disc scenes as SVG.

Disc point z is drawn at (S * Re z, -S * Im z) around the canvas centre, so the
picture has the usual orientation. Edges are geodesics: circular arcs orthogonal
to the unit circle, or straight segments through the centre.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Iterable

import drawsvg as draw
import numpy as np

from core.disc import TWO_PI, geodesic_arc
from core.graph import PatchGraph
from core.percolation import ClusterDecomposition, PercolationSample, clusters

logger = logging.getLogger(__name__)

SCALE = 400.0
MARGIN = 30.0
MARK_RADIUS = 1.03

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#17becf", "#8c564b", "#e377c2", "#bcbd22", "#7f7f7f",
)
CLOSED_COLOR = "#d9d9d9"
EDGE_COLOR = "#404040"
MARK_COLOR = "#e6550d"


def to_canvas(z: complex) -> tuple[float, float]:
    return SCALE * z.real, -SCALE * z.imag


def geodesic_element(z1: complex, z2: complex, **style):
    """Line for diameters, otherwise an SVG minor arc along the orthogonal circle."""
    x1, y1 = to_canvas(z1)
    x2, y2 = to_canvas(z2)
    circle = geodesic_arc(z1, z2)
    if circle is None:
        return draw.Line(x1, y1, x2, y2, **style)
    center, rho = circle
    ccw = ((z1 - center).conjugate() * (z2 - center)).imag > 0
    # the y flip turns counterclockwise in the disc into sweep-flag 0
    path = draw.Path(fill="none", **style)
    path.M(x1, y1).A(SCALE * rho, SCALE * rho, 0, 0, 0 if ccw else 1, x2, y2)
    return path


def arc_mark(start: float, length: float, **style):
    """Mark covering [start, start + length] counterclockwise just outside the ideal circle."""
    r = SCALE * MARK_RADIUS
    attrs = dict(fill="none", data_start_angle=f"{start % TWO_PI:.12f}",
                 data_end_angle=f"{(start + length) % TWO_PI:.12f}", **style)
    if length >= TWO_PI:
        return draw.Circle(0, 0, r, **attrs)
    x1, y1 = r * math.cos(start), -r * math.sin(start)
    x2, y2 = r * math.cos(start + length), -r * math.sin(start + length)
    path = draw.Path(**attrs)
    path.M(x1, y1).A(r, r, 0, 1 if length > math.pi else 0, 0, x2, y2)
    return path


def _cluster_colors(dec: ClusterDecomposition) -> dict[int, str]:
    ranked = sorted(zip(dec.cluster_ids.tolist(), dec.sizes.tolist()), key=lambda t: (-t[1], t[0]))
    return {cid: PALETTE[i % len(PALETTE)] for i, (cid, _) in enumerate(ranked)}


def render_scene(
    g: PatchGraph,
    sample: PercolationSample | None = None,
    arcs: Iterable[tuple[float, float]] = (),
    stroke_width: float = 1.0,
) -> draw.Drawing:
    """
    Unit circle, every edge of g as a geodesic and optional ideal-circle arc marks.

    With a sample, open edges take the colour of their cluster (largest cluster
    first in the palette) and closed edges are drawn light grey underneath.
    """
    half = SCALE * MARK_RADIUS + MARGIN
    d = draw.Drawing(2 * half, 2 * half, origin="center")
    d.append(draw.Circle(0, 0, SCALE, fill="none", stroke="black", stroke_width=1.5))

    positions = g.positions
    if sample is None:
        for u, v in g.edges:
            d.append(geodesic_element(complex(positions[u]), complex(positions[v]),
                                      stroke=EDGE_COLOR, stroke_width=stroke_width))
    else:
        dec = clusters(sample)
        colors = _cluster_colors(dec)
        labels = dec.labels
        open_edges = sample.open_edges
        for i in np.flatnonzero(~open_edges):
            u, v = g.edges[i]
            d.append(geodesic_element(complex(positions[u]), complex(positions[v]),
                                      stroke=CLOSED_COLOR, stroke_width=stroke_width * 0.6))
        for i in np.flatnonzero(open_edges):
            u, v = g.edges[i]
            d.append(geodesic_element(complex(positions[u]), complex(positions[v]),
                                      stroke=colors[int(labels[u])], stroke_width=stroke_width * 1.6))

    for start, length in arcs:
        if length > 0:
            d.append(arc_mark(float(start), float(length), stroke=MARK_COLOR, stroke_width=4))
    return d


def save_scene(drawing: draw.Drawing, path: Path) -> Path:
    path = Path(path)
    drawing.save_svg(str(path))
    logger.info("wrote %s", path)
    return path
