import math
import re
import xml.etree.ElementTree as ET

import drawsvg as draw
import numpy as np
import pytest

from core.graph import PatchGraph
from core.percolation import sample
from core.render import (
    CLOSED_COLOR,
    MARK_RADIUS,
    PALETTE,
    SCALE,
    geodesic_element,
    render_scene,
    save_scene,
    to_canvas,
)

NUMBER = re.compile(r"-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?")
SVG_NS = "{http://www.w3.org/2000/svg}"


def svg_of(*elements) -> str:
    d = draw.Drawing(100, 100, origin="center")
    for e in elements:
        d.append(e)
    return d.as_svg()


def path_numbers(svg: str) -> list[list[float]]:
    root = ET.fromstring(svg)
    return [[float(x) for x in NUMBER.findall(p.get("d"))] for p in root.iter(f"{SVG_NS}path")]


def marks(svg: str) -> list[ET.Element]:
    return [e for e in ET.fromstring(svg).iter() if e.get("data-start-angle") is not None]


class TestGeodesics:

    def test_canvas_flips_y(self):
        assert to_canvas(0.5 + 0.25j) == (0.5 * SCALE, -0.25 * SCALE)

    def test_diameter_is_a_line(self):
        svg = svg_of(geodesic_element(0j, 0.5 + 0.5j, stroke="black"))
        assert svg.count("<line") == 1
        assert "<path" not in svg

    def test_arc_sweep_follows_orientation(self):
        # seen from the orthogonal circle's centre, 0.5 -> 0.5i turns clockwise
        forward = path_numbers(svg_of(geodesic_element(0.5 + 0j, 0.5j, stroke="black")))[0]
        backward = path_numbers(svg_of(geodesic_element(0.5j, 0.5 + 0j, stroke="black")))[0]
        x1, y1, rx, ry, _, large, sweep, x2, y2 = forward
        assert (x1, y1) == pytest.approx(to_canvas(0.5 + 0j))
        assert (x2, y2) == pytest.approx(to_canvas(0.5j))
        assert rx == pytest.approx(SCALE * math.sqrt(2.125))
        assert (large, sweep) == (0, 1)
        assert (backward[5], backward[6]) == (0, 0)


class TestRenderScene:

    def test_empty_patch(self):
        g = PatchGraph(layers=[0], positions=[0j], edges=np.zeros((0, 2)), faces=np.zeros((0, 0)), radius=0)
        svg = render_scene(g).as_svg()
        assert svg.count("<circle") == 1
        assert "<path" not in svg
        assert "<line" not in svg

    def test_first_layer_edges_are_diameters(self, pentagonal_r2):
        g = pentagonal_r2.restrict_edges(np.flatnonzero(pentagonal_r2.edges[:, 0] == 0))
        svg = render_scene(g).as_svg()
        assert svg.count("<line") == 5

    def test_every_edge_drawn(self, pentagonal_r2):
        svg = render_scene(pentagonal_r2).as_svg()
        assert svg.count("<line") + svg.count("<path") == pentagonal_r2.n_edges

    def test_open_sample_uses_cluster_colour(self, pentagonal_r2):
        svg = render_scene(pentagonal_r2, sample(pentagonal_r2, 1.0, 0)).as_svg()
        assert PALETTE[0] in svg
        assert CLOSED_COLOR not in svg

    def test_closed_sample_is_grey(self, pentagonal_r2):
        svg = render_scene(pentagonal_r2, sample(pentagonal_r2, 0.0, 0)).as_svg()
        assert CLOSED_COLOR in svg
        assert not any(colour in svg for colour in PALETTE)

    def test_arc_marks(self, pentagonal_r2):
        start, length = 5.8, 1.0
        svg = render_scene(pentagonal_r2, arcs=[(start, length), (1.0, 0.0)]).as_svg()
        found = marks(svg)
        assert len(found) == 1
        mark = found[0]
        assert float(mark.get("data-start-angle")) == pytest.approx(start)
        assert float(mark.get("data-end-angle")) == pytest.approx((start + length) % (2 * math.pi))
        x1, y1, rx, _, _, large, sweep, x2, y2 = [float(x) for x in NUMBER.findall(mark.get("d"))]
        assert rx == pytest.approx(SCALE * MARK_RADIUS)
        assert math.hypot(x1, y1) == pytest.approx(SCALE * MARK_RADIUS)
        assert math.atan2(-y1, x1) % (2 * math.pi) == pytest.approx(start, abs=1e-4)
        assert math.atan2(-y2, x2) % (2 * math.pi) == pytest.approx((start + length) % (2 * math.pi), abs=1e-4)
        assert (large, sweep) == (0, 0)

    def test_long_and_full_marks(self, pentagonal_r2):
        svg = render_scene(pentagonal_r2, arcs=[(0.0, 4.0), (0.0, 2 * math.pi)]).as_svg()
        found = marks(svg)
        assert len(found) == 2
        long_mark = next(e for e in found if e.tag == f"{SVG_NS}path")
        assert float(NUMBER.findall(long_mark.get("d"))[5]) == 1.0
        assert svg.count("<circle") == 2

    def test_save(self, tmp_path, pentagonal_r2):
        path = save_scene(render_scene(pentagonal_r2), tmp_path / "scene.svg")
        assert path.read_text().lstrip().startswith("<?xml")
