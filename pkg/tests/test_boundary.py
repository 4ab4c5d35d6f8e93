import math

import numpy as np
import pytest

from core.boundary import (
    UNITS,
    CellPartition,
    arc_cover,
    cell_partition,
    component_cover,
    end_chains,
    ends_at_radius,
    halfplane_cluster_count,
    largest_gap,
    limit_direction_density,
    one_point_end_statistic,
)
from core.disc import ccw_offset
from core.percolation import PercolationSample, clusters, dual_sample, sample
from core.tiling import Halfplane, dual_graph, halfplane_vertices
from tests.oracles import dfs_components

TWO_PI = 2 * math.pi


def quarters() -> CellPartition:
    bounds = np.array([0, UNITS // 4, UNITS // 2, 3 * UNITS // 4, UNITS], dtype=np.int64)
    return CellPartition(0.0, bounds, np.arange(4))


def eighths() -> CellPartition:
    bounds = np.arange(9, dtype=np.int64) * (UNITS // 8)
    return CellPartition(0.0, bounds, np.arange(8))


def radial_path(g, start: int) -> list[int]:
    """Root, then start, then outward neighbours keeping closest to start's angle."""
    path = [g.root, start]
    target = g.angles[start]
    while g.layers[path[-1]] < g.radius:
        v = path[-1]
        outward = [int(w) for w in g.neighbours(v) if g.layers[w] == g.layers[v] + 1]
        path.append(min(outward, key=lambda w: (abs(math.remainder(g.angles[w] - target, TWO_PI)), w)))
    return path


def flat(arcs) -> list[float]:
    return [x for arc in arcs for x in arc]


def open_paths(g, paths) -> PercolationSample:
    open_edges = np.zeros(g.n_edges, dtype=bool)
    for path in paths:
        for a, b in zip(path, path[1:]):
            open_edges[g.edge_index(a, b)] = True
    return PercolationSample(graph=g, p=0.5, seed=0, open_edges=open_edges)


# ── Cells and covers ──────────────────────────────────────────────────

class TestCellPartition:

    def test_cells_cover_circle(self, pentagonal_r4):
        g = pentagonal_r4
        cells = cell_partition(g)
        assert cells.n_cells == len(g.outer_vertices)
        assert cells.bounds[0] == 0 and cells.bounds[-1] == UNITS
        assert np.all(np.diff(cells.bounds) > 0)
        assert sorted(cells.rank[g.outer_vertices].tolist()) == list(range(cells.n_cells))
        assert np.all(cells.rank[g.layers < g.radius] == -1)

    def test_cell_contains_its_vertex(self, pentagonal_r4):
        g = pentagonal_r4
        cells = cell_partition(g)
        for v in g.outer_vertices:
            k = cells.rank[v]
            start = cells.angle(int(cells.bounds[k]))
            width = (cells.bounds[k + 1] - cells.bounds[k]) * TWO_PI / UNITS
            assert ccw_offset(start, g.angles[v]) < width


class TestArcCover:

    def test_single_cell(self):
        cover = arc_cover(quarters(), [True, False, False, False])
        assert cover.units == UNITS // 4
        assert cover.angular_diameter == pytest.approx(math.pi / 2)
        assert cover.arc_count == 1
        assert flat(cover.arcs) == pytest.approx([0.0, math.pi / 2])

    def test_two_runs(self):
        cover = arc_cover(quarters(), [True, False, True, False])
        assert cover.units == UNITS // 2
        assert cover.arc_count == 2
        assert len(cover.arcs) == 2

    def test_three_runs_drop_smallest_gap(self):
        cover = arc_cover(eighths(), [True, False, True, False, True, False, False, False])
        assert cover.units == UNITS // 2
        assert cover.runs == 3
        assert cover.arc_count == 2
        (s1, l1), (s2, l2) = cover.arcs
        assert (s1, l1) == pytest.approx((math.pi / 2, 3 * math.pi / 4))
        assert (s2, l2) == pytest.approx((0.0, math.pi / 4))

    def test_run_across_origin(self):
        cover = arc_cover(quarters(), [True, False, False, True])
        assert cover.units == UNITS // 2
        assert flat(cover.arcs) == pytest.approx([3 * math.pi / 2, math.pi])

    def test_all_and_nothing(self):
        full = arc_cover(quarters(), [True] * 4)
        assert full.angular_diameter == pytest.approx(TWO_PI)
        assert full.arcs == ((0.0, TWO_PI),)
        empty = arc_cover(quarters(), [False] * 4)
        assert empty.angular_diameter == 0.0
        assert empty.arcs == ()
        assert empty.arc_count == 0

    def test_monotone_under_inclusion(self, pentagonal_r4):
        cells = cell_partition(pentagonal_r4)
        rng = np.random.default_rng(7)
        for _ in range(300):
            small = rng.random(cells.n_cells) < 0.1
            large = small | (rng.random(cells.n_cells) < 0.2)
            assert arc_cover(cells, small).units <= arc_cover(cells, large).units

    def test_interior_vertices_own_nothing(self, pentagonal_r4):
        inner = np.flatnonzero(pentagonal_r4.layers < pentagonal_r4.radius)
        assert component_cover(pentagonal_r4, inner).units == 0


# ── Ends ──────────────────────────────────────────────────────────────

class TestEnds:

    def test_fully_open_has_one_end(self, pentagonal_r5):
        g = pentagonal_r5
        dec = clusters(sample(g, 1.0, 0))
        for r in range(4):
            ends = ends_at_radius(dec, g, 0, r)
            assert len(ends) == 1
            assert ends[0].size == np.count_nonzero(g.layers > r)

    def test_radius_out_of_range(self, pentagonal_r4):
        dec = clusters(sample(pentagonal_r4, 1.0, 0))
        with pytest.raises(ValueError):
            ends_at_radius(dec, pentagonal_r4, 0, 4)
        with pytest.raises(ValueError):
            ends_at_radius(dec, pentagonal_r4, 0, -1)

    def test_cluster_inside_ball(self, pentagonal_r4):
        dec = clusters(sample(pentagonal_r4, 0.0, 0))
        assert ends_at_radius(dec, pentagonal_r4, 0, 1) == []

    def test_matches_dfs(self, pentagonal_r4):
        g = pentagonal_r4
        for seed in range(20):
            s = sample(g, 0.7, seed)
            dec = clusters(s)
            cid = int(dec.cluster_ids[np.argmax(dec.sizes)])
            for r in range(g.radius):
                ends = ends_at_radius(dec, g, cid, r)
                members = np.flatnonzero((dec.labels == cid) & (g.layers > r))
                want = dfs_components(members, g.edges, s.open_edges)
                assert {frozenset(e.vertices.tolist()) for e in ends} == want
                anchors = [e.anchor for e in ends]
                assert anchors == sorted(anchors)


# ── Chains ────────────────────────────────────────────────────────────

class TestEndChains:

    def test_single_path(self, pentagonal_r5):
        g = pentagonal_r5
        path = radial_path(g, int(g.neighbours(g.root)[0]))
        dec = clusters(open_paths(g, [path]))
        chains = end_chains(dec, g, 0, [0, 1, 2, 3])
        assert len(chains) == 1
        chain = chains[0]
        assert chain.alive
        assert chain.radii == (0, 1, 2, 3)
        assert chain.arc_count.tolist() == [1, 1, 1, 1]
        cells = cell_partition(g)
        k = cells.rank[path[-1]]
        width = (cells.bounds[k + 1] - cells.bounds[k]) * TWO_PI / UNITS
        assert chain.angular_diameter.tolist() == pytest.approx([width] * 4)
        assert chain.is_nonincreasing()

    def test_two_branches(self, pentagonal_r5):
        g = pentagonal_r5
        first = g.neighbours(g.root)
        ordered = sorted(first.tolist(), key=lambda v: g.angles[v])
        paths = [radial_path(g, ordered[0]), radial_path(g, ordered[2])]
        assert set(paths[0][1:]).isdisjoint(paths[1][1:])
        dec = clusters(open_paths(g, paths))
        assert len(ends_at_radius(dec, g, 0, 0)) == 2
        chains = end_chains(dec, g, 0, [0, 2, 3])
        assert len(chains) == 2
        assert [c.chain for c in chains] == [0, 1]
        assert all(c.alive for c in chains)
        tips = {frozenset(c.ends[-1].vertices.tolist()) for c in chains}
        assert tips == {frozenset(paths[0][4:]), frozenset(paths[1][4:])}

    def test_chain_dies_inside_patch(self, pentagonal_r5):
        g = pentagonal_r5
        path = radial_path(g, int(g.neighbours(g.root)[0]))[:4]
        dec = clusters(open_paths(g, [path]))
        chains = end_chains(dec, g, 0, [0, 1, 2, 3])
        assert len(chains) == 1
        assert not chains[0].alive
        assert chains[0].radii == (0, 1, 2)
        assert chains[0].terminal_diameter == 0.0

    def test_full_cluster(self, pentagonal_r5):
        dec = clusters(sample(pentagonal_r5, 1.0, 0))
        chains = end_chains(dec, pentagonal_r5, 0, [1, 2, 3])
        assert len(chains) == 1
        assert chains[0].angular_diameter.tolist() == pytest.approx([TWO_PI] * 3)

    @pytest.mark.parametrize("radii", [[], [2, 1], [1, 1], [0, 5]])
    def test_invalid_radii(self, pentagonal_r5, radii):
        dec = clusters(sample(pentagonal_r5, 1.0, 0))
        with pytest.raises(ValueError):
            end_chains(dec, pentagonal_r5, 0, radii)

    def test_diameters_never_grow(self, pentagonal_r5):
        g = pentagonal_r5
        for seed in range(10):
            dec = clusters(sample(g, 0.75, seed))
            for cid in dec.giant_candidates(2):
                for chain in end_chains(dec, g, int(cid), [0, 1, 2, 3]):
                    assert chain.is_nonincreasing()


# ── Statistics ────────────────────────────────────────────────────────

class TestOnePointStatistic:

    def test_fully_open(self, pentagonal_r5):
        decs = [clusters(sample(pentagonal_r5, 1.0, seed)) for seed in range(3)]
        stat = one_point_end_statistic(decs, [1, 2, 3])
        summary = stat.per_p[1.0]
        assert summary["count"] == 3
        assert summary["median"] == pytest.approx(TWO_PI)
        assert summary["median_by_radius"]["1"] == pytest.approx(TWO_PI)
        assert len(stat.rows) == 9
        assert stat.monotonicity_violations == 0
        assert stat.unstable_arc_counts == 0
        assert stat.terminal_arcs[0]["arcs"][0][1] == pytest.approx(TWO_PI)
        assert "1.0" in stat.to_dict()["per_p"]

    def test_fully_closed(self, pentagonal_r5):
        stat = one_point_end_statistic([clusters(sample(pentagonal_r5, 0.0, 0))], [1, 2])
        assert stat.per_p[0.0] == {
            "count": 0, "median": None, "p90": None, "median_by_radius": {"1": None, "2": None},
        }
        assert stat.rows == []


class TestLimitDirections:

    def test_largest_gap(self):
        assert largest_gap([]) == TWO_PI
        assert largest_gap([1.0]) == TWO_PI
        assert largest_gap([0.0, math.pi / 2]) == pytest.approx(3 * math.pi / 2)

    def test_fully_open(self, pentagonal_r4):
        g = pentagonal_r4
        dirs = limit_direction_density(clusters(sample(g, 1.0, 0)), g, sigma=2)
        assert len(dirs.angles) == len(g.outer_vertices)
        assert dirs.largest_gap < math.pi / 4

    def test_fully_closed(self, pentagonal_r4):
        g = pentagonal_r4
        dec = clusters(sample(g, 0.0, 0))
        assert len(limit_direction_density(dec, g, sigma=2).angles) == 0
        assert limit_direction_density(dec, g, sigma=2).largest_gap == TWO_PI
        assert len(limit_direction_density(dec, g, sigma=1).angles) == len(g.outer_vertices)

    def test_sigma_must_be_positive(self, pentagonal_r4):
        dec = clusters(sample(pentagonal_r4, 0.5, 0))
        with pytest.raises(ValueError):
            limit_direction_density(dec, pentagonal_r4, sigma=0)


class TestHalfplaneClusters:

    def test_fully_open(self, pentagonal_r4):
        dec = clusters(sample(pentagonal_r4, 1.0, 0))
        assert halfplane_cluster_count(dec, pentagonal_r4, Halfplane(0.0, math.pi), sigma=2) == 1

    def test_fully_closed(self, pentagonal_r4):
        g = pentagonal_r4
        h = Halfplane(0.0, math.pi)
        dec = clusters(sample(g, 0.0, 0))
        assert halfplane_cluster_count(dec, g, h, sigma=2) == 0
        assert halfplane_cluster_count(dec, g, h, sigma=1) == len(halfplane_vertices(g, h))

    def test_sigma_must_be_positive(self, pentagonal_r4):
        dec = clusters(sample(pentagonal_r4, 0.5, 0))
        with pytest.raises(ValueError):
            halfplane_cluster_count(dec, pentagonal_r4, Halfplane(0.0, math.pi), sigma=0)


# ── Dual samples ──────────────────────────────────────────────────────

class TestDualSamples:

    def test_closed_primal_is_open_dual(self, pentagonal_r6):
        d = dual_graph(pentagonal_r6)
        dec = clusters(dual_sample(sample(pentagonal_r6, 0.0, 0), d))
        assert len(dec.cluster_ids) == 1
        assert halfplane_cluster_count(dec, d.graph, Halfplane(0.0, math.pi), sigma=2) == 1
        dirs = limit_direction_density(dec, d.graph, sigma=2)
        assert len(dirs.angles) == len(d.graph.outer_vertices)
        stat = one_point_end_statistic([dec], [0, 1])
        assert stat.per_p[1.0]["median"] == pytest.approx(TWO_PI)
        assert stat.monotonicity_violations == 0

    def test_statistics_on_dual_samples(self, pentagonal_r6):
        d = dual_graph(pentagonal_r6)
        h = Halfplane(0.0, math.pi)
        decs = [clusters(dual_sample(sample(pentagonal_r6, 0.3, seed), d)) for seed in range(3)]
        outer_angles = set(d.graph.angles[d.graph.outer_vertices].tolist())
        for dec in decs:
            assert dec.sample.p == pytest.approx(0.7)
            dirs = limit_direction_density(dec, d.graph, sigma=2)
            assert set(dirs.angles.tolist()) <= outer_angles
            assert 0.0 < dirs.largest_gap <= TWO_PI
            count = halfplane_cluster_count(dec, d.graph, h, sigma=2)
            assert 0 <= count <= len(halfplane_vertices(d.graph, h))
        stat = one_point_end_statistic(decs, [0, 1])
        assert list(stat.per_p) == [pytest.approx(0.7)]
        assert stat.monotonicity_violations == 0
        for row in stat.rows:
            assert row[4] in (0, 1)
            assert 0.0 <= row[6] <= TWO_PI
