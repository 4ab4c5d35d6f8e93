"""
Ends of clusters at finite scale and their footprints on the ideal circle.

Compact sets are combinatorial balls around the root. An end at radius r is a
connected component of (cluster minus the ball of radius r); ends at successive
radii nest into a forest whose root-to-leaf paths are end chains.

The ideal circle is partitioned into one cell per outermost-layer vertex (cell
boundaries halfway between angularly consecutive outer vertices). A component
owns the cells of its outer vertices, and its arc set is the cheapest cover of
those cells by at most two arcs: the circle minus its two largest unowned gaps.
Cell boundaries are held as integers in units of 2*pi / 2**40, so a component's
measure never exceeds that of any component containing it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from core.disc import TWO_PI
from core.graph import PatchGraph
from core.percolation import ClusterDecomposition, default_tau
from core.tiling import Halfplane, halfplane_vertices

logger = logging.getLogger(__name__)

UNITS = 2 ** 40
MAX_ARCS = 2


# ── Ends ───────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class EndApproximation:
    cluster_id: int
    radius: int
    vertices: np.ndarray

    @property
    def anchor(self) -> int:
        return int(self.vertices[0])

    @property
    def size(self) -> int:
        return int(len(self.vertices))


def _components(dec: ClusterDecomposition, g: PatchGraph, members: np.ndarray) -> list[np.ndarray]:
    """Open-subgraph components among `members` (sorted), ordered by smallest vertex."""
    local = np.full(g.n_vertices, -1, dtype=np.int64)
    local[members] = np.arange(len(members))
    edges = g.edges[dec.open_edges]
    lu, lv = local[edges[:, 0]], local[edges[:, 1]]
    keep = (lu >= 0) & (lv >= 0)
    m = len(members)
    matrix = sparse.coo_matrix((np.ones(int(keep.sum())), (lu[keep], lv[keep])), shape=(m, m))
    _, comp = connected_components(matrix, directed=False)
    # members are ascending, so first occurrence order is anchor order
    _, first = np.unique(comp, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(len(order), dtype=np.int64)
    relabel[order] = np.arange(len(order))
    comp = relabel[comp]
    grouped = np.argsort(comp, kind="stable")
    cuts = np.flatnonzero(np.diff(comp[grouped])) + 1
    return [members[idx] for idx in np.split(grouped, cuts)]


def ends_at_radius(dec: ClusterDecomposition, g: PatchGraph, cluster_id: int, r: int) -> list[EndApproximation]:
    """Components of the cluster's vertices beyond layer r, ordered by anchor."""
    if not 0 <= r < g.radius:
        raise ValueError(f"end radius must lie in [0, {g.radius}), got {r}")
    members = np.flatnonzero((dec.labels == cluster_id) & (g.layers > r))
    if len(members) == 0:
        return []
    return [EndApproximation(cluster_id, r, comp) for comp in _components(dec, g, members)]


# ── Ideal-circle cells and arc covers ──────────────────────────────────

@dataclass(frozen=True, eq=False)
class CellPartition:
    origin: float
    bounds: np.ndarray
    """integer cell boundaries, bounds[0] == 0 and bounds[-1] == UNITS"""
    rank: np.ndarray
    """vertex -> cell index, -1 off the outermost layer"""

    @property
    def n_cells(self) -> int:
        return len(self.bounds) - 1

    def angle(self, units: int) -> float:
        return float((self.origin + TWO_PI * units / UNITS) % TWO_PI)


@lru_cache(maxsize=8)
def cell_partition(g: PatchGraph) -> CellPartition:
    outer = g.outer_vertices
    rank = np.full(g.n_vertices, -1, dtype=np.int64)
    if len(outer) == 0:
        return CellPartition(0.0, np.array([0, UNITS], dtype=np.int64), rank)
    order = outer[np.lexsort((outer, g.angles[outer]))]
    rank[order] = np.arange(len(order))
    theta = g.angles[order]
    if len(order) == 1:
        return CellPartition(float(theta[0]), np.array([0, UNITS], dtype=np.int64), rank)
    previous = np.concatenate([[theta[-1] - TWO_PI], theta[:-1]])
    mids = (previous + theta) / 2.0
    origin = float(mids[0])
    scaled = np.rint((mids - origin) / TWO_PI * UNITS).astype(np.int64)
    bounds = np.maximum.accumulate(np.concatenate([scaled, [UNITS]]))
    bounds[0] = 0
    bounds = np.minimum(bounds, UNITS)
    return CellPartition(origin % TWO_PI, bounds, rank)


@dataclass(frozen=True)
class ArcCover:
    arcs: tuple[tuple[float, float], ...]
    """(start angle, length) pairs, counterclockwise"""
    units: int
    runs: int

    @property
    def angular_diameter(self) -> float:
        return self.units * (TWO_PI / UNITS)

    @property
    def arc_count(self) -> int:
        return min(self.runs, MAX_ARCS)


def arc_cover(cells: CellPartition, owned: np.ndarray) -> ArcCover:
    """Cover of the owned cells by at most two arcs: the circle minus its two largest unowned gaps."""
    owned = np.asarray(owned, dtype=bool)
    if not owned.any():
        return ArcCover((), 0, 0)
    if owned.all():
        return ArcCover(((cells.origin, TWO_PI),), UNITS, 1)
    bounds = cells.bounds
    before = np.roll(owned, 1)
    gap_starts = np.flatnonzero(~owned & before)
    run_starts = np.flatnonzero(owned & ~before)
    pick = np.searchsorted(run_starts, gap_starts, side="right") % len(run_starts)
    gap_ends = run_starts[pick]
    lengths = np.where(gap_ends > gap_starts, bounds[gap_ends] - bounds[gap_starts], UNITS - bounds[gap_starts] + bounds[gap_ends])
    ranked = sorted(range(len(gap_starts)), key=lambda i: (-int(lengths[i]), int(gap_starts[i])))
    kept = sorted(ranked[:MAX_ARCS], key=lambda i: int(gap_starts[i]))
    units = UNITS - int(sum(int(lengths[i]) for i in kept))

    arcs = []
    for j, i in enumerate(kept):
        following = kept[(j + 1) % len(kept)]
        start_units = int(bounds[gap_ends[i]])
        stop_units = int(bounds[gap_starts[following]])
        span = (stop_units - start_units) % UNITS
        if span == 0 and len(kept) == 1:
            span = UNITS - int(lengths[i])
        arcs.append((cells.angle(start_units), span * (TWO_PI / UNITS)))
    return ArcCover(tuple(arcs), units, len(gap_starts))


def component_cover(g: PatchGraph, vertices: np.ndarray) -> ArcCover:
    cells = cell_partition(g)
    owned = np.zeros(cells.n_cells, dtype=bool)
    ranks = cells.rank[vertices]
    owned[ranks[ranks >= 0]] = True
    return arc_cover(cells, owned)


# ── Chains ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class BoundaryArcEstimate:
    cluster_id: int
    chain: int
    radii: tuple[int, ...]
    ends: tuple[EndApproximation, ...]
    covers: tuple[ArcCover, ...]
    alive: bool

    @property
    def angular_diameter(self) -> np.ndarray:
        return np.array([c.angular_diameter for c in self.covers])

    @property
    def arc_count(self) -> np.ndarray:
        return np.array([c.arc_count for c in self.covers], dtype=np.int64)

    @property
    def arcs(self) -> tuple[tuple[tuple[float, float], ...], ...]:
        return tuple(c.arcs for c in self.covers)

    @property
    def terminal_diameter(self) -> float:
        return self.covers[-1].angular_diameter

    def is_nonincreasing(self) -> bool:
        units = [c.units for c in self.covers]
        return all(b <= a for a, b in zip(units, units[1:]))


def _validate_radii(g: PatchGraph, radii: Sequence[int]) -> list[int]:
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("chain radii must not be empty")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("chain radii must be strictly ascending")
    if radii[0] < 0 or radii[-1] >= g.radius:
        raise ValueError(f"chain radii must lie in [0, {g.radius})")
    return radii


def end_chains(
    dec: ClusterDecomposition, g: PatchGraph, cluster_id: int, radii: Sequence[int]
) -> list[BoundaryArcEstimate]:
    """
    Nesting forest of the cluster's ends across radii, one chain per leaf.

    A chain is alive when its leaf sits at the deepest radius and still reaches the
    outermost layer; chains that die earlier are returned with alive=False.

    Args:
        dec: Cluster decomposition of one sample.
        g: Patch the sample lives on.
        cluster_id: Cluster whose ends are followed.
        radii: Strictly ascending ball radii below the patch radius.

    Returns:
        One BoundaryArcEstimate per leaf of the nesting forest.
    """
    radii = _validate_radii(g, radii)
    levels = [ends_at_radius(dec, g, cluster_id, r) for r in radii]
    children: list[list[list[int]]] = [[[] for _ in level] for level in levels]
    for i in range(1, len(levels)):
        owner = np.full(g.n_vertices, -1, dtype=np.int64)
        for j, end in enumerate(levels[i - 1]):
            owner[end.vertices] = j
        for j, end in enumerate(levels[i]):
            parent = int(owner[end.anchor])
            children[i - 1][parent].append(j)

    covers: dict[tuple[int, int], ArcCover] = {}

    def cover(i: int, j: int) -> ArcCover:
        if (i, j) not in covers:
            covers[(i, j)] = component_cover(g, levels[i][j].vertices)
        return covers[(i, j)]

    chains: list[BoundaryArcEstimate] = []
    deepest = len(levels) - 1

    def walk(i: int, j: int, path: list[tuple[int, int]]) -> None:
        path = path + [(i, j)]
        if i < deepest and children[i][j]:
            for k in children[i][j]:
                walk(i + 1, k, path)
            return
        chain_covers = tuple(cover(a, b) for a, b in path)
        alive = i == deepest and chain_covers[-1].units > 0
        chains.append(
            BoundaryArcEstimate(
                cluster_id=cluster_id,
                chain=len(chains),
                radii=tuple(radii[a] for a, _ in path),
                ends=tuple(levels[a][b] for a, b in path),
                covers=chain_covers,
                alive=alive,
            )
        )

    for j in range(len(levels[0])):
        walk(0, j, [])
    return chains


# ── Statistics ─────────────────────────────────────────────────────────

@dataclass
class OnePointEndStatistic:
    """Terminal angular diameters of alive chains of giant candidates, grouped by p."""

    radii: tuple[int, ...]
    per_p: dict[float, dict] = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)
    """(p, seed, cluster, chain, radius, arc_count, angular_diameter)"""
    terminal_arcs: list[dict] = field(default_factory=list)
    monotonicity_violations: int = 0
    unstable_arc_counts: int = 0
    """alive chains whose arc count changes between the two deepest radii"""

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "per_p": {repr(p): v for p, v in self.per_p.items()},
            "monotonicity_violations": self.monotonicity_violations,
            "unstable_arc_counts": self.unstable_arc_counts,
            "terminal_arcs": self.terminal_arcs,
        }


def _summary(values: list[float]) -> dict:
    if not values:
        return {"count": 0, "median": None, "p90": None}
    arr = np.asarray(values)
    return {"count": len(values), "median": float(np.median(arr)), "p90": float(np.quantile(arr, 0.9))}


def one_point_end_statistic(
    decompositions: Iterable[ClusterDecomposition],
    radii: Sequence[int],
    tau: int | None = None,
) -> OnePointEndStatistic:
    """
    For every giant candidate of every sample, the alive end chains across radii:
    per-p median and 90th percentile of terminal diameters, plus the per-radius
    median along the chains.
    """
    stat = OnePointEndStatistic(radii=tuple(int(r) for r in radii))
    terminal: dict[float, list[float]] = {}
    by_radius: dict[float, dict[int, list[float]]] = {}
    for dec in decompositions:
        g, s = dec.graph, dec.sample
        threshold = default_tau(len(g.outer_vertices)) if tau is None else tau
        terminal.setdefault(s.p, [])
        by_radius.setdefault(s.p, {r: [] for r in stat.radii})
        for cid in dec.giant_candidates(threshold):
            for chain in end_chains(dec, g, int(cid), stat.radii):
                if not chain.alive:
                    continue
                if not chain.is_nonincreasing():
                    stat.monotonicity_violations += 1
                counts = chain.arc_count
                if len(counts) > 1 and counts[-1] != counts[-2]:
                    stat.unstable_arc_counts += 1
                terminal[s.p].append(chain.terminal_diameter)
                for r, c in zip(chain.radii, chain.covers):
                    by_radius[s.p][r].append(c.angular_diameter)
                    stat.rows.append((s.p, s.seed, int(cid), chain.chain, r, c.arc_count, c.angular_diameter))
                stat.terminal_arcs.append({
                    "p": s.p, "seed": s.seed, "cluster": int(cid), "chain": chain.chain,
                    "arcs": [list(a) for a in chain.covers[-1].arcs],
                })
    for p in terminal:
        summary = _summary(terminal[p])
        summary["median_by_radius"] = {
            str(r): (float(np.median(v)) if v else None) for r, v in by_radius[p].items()
        }
        stat.per_p[p] = summary
    if stat.monotonicity_violations:
        logger.warning("%d end chains with increasing angular diameter", stat.monotonicity_violations)
    return stat


@dataclass(frozen=True)
class LimitDirectionSet:
    angles: np.ndarray
    largest_gap: float


def largest_gap(angles) -> float:
    theta = np.sort(np.mod(np.asarray(angles, dtype=np.float64), TWO_PI))
    if len(theta) <= 1:
        return TWO_PI
    gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
    return float(gaps.max())


def _vertex_cluster_sizes(dec: ClusterDecomposition) -> np.ndarray:
    return dec.sizes[np.searchsorted(dec.cluster_ids, dec.labels)]


def limit_direction_density(dec: ClusterDecomposition, g: PatchGraph, sigma: int) -> LimitDirectionSet:
    """Angles of outermost-layer vertices in clusters of at least sigma vertices, and their largest gap."""
    if sigma < 1:
        raise ValueError("sigma must be at least 1")
    big = _vertex_cluster_sizes(dec) >= sigma
    vertices = g.outer_vertices[big[g.outer_vertices]]
    angles = np.sort(g.angles[vertices])
    return LimitDirectionSet(angles=angles, largest_gap=largest_gap(angles))


def halfplane_cluster_count(dec: ClusterDecomposition, g: PatchGraph, h: Halfplane, sigma: int) -> int:
    """Distinct clusters of at least sigma vertices meeting the halfplane."""
    if sigma < 1:
        raise ValueError("sigma must be at least 1")
    vertices = halfplane_vertices(g, h)
    big = _vertex_cluster_sizes(dec)[vertices] >= sigma
    return int(len(np.unique(dec.labels[vertices[big]])))
