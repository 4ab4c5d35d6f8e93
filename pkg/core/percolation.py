"""
Bernoulli bond percolation on patch graphs.

Edge marks come from a counter-based generator: numpy's Philox keyed by the seed,
so the mark of edge i is the i-th uniform draw of that stream and depends only on
(seed, i). An edge is open at p exactly when its mark is below p, which couples all
p on one seed. Sweeps insert edges in mark order into a union-find and snapshot
cluster statistics at every grid point.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from core import settings
from core.errors import EstimatorDegenerate, InvalidSweepSpec
from core.graph import PatchGraph
from core.tiling import DualPatch
from core.unionfind import component_labels, sweep_kernel

logger = logging.getLogger(__name__)

N_ANCHORS = 16
MAX_SEED = 2 ** 64 - 1


def edge_marks(seed: int, n_edges: int) -> np.ndarray:
    """Uniform marks in [0, 1) for edges 0..n_edges-1, keyed by seed."""
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed)).random(n_edges)


def default_tau(n_outer: int) -> int:
    """Giant-candidate threshold: max(2, ceil(1% of the outermost layer))."""
    return max(2, math.ceil(0.01 * n_outer))


def anchor_vertices(g: PatchGraph, count: int = N_ANCHORS) -> np.ndarray:
    """`count` outermost-layer vertices equally spaced in angle order (all of them if fewer)."""
    outer = g.outer_vertices
    ordered = outer[np.lexsort((outer, g.angles[outer]))]
    if len(ordered) <= count:
        return ordered.astype(np.int64)
    picks = (np.arange(count) * len(ordered)) // count
    return ordered[picks].astype(np.int64)


# ── Samples and clusters ───────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PercolationSample:
    graph: PatchGraph = field(repr=False)
    p: float
    seed: int
    open_edges: np.ndarray

    @property
    def graph_ref(self) -> str:
        return self.graph.describe()

    @property
    def n_open(self) -> int:
        return int(np.count_nonzero(self.open_edges))


def sample(g: PatchGraph, p: float, seed: int) -> PercolationSample:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    open_edges = edge_marks(seed, g.n_edges) < p
    open_edges.setflags(write=False)
    return PercolationSample(graph=g, p=float(p), seed=int(seed), open_edges=open_edges)


@dataclass(frozen=True, eq=False)
class ClusterDecomposition:
    """
    Clusters of a sample. A cluster id is the smallest vertex index in the cluster;
    cluster_ids, sizes and boundary_incidence are aligned arrays sorted by id.
    """

    sample: PercolationSample = field(repr=False)
    labels: np.ndarray
    cluster_ids: np.ndarray
    sizes: np.ndarray
    boundary_incidence: np.ndarray

    @property
    def graph(self) -> PatchGraph:
        return self.sample.graph

    @property
    def open_edges(self) -> np.ndarray:
        return self.sample.open_edges

    def _slot(self, cluster_id: int) -> int:
        i = int(np.searchsorted(self.cluster_ids, cluster_id))
        if i >= len(self.cluster_ids) or self.cluster_ids[i] != cluster_id:
            raise KeyError(f"no cluster with id {cluster_id}")
        return i

    def size_of(self, cluster_id: int) -> int:
        return int(self.sizes[self._slot(cluster_id)])

    def incidence_of(self, cluster_id: int) -> int:
        return int(self.boundary_incidence[self._slot(cluster_id)])

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)

    def giant_candidates(self, tau: int) -> np.ndarray:
        return self.cluster_ids[self.boundary_incidence >= tau]


def clusters(s: PercolationSample) -> ClusterDecomposition:
    g = s.graph
    labels = component_labels(g.n_vertices, g.edges, s.open_edges)
    ids, inverse, sizes = np.unique(labels, return_inverse=True, return_counts=True)
    incidence = np.bincount(inverse, weights=g.outer_mask.astype(np.float64), minlength=len(ids)).astype(np.int64)
    return ClusterDecomposition(
        sample=s, labels=labels, cluster_ids=ids, sizes=sizes.astype(np.int64), boundary_incidence=incidence
    )


def dual_sample(s: PercolationSample, d: DualPatch) -> PercolationSample:
    """Dual process: a dual edge is open exactly when its primal edge is closed."""
    if len(d.edge_bijection) != s.graph.n_edges:
        raise ValueError("dual patch was not built from this sample's graph")
    open_edges = ~s.open_edges[d.dual_to_primal]
    open_edges.setflags(write=False)
    return PercolationSample(graph=d.graph, p=1.0 - s.p, seed=s.seed, open_edges=open_edges)


# ── Sweeps ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-seed traces of one coupled sweep; every statistic array has shape (seeds, grid)."""

    graph_ref: str
    radius: int
    n_vertices: int
    n_edges: int
    n_outer: int
    p_grid: np.ndarray
    seeds: tuple[int, ...]
    tau: int
    largest: np.ndarray
    second: np.ndarray
    giants: np.ndarray
    root_mass: np.ndarray
    pairs_connected: np.ndarray

    @property
    def root_to_boundary(self) -> np.ndarray:
        return self.root_mass > 0

    @property
    def unique_giant(self) -> np.ndarray:
        return self.giants == 1

    def mean(self, statistic: str) -> np.ndarray:
        return np.asarray(getattr(self, statistic), dtype=np.float64).mean(axis=0)

    def rows(self):
        """(p, seed, largest, second, giants, root_to_boundary, pairs_connected, unique_giant), seed-major."""
        reach, unique = self.root_to_boundary, self.unique_giant
        for i, seed in enumerate(self.seeds):
            for j, p in enumerate(self.p_grid):
                yield (
                    float(p), seed, int(self.largest[i, j]), int(self.second[i, j]), int(self.giants[i, j]),
                    int(reach[i, j]), float(self.pairs_connected[i, j]), int(unique[i, j]),
                )


def _validate_sweep(seeds: Sequence[int], p_grid: Sequence[float], tau: int) -> np.ndarray:
    if len(seeds) == 0:
        raise InvalidSweepSpec("seed list is empty")
    grid = np.asarray(p_grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise InvalidSweepSpec("p grid is empty")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise InvalidSweepSpec("p grid values must lie in [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise InvalidSweepSpec("p grid must be strictly ascending")
    if tau < 1:
        raise InvalidSweepSpec(f"tau must be at least 1, got {tau}")
    return grid


def sweep_marks(g: PatchGraph, marks: np.ndarray, p_grid: np.ndarray, tau: int, anchors: np.ndarray):
    """Run the coupled sweep for one explicit mark vector."""
    order = np.argsort(marks, kind="stable")
    counts = np.searchsorted(marks[order], p_grid, side="left")
    return sweep_kernel(g.n_vertices, g.edges, order, counts, g.outer_mask, anchors, tau, g.root)


def sweep(
    g: PatchGraph,
    seeds: Sequence[int],
    p_grid: Sequence[float],
    tau: int | None = None,
    workers: int | None = None,
) -> SweepResult:
    """
    Coupled sweep over the grid for every seed. Seeds run on a thread pool; results
    are merged in seed order.

    Args:
        g: Patch to percolate.
        seeds: Sample seeds; one coupled run per seed.
        p_grid: Ascending values of p in [0, 1].
        tau: Giant-candidate threshold; defaults to default_tau of the outermost layer.
        workers: Thread count; defaults to HYPERPERC_WORKERS.

    Returns:
        SweepResult with (seed, p) arrays of every recorded statistic.
    """
    tau = default_tau(len(g.outer_vertices)) if tau is None else int(tau)
    grid = _validate_sweep(seeds, p_grid, tau)
    workers = settings.default_workers() if workers is None else workers
    anchors = anchor_vertices(g)

    def run(seed: int):
        return sweep_marks(g, edge_marks(seed, g.n_edges), grid, tau, anchors)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run, seeds))
    else:
        traces = [run(seed) for seed in seeds]

    stacked = [np.stack([t[k] for t in traces]) for k in range(5)]
    result = SweepResult(
        graph_ref=g.describe(),
        radius=g.radius,
        n_vertices=g.n_vertices,
        n_edges=g.n_edges,
        n_outer=len(g.outer_vertices),
        p_grid=grid,
        seeds=tuple(int(s) for s in seeds),
        tau=tau,
        largest=stacked[0],
        second=stacked[1],
        giants=stacked[2],
        root_mass=stacked[3],
        pairs_connected=stacked[4],
    )
    logger.info("swept %s over %d seeds x %d grid points (tau=%d)", result.graph_ref, len(seeds), len(grid), tau)
    return result


# ── Estimators ─────────────────────────────────────────────────────────

def crossing_point(p_grid, values, level: float) -> float:
    """
    First p at which the nondecreasing envelope of values reaches level, by linear
    interpolation. A flat run sitting exactly at level resolves to its midpoint.
    """
    x = np.asarray(p_grid, dtype=np.float64)
    y = np.maximum.accumulate(np.asarray(values, dtype=np.float64))
    hits = np.flatnonzero(y >= level)
    if len(hits) == 0:
        raise EstimatorDegenerate(f"curve never reaches {level} (max {y.max():.4g})")
    i = int(hits[0])
    if y[i] == level:
        j = i
        while j + 1 < len(y) and y[j + 1] == level:
            j += 1
        return float((x[i] + x[j]) / 2.0)
    if i == 0:
        raise EstimatorDegenerate(f"curve already exceeds {level} at p={x[0]:.4g}")
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


@dataclass(frozen=True)
class ThresholdEstimate:
    value: float
    uncertainty: float
    crossings: dict[int, float]
    method: str
    extrapolated: bool
    mean_giants: dict[int, list[float]] | None = None

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "uncertainty": self.uncertainty,
            "crossings": {str(r): c for r, c in self.crossings.items()},
            "method": self.method,
            "extrapolated": self.extrapolated,
        }
        if self.mean_giants is not None:
            out["mean_giants"] = {str(r): v for r, v in self.mean_giants.items()}
        return out


def _extrapolate(crossings: dict[int, float]) -> tuple[float, float, bool]:
    """
    Two-point Richardson extrapolation in 1/R over the two largest radii, used only when
    the crossing sequence drifts monotonically; otherwise the largest-radius crossing.
    """
    radii = sorted(crossings)
    values = np.array([crossings[r] for r in radii])
    steps = np.diff(values)
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    last = float(values[-1])
    r1, r2 = radii[-2], radii[-1]
    if monotone and r2 != r1:
        limit = (r2 * values[-1] - r1 * values[-2]) / (r2 - r1)
        limit = float(min(max(limit, 0.0), 1.0))
    else:
        limit = last
    spread = float(values.max() - values.min()) / 2.0
    return limit, max(spread, abs(limit - last)), monotone


def _by_radius(results: Sequence[SweepResult]) -> list[SweepResult]:
    if len(results) < 3:
        raise EstimatorDegenerate(f"threshold estimates need sweeps at 3 or more radii, got {len(results)}")
    ordered = sorted(results, key=lambda r: r.radius)
    if len({r.radius for r in ordered}) != len(ordered):
        raise EstimatorDegenerate("sweeps must be at distinct radii")
    return ordered


def estimate_pc(results: Sequence[SweepResult], method: str = "connection") -> ThresholdEstimate:
    """
    Critical probability from sweeps at increasing radii.

    "connection": crossing of the root-to-boundary probability at 1/2.
    "first_moment": crossing of the mean number of outermost-layer vertices in the
    root's cluster at 1.
    """
    ordered = _by_radius(results)
    if method == "connection":
        crossings = {r.radius: crossing_point(r.p_grid, r.mean("root_to_boundary"), 0.5) for r in ordered}
    elif method == "first_moment":
        crossings = {r.radius: crossing_point(r.p_grid, r.mean("root_mass"), 1.0) for r in ordered}
    else:
        raise ValueError(f"unknown p_c method {method!r}")
    value, uncertainty, extrapolated = _extrapolate(crossings)
    logger.info("p_c (%s) crossings %s -> %.4f +- %.4f", method, crossings, value, uncertainty)
    return ThresholdEstimate(value, uncertainty, crossings, method, extrapolated)


def unique_envelope(values) -> np.ndarray:
    """Upper monotone envelope: running minimum taken from the right."""
    y = np.asarray(values, dtype=np.float64)
    return np.minimum.accumulate(y[::-1])[::-1]


def estimate_pu(results: Sequence[SweepResult]) -> ThresholdEstimate:
    """
    Unification probability: crossing at 1/2 of the probability that exactly one giant
    candidate exists, taken on its upper monotone envelope.
    """
    ordered = _by_radius(results)
    crossings = {
        r.radius: crossing_point(r.p_grid, unique_envelope(r.mean("unique_giant")), 0.5) for r in ordered
    }
    value, uncertainty, extrapolated = _extrapolate(crossings)
    giants = {r.radius: [float(x) for x in r.mean("giants")] for r in ordered}
    logger.info("p_u crossings %s -> %.4f +- %.4f", crossings, value, uncertainty)
    return ThresholdEstimate(value, uncertainty, crossings, "unique_giant", extrapolated, mean_giants=giants)
