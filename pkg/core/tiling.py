"""
Regular {p,q} hyperbolic tilings: combinatorial balls around a vertex, their
Poincaré-disc embedding, dual patches, halfplanes and edge isoperimetry.

Generation glues p-gons one at a time onto the counterclockwise boundary cycle of
a growing disc-shaped patch. Every vertex of layer k is completed (all q faces
glued) before any vertex of layer k+1, so the patch always contains the ball of
radius k+1 with exact graph distances. Coordinates are attached while gluing by
rotating a known neighbour about the vertex by 2*pi/q; they are advisory and
never used for combinatorics.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from core import settings
from core.disc import COORD_TOL, TWO_PI, ccw_offset, rotate_about, translate, translate_inverse
from core.errors import EmptyDual, GenerationError, InvalidSymbol, PatchTooLarge, TruncatedBoundary
from core.graph import PatchGraph

logger = logging.getLogger(__name__)


# ── Symbol and metrics ─────────────────────────────────────────────────

@dataclass(frozen=True)
class SchlafliSymbol:
    """Tiling by regular p-gons, q of them meeting at every vertex."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 3 or self.q < 3:
            raise InvalidSymbol(f"{{{self.p},{self.q}}}: p and q must both be at least 3")
        if (self.p - 2) * (self.q - 2) <= 4:
            kind = "Euclidean" if (self.p - 2) * (self.q - 2) == 4 else "spherical"
            raise InvalidSymbol(f"{{{self.p},{self.q}}} is {kind}, not hyperbolic")

    @classmethod
    def parse(cls, text: str) -> SchlafliSymbol:
        """Parse "p,q" (braces optional)."""
        parts = text.strip().strip("{}").split(",")
        try:
            p, q = (int(x) for x in parts)
        except ValueError:
            raise InvalidSymbol(f"cannot parse Schläfli symbol {text!r}; expected P,Q") from None
        return cls(p, q)

    def dual(self) -> SchlafliSymbol:
        return SchlafliSymbol(self.q, self.p)

    def __str__(self) -> str:
        return f"{{{self.p},{self.q}}}"


@dataclass(frozen=True)
class TilingMetrics:
    edge_length: float
    circumradius: float
    interior_angle: float

    @property
    def root_face_center(self) -> complex:
        """Center of the root face: the face spanning angles [0, interior_angle] at the origin."""
        return math.tanh(self.circumradius / 2.0) * complex(
            math.cos(self.interior_angle / 2.0), math.sin(self.interior_angle / 2.0)
        )


def tiling_metrics(symbol: SchlafliSymbol) -> TilingMetrics:
    p, q = symbol.p, symbol.q
    cosh_edge = (math.cos(math.pi / q) ** 2 + math.cos(TWO_PI / p)) / math.sin(math.pi / q) ** 2
    cosh_circ = 1.0 / (math.tan(math.pi / p) * math.tan(math.pi / q))
    return TilingMetrics(
        edge_length=math.acosh(cosh_edge),
        circumradius=math.acosh(cosh_circ),
        interior_angle=TWO_PI / q,
    )


# ── Graph types ────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class TilingGraph(PatchGraph):
    symbol: SchlafliSymbol

    def describe(self) -> str:
        return f"{self.symbol.p},{self.symbol.q}/R{self.radius}/V{self.n_vertices}/E{self.n_edges}/F{self.n_faces}"


@dataclass(frozen=True, eq=False)
class DualPatch:
    graph: TilingGraph
    edge_bijection: np.ndarray
    """primal edge index -> dual edge index, -1 where undefined"""
    dual_to_primal: np.ndarray

    def dual_edge(self, primal_edge: int) -> int:
        return int(self.edge_bijection[primal_edge])

    def primal_edge(self, dual_edge: int) -> int:
        return int(self.dual_to_primal[dual_edge])

    @property
    def domain(self) -> np.ndarray:
        """Primal edge indices on which the bijection is defined."""
        return np.flatnonzero(self.edge_bijection >= 0)


@dataclass(frozen=True)
class Halfplane:
    """
    Closed side of the geodesic with ideal endpoints at angles theta1, theta2.

    side=+1 selects the side whose ideal arc runs counterclockwise from theta1 to
    theta2; side=-1 the side whose arc runs from theta2 to theta1.
    """

    theta1: float
    theta2: float
    side: int = 1

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(self.theta1) % TWO_PI)
        object.__setattr__(self, "theta2", float(self.theta2) % TWO_PI)
        if self.side not in (1, -1):
            raise ValueError("side must be +1 or -1")
        if abs(self.theta1 - self.theta2) <= COORD_TOL or abs(abs(self.theta1 - self.theta2) - TWO_PI) <= COORD_TOL:
            raise ValueError("halfplane endpoints must be distinct ideal points")

    @property
    def arc(self) -> tuple[float, float]:
        """Ideal arc (start, length), counterclockwise."""
        start, end = (self.theta1, self.theta2) if self.side == 1 else (self.theta2, self.theta1)
        return start, ccw_offset(start, end)

    @property
    def arc_length(self) -> float:
        return self.arc[1]

    def complement_side(self) -> Halfplane:
        return Halfplane(self.theta1, self.theta2, -self.side)

    def _level(self, z) -> np.ndarray:
        start, length = self.arc
        mid = start + length / 2.0
        z = np.asarray(z, dtype=np.complex128)
        return math.cos(length / 2.0) * (np.abs(z) ** 2 + 1.0) - 2.0 * np.real(z * complex(math.cos(mid), -math.sin(mid)))

    def contains(self, z, tol: float = COORD_TOL) -> np.ndarray:
        """Vectorized closed side test; nonpositive level means inside."""
        return self._level(z) <= tol

    def depth(self, z) -> np.ndarray:
        """sinh of the signed hyperbolic distance from z to the bounding geodesic, positive inside."""
        z = np.asarray(z, dtype=np.complex128)
        return -self._level(z) / ((1.0 - np.abs(z) ** 2) * math.sin(self.arc_length / 2.0))

    def contains_angle(self, theta: float, tol: float = COORD_TOL) -> bool:
        start, length = self.arc
        offset = ccw_offset(start, theta)
        return offset <= length + tol or offset >= TWO_PI - tol

    def contains_halfplane(self, other: Halfplane, tol: float = COORD_TOL) -> bool:
        """Closed halfplanes nest exactly when their ideal arcs do."""
        start, length = self.arc
        o_start, o_length = other.arc
        offset = ccw_offset(start, o_start)
        if offset >= TWO_PI - tol:
            offset -= TWO_PI
        return offset >= -tol and offset + o_length <= length + tol

    def image(self, isometry) -> Halfplane:
        """Image under an orientation-preserving isometry (anything with apply(angle))."""
        return Halfplane(isometry.apply(self.theta1), isometry.apply(self.theta2), self.side)


# ── Generation ─────────────────────────────────────────────────────────

class _Grower:
    """Mutable face-gluing state; discarded once the patch is truncated."""

    def __init__(self, symbol: SchlafliSymbol):
        self.p, self.q = symbol.p, symbol.q
        self.turn = -TWO_PI / self.q
        metrics = tiling_metrics(symbol)
        self.adj: list[list[int]] = []
        self.pos: list[complex] = []
        self.dist: list[float] = []
        self.next: list[int] = []
        self.prev: list[int] = []
        self.on_boundary: list[bool] = []
        self.faces: list[tuple[int, ...]] = []
        self.layer_sizes: list[int] = []

        # Root face: root at the origin, first edge along the positive real axis.
        first = [0j, complex(math.tanh(metrics.edge_length / 2.0), 0.0)]
        for _ in range(self.p - 2):
            first.append(rotate_about(first[-1], self.turn, first[-2]))
        for z in first:
            self._new_vertex(z)
        for i in range(self.p):
            a, b = i, (i + 1) % self.p
            self.adj[a].append(b)
            self.adj[b].append(a)
            self.next[a], self.prev[b] = b, a
        self.faces.append(tuple(range(self.p)))
        self.dist[0] = 0
        self._relax([0])

    def _new_vertex(self, z: complex) -> int:
        v = len(self.pos)
        self.adj.append([])
        self.pos.append(z)
        self.dist.append(math.inf)
        self.next.append(-1)
        self.prev.append(-1)
        self.on_boundary.append(True)
        return v

    def _relax(self, sources: Iterable[int]) -> None:
        queue = deque(sources)
        dist, adj = self.dist, self.adj
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for w in adj[u]:
                if dist[w] > du:
                    dist[w] = du
                    queue.append(w)

    def deficit(self, v: int) -> int:
        return self.q - len(self.adj[v])

    def glue(self, v: int) -> None:
        """Glue the face lying outside boundary edge (v, next(v))."""
        nxt, prv = self.next, self.prev
        s, t = v, nxt[v]
        run = [s, t]
        while self.deficit(s) == 0:
            s = prv[s]
            run.insert(0, s)
        while self.deficit(t) == 0:
            t = nxt[t]
            run.append(t)
        k = len(run) - 1
        n_new = self.p - k - 1
        if n_new < 0 or s == t:
            raise GenerationError(f"face over edge ({v}, {nxt[v]}) would need {k} boundary edges")

        new: list[int] = []
        back, here = run[1], s
        for _ in range(n_new):
            y = self._new_vertex(rotate_about(self.pos[here], self.turn, self.pos[back]))
            new.append(y)
            back, here = here, y
        chain = [s, *new, t]
        for a, b in zip(chain, chain[1:]):
            self.adj[a].append(b)
            self.adj[b].append(a)
            nxt[a], prv[b] = b, a
        for w in run[1:-1]:
            self.on_boundary[w] = False
        self.faces.append((s, *new, t, *reversed(run[1:-1])))
        self._relax([s, t])

    def grow(self, radius: int, cap: int) -> None:
        for layer in range(radius):
            for v in self._boundary_layer(layer):
                while self.on_boundary[v]:
                    self.glue(v)
            # Every vertex at distance <= layer+1 is now present with its exact distance.
            size = sum(1 for d in self.dist if d <= layer + 1)
            self.layer_sizes.append(size)
            if size > cap:
                raise PatchTooLarge(
                    f"ball of radius {layer + 1} already holds {size} vertices (cap {cap})",
                    vertex_count=size,
                )
            logger.debug("completed layer %d: %d vertices within distance %d", layer, size, layer + 1)

    def _boundary_layer(self, layer: int) -> list[int]:
        """Boundary vertices at the given distance, in boundary order."""
        start = next(
            (v for v in range(len(self.pos)) if self.on_boundary[v] and self.dist[v] == layer),
            None,
        )
        if start is None:
            return []
        ordered = [start]
        v = self.next[start]
        while v != start:
            if self.dist[v] == layer:
                ordered.append(v)
            v = self.next[v]
        return ordered


def generate_tiling(symbol: SchlafliSymbol, radius: int, cap: int | None = None) -> TilingGraph:
    """
    Combinatorial ball of the given radius around a vertex of the {p,q} tiling.

    Vertices are numbered by (layer, creation order), so the root is vertex 0 and the
    result is fully determined by (symbol, radius). Only faces with all p vertices
    inside the ball are kept.

    Args:
        symbol: Hyperbolic {p,q} symbol.
        radius: Graph distance from the root to the outermost layer.
        cap: Vertex limit; defaults to HYPERPERC_PATCH_CAP.

    Returns:
        TilingGraph with exact layers 0..radius and the closed p-gon faces.

    Raises:
        PatchTooLarge: the ball would exceed the cap.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    cap = settings.patch_cap() if cap is None else cap
    grower = _Grower(symbol)
    grower.grow(radius, cap)

    dist = np.asarray(grower.dist)
    kept = np.flatnonzero(dist <= radius)
    order = kept[np.lexsort((kept, dist[kept]))]
    if len(order) > cap:
        raise PatchTooLarge(f"patch of radius {radius} holds {len(order)} vertices (cap {cap})", vertex_count=len(order))
    renumber = np.full(len(dist), -1, dtype=np.int64)
    renumber[order] = np.arange(len(order))

    pairs = [(a, b) for a, nbrs in enumerate(grower.adj) for b in nbrs if a < b]
    edges = renumber[np.asarray(pairs, dtype=np.int64).reshape(-1, 2)]
    edges = edges[(edges >= 0).all(axis=1)]
    edges = np.sort(edges, axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]

    faces = renumber[np.asarray(grower.faces, dtype=np.int64)]
    faces = faces[(faces >= 0).all(axis=1)]

    g = TilingGraph(
        layers=dist[order].astype(np.int64),
        positions=np.asarray(grower.pos, dtype=np.complex128)[order],
        edges=edges,
        faces=faces,
        radius=radius,
        symbol=symbol,
    )
    logger.info("generated %s tiling ball: %s", symbol, g.describe())
    return g


# ── Dual ───────────────────────────────────────────────────────────────

def face_centers(g: TilingGraph) -> np.ndarray:
    """
    Disc position of each face center: the image of the root face center under the
    isometry taking (0, positive real axis) to (first vertex, direction of second vertex).
    """
    c_root = tiling_metrics(g.symbol).root_face_center
    centers = np.empty(g.n_faces, dtype=np.complex128)
    for i, face in enumerate(g.faces):
        z0, z1 = complex(g.positions[face[0]]), complex(g.positions[face[1]])
        w = translate_inverse(z0, z1)
        rot = w / abs(w)
        centers[i] = translate(z0, c_root * rot)
    return centers


def _vertex_face_cycles(g: TilingGraph) -> list[tuple[int, list[int]]]:
    """Counterclockwise cycle of faces around every vertex surrounded by q closed faces."""
    q = g.symbol.q
    face_of_dart: dict[tuple[int, int], int] = {}
    pred_in_face: dict[tuple[int, int], int] = {}
    first_face: dict[int, int] = {}
    count = np.zeros(g.n_vertices, dtype=np.int64)
    for f, face in enumerate(g.faces):
        k = len(face)
        for j in range(k):
            a, b = int(face[j]), int(face[(j + 1) % k])
            face_of_dart[(a, b)] = f
            pred_in_face[(f, b)] = a
            first_face.setdefault(b, f)
        np.add.at(count, face, 1)

    cycles = []
    for v in np.flatnonzero(count == q):
        v = int(v)
        start = first_face[v]
        cycle = [start]
        f = start
        while True:
            f = face_of_dart.get((v, pred_in_face[(f, v)]), -1)
            if f < 0 or f == start:
                break
            cycle.append(f)
        if f == start and len(cycle) == q:
            cycles.append((v, cycle))
    return cycles


def dual_graph(g: TilingGraph) -> DualPatch:
    """
    Dual patch over the closed faces of g.

    Dual vertex i is face i of g; a dual edge joins two faces sharing a primal edge,
    and dual edges are numbered in primal edge order. Dual faces are the cycles of
    faces around primal vertices whose q faces are all closed.

    Layers are dual graph distances from face 0, which contains the primal root, cut
    off at the first distance holding a face with fewer than p closed neighbours.
    That distance is the dual radius: every face below it has all p neighbours and an
    exact layer, and every face at or beyond it sits in the outermost layer.
    """
    if g.n_faces == 0:
        raise EmptyDual(f"{g.describe()} has no closed faces")

    sides: dict[tuple[int, int], list[int]] = {}
    for f, face in enumerate(g.faces):
        k = len(face)
        for j in range(k):
            a, b = int(face[j]), int(face[(j + 1) % k])
            sides.setdefault((min(a, b), max(a, b)), []).append(f)

    bijection = np.full(g.n_edges, -1, dtype=np.int64)
    dual_edges: list[tuple[int, int]] = []
    dual_to_primal: list[int] = []
    for i, (u, v) in enumerate(g.edges):
        shared = sides.get((int(u), int(v)), [])
        if len(shared) == 2:
            bijection[i] = len(dual_edges)
            dual_edges.append((min(shared), max(shared)))
            dual_to_primal.append(i)

    edges = np.asarray(dual_edges, dtype=np.int64).reshape(-1, 2)
    n = g.n_faces
    cycles = _vertex_face_cycles(g)
    faces = np.asarray([cycle for _, cycle in cycles], dtype=np.int64).reshape(len(cycles), g.symbol.q)

    layers = np.zeros(n, dtype=np.int64)
    if len(edges):
        skeleton = PatchGraph(np.zeros(n), np.zeros(n, dtype=np.complex128), edges, np.zeros((0, 0)), 0)
        dist = shortest_path(skeleton.adjacency, unweighted=True, indices=0)
        if not np.all(np.isfinite(dist)):
            raise GenerationError("closed faces of the patch do not form a connected dual")
        layers = dist.astype(np.int64)
    elif n > 1:
        raise GenerationError("closed faces of the patch do not form a connected dual")
    degrees = np.bincount(edges.ravel(), minlength=n)
    radius = int(layers[degrees < g.faces.shape[1]].min(initial=layers.max()))
    layers = np.minimum(layers, radius)

    dual = TilingGraph(
        layers=layers,
        positions=face_centers(g),
        edges=edges,
        faces=faces,
        radius=radius,
        symbol=g.symbol.dual(),
    )
    logger.info("dual of %s: %s", g.describe(), dual.describe())
    return DualPatch(graph=dual, edge_bijection=bijection, dual_to_primal=np.asarray(dual_to_primal, dtype=np.int64))


# ── Isoperimetry ───────────────────────────────────────────────────────

def _check_connected(g: PatchGraph, vertices: np.ndarray) -> None:
    sub = g.adjacency[vertices][:, vertices]
    n_comp, _ = connected_components(sub, directed=False)
    if n_comp != 1:
        raise ValueError(f"vertex set of size {len(vertices)} is not connected")


def isoperimetric_ratios(g: PatchGraph, sets: Iterable[Iterable[int]]) -> list[float]:
    """
    |boundary(V0)| / |V0| for each sampled set, where the edge boundary counts edges
    with exactly one endpoint in V0. Sets must avoid the outermost layer, where the
    patch truncates degrees.
    """
    degrees = g.degrees
    ratios = []
    for raw in sets:
        vertices = np.unique(np.asarray(list(raw), dtype=np.int64))
        if len(vertices) == 0:
            raise ValueError("sampled vertex set is empty")
        if np.any(g.layers[vertices] >= g.radius):
            raise TruncatedBoundary(
                f"sampled set of size {len(vertices)} touches layer {g.radius}; its edge boundary is truncated"
            )
        _check_connected(g, vertices)
        inside = np.zeros(g.n_vertices, dtype=bool)
        inside[vertices] = True
        internal = int(np.count_nonzero(inside[g.edges[:, 0]] & inside[g.edges[:, 1]]))
        boundary = int(degrees[vertices].sum()) - 2 * internal
        ratios.append(boundary / len(vertices))
    return ratios


def combinatorial_ball(g: PatchGraph, center: int, r: int) -> np.ndarray:
    dist = shortest_path(g.adjacency, unweighted=True, indices=center)
    return np.flatnonzero(dist <= r)


def sample_connected_sets(g: PatchGraph, count: int, max_size: int, seed: int = 0) -> Iterator[np.ndarray]:
    """
    Random connected interior sets grown from a random interior vertex by repeatedly
    adding a uniformly chosen frontier vertex. Sizes are uniform on [1, max_size].
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    interior = np.flatnonzero(g.layers < g.radius)
    if len(interior) == 0:
        return
    for _ in range(count):
        target = int(rng.integers(1, max_size + 1))
        members = [int(rng.choice(interior))]
        seen = set(members)
        frontier: list[int] = []

        def extend(v: int) -> None:
            for w in g.neighbours(v):
                w = int(w)
                if w not in seen and g.layers[w] < g.radius:
                    seen.add(w)
                    frontier.append(w)

        extend(members[0])
        while len(members) < target and frontier:
            pick = frontier.pop(int(rng.integers(len(frontier))))
            members.append(pick)
            extend(pick)
        yield np.asarray(sorted(members), dtype=np.int64)


# ── Halfplanes ─────────────────────────────────────────────────────────

def halfplane_vertices(g: PatchGraph, h: Halfplane) -> np.ndarray:
    """Indices of vertices whose disc position lies in the closed halfplane."""
    return np.flatnonzero(h.contains(g.positions))
