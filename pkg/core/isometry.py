"""
Orientation-preserving isometries of the Poincaré disc.

An isometry is z -> (a z + b) / (conj(b) z + conj(a)) with |a|^2 - |b|^2 = 1,
stored as the pair (a, b). Classification follows the fixed points on the ideal
circle, halfplane mapping iterates hyperbolic elements toward an attracting
point, and binary trees are embedded into {p,q} patches by angular sectors.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from core.disc import COORD_TOL, TWO_PI, ccw_offset
from core.errors import MappingNotFound, PatchTooLarge, UnstableClassification
from core.graph import PatchGraph
from core.tiling import Halfplane, SchlafliSymbol, tiling_metrics

logger = logging.getLogger(__name__)

CLASSIFY_TOL = 1e-9
NORM_TOL = 1e-12


# ── Isometries ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MobiusIsometry:
    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        det = abs(a) ** 2 - abs(b) ** 2
        if not det > 0:
            raise ValueError(f"|a|^2 - |b|^2 must be positive to preserve the disc, got {det}")
        scale = 1.0 / math.sqrt(det)
        object.__setattr__(self, "a", a * scale)
        object.__setattr__(self, "b", b * scale)

    # Constructors

    @classmethod
    def identity(cls) -> MobiusIsometry:
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, phi: float) -> MobiusIsometry:
        """z -> exp(i phi) z."""
        return cls(cmath.exp(0.5j * phi), 0.0)

    @classmethod
    def translation(cls, c: complex) -> MobiusIsometry:
        """Hyperbolic translation along the diameter through c, sending 0 to c."""
        c = complex(c)
        if abs(c) >= 1.0:
            raise ValueError("translation target must lie in the open disc")
        s = 1.0 / math.sqrt(1.0 - abs(c) ** 2)
        return cls(s, c * s)

    @classmethod
    def rotation_about(cls, c: complex, phi: float) -> MobiusIsometry:
        t = cls.translation(c)
        return t @ cls.rotation(phi) @ t.inverse()

    @classmethod
    def from_matrix(cls, matrix) -> MobiusIsometry:
        """From [[a, b], [conj(b), conj(a)]] (any positive multiple)."""
        m = np.asarray(matrix, dtype=np.complex128)
        a, b = m[0, 0], m[0, 1]
        scale = max(abs(a), 1.0)
        if abs(m[1, 0] - np.conj(b)) > 1e-9 * scale or abs(m[1, 1] - np.conj(a)) > 1e-9 * scale:
            raise ValueError("matrix does not preserve the unit disc")
        return cls(complex(a), complex(b))

    @classmethod
    def from_upper_half_plane(cls, a: float, b: float, c: float, d: float) -> MobiusIsometry:
        """
        Conjugate of the real transform z -> (a z + b) / (c z + d) by the Cayley map
        K(z) = (i z + 1) / (z + i), which sends the real points 1 and -1 to ideal
        angles 0 and pi.
        """
        if a * d - b * c <= 0:
            raise ValueError("upper half plane transform must have positive determinant")
        return cls(complex(a + d, b - c), complex(b + c, a - d))

    # Group operations

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b.conjugate(), self.a.conjugate()]])

    def __matmul__(self, other: MobiusIsometry) -> MobiusIsometry:
        """(self @ other)(z) == self(other(z))."""
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        return MobiusIsometry(a1 * a2 + b1 * b2.conjugate(), a1 * b2 + b1 * a2.conjugate())

    def inverse(self) -> MobiusIsometry:
        return MobiusIsometry(self.a.conjugate(), -self.b)

    def power(self, n: int) -> MobiusIsometry:
        base = self if n >= 0 else self.inverse()
        result = MobiusIsometry.identity()
        n = abs(n)
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    @property
    def trace(self) -> float:
        return 2.0 * self.a.real

    # Action

    def apply(self, z):
        """
        Act on disc points (complex input) or ideal angles (real input).

        Ideal angles come back as angles in [0, 2*pi).
        """
        if isinstance(z, np.ndarray):
            if np.iscomplexobj(z):
                return self._point(z)
            return np.mod(np.angle(self._point(np.exp(1j * z))), TWO_PI)
        if isinstance(z, complex):
            return self._point(z)
        w = self._point(cmath.exp(1j * float(z)))
        return math.atan2(w.imag, w.real) % TWO_PI

    def _point(self, z):
        return (self.a * z + self.b) / (self.b.conjugate() * z + self.a.conjugate())

    def derivative_modulus(self, z) -> float:
        return 1.0 / abs(self.b.conjugate() * z + self.a.conjugate()) ** 2


def apply(m: MobiusIsometry, z):
    return m.apply(z)


# ── Classification ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class IsometryClass:
    kind: str
    fixed_points: tuple[float, ...] = ()
    attracting: float | None = None
    repelling: float | None = None
    center: complex | None = None
    """interior fixed point of an elliptic element"""


def classify(m: MobiusIsometry, tol: float = CLASSIFY_TOL) -> IsometryClass:
    """
    Classify by the fixed points of z -> m(z), the roots of
    conj(b) z^2 + (conj(a) - a) z - b = 0. Its discriminant is trace^2 - 4:
    two ideal roots (hyperbolic), a double ideal root (parabolic), or one root
    inside the disc (elliptic).
    """
    a, b = m.a, m.b
    if abs(b) <= tol and abs(a.imag) <= tol:
        return IsometryClass("identity")
    half_trace = m.trace / 2.0
    delta = half_trace ** 2 - 1.0
    if abs(delta) <= tol:
        if abs(b) <= tol:
            return IsometryClass("identity")
        z = 1j * a.imag / b.conjugate()
        theta = math.atan2(z.imag, z.real) % TWO_PI
        return IsometryClass("parabolic", fixed_points=(theta,))
    if abs(delta) <= 100.0 * tol:
        other = "hyperbolic" if delta > 0 else "elliptic"
        raise UnstableClassification(
            f"fixed-point discriminant {delta:.3e} lies within the ambiguity band of {tol:g}",
            candidates=("parabolic", other),
        )
    if delta < 0:
        if abs(b) <= tol:
            return IsometryClass("elliptic", center=0j)
        root = math.sqrt(-delta)
        candidates = [1j * (a.imag + root) / b.conjugate(), 1j * (a.imag - root) / b.conjugate()]
        center = min(candidates, key=abs)
        return IsometryClass("elliptic", center=complex(center))

    root = math.sqrt(delta)
    z1 = (1j * a.imag + root) / b.conjugate()
    z2 = (1j * a.imag - root) / b.conjugate()
    # The attracting fixed point is where |m'(z)| < 1.
    if m.derivative_modulus(z1) < m.derivative_modulus(z2):
        att, rep = z1, z2
    else:
        att, rep = z2, z1
    att_theta = math.atan2(att.imag, att.real) % TWO_PI
    rep_theta = math.atan2(rep.imag, rep.real) % TWO_PI
    return IsometryClass(
        "hyperbolic",
        fixed_points=tuple(sorted((att_theta, rep_theta))),
        attracting=att_theta,
        repelling=rep_theta,
    )


# ── Tiling symmetries ──────────────────────────────────────────────────

def symmetry_generators(symbol: SchlafliSymbol) -> list[MobiusIsometry]:
    """
    Orientation-preserving symmetries of the tiling as generated by tiling.generate_tiling:
    rotation by 2*pi/q about the root vertex, rotation by 2*pi/p about the root face
    center, and the half-turn about the midpoint of the root edge.
    """
    metrics = tiling_metrics(symbol)
    midpoint = complex(math.tanh(metrics.edge_length / 4.0), 0.0)
    return [
        MobiusIsometry.rotation(TWO_PI / symbol.q),
        MobiusIsometry.rotation_about(metrics.root_face_center, TWO_PI / symbol.p),
        MobiusIsometry.rotation_about(midpoint, math.pi),
    ]


# ── Halfplane mapping ──────────────────────────────────────────────────

@dataclass
class _Word:
    isometry: MobiusIsometry
    length: int


def _letters(gens: list[MobiusIsometry]) -> list[MobiusIsometry]:
    letters: list[MobiusIsometry] = []
    for g in gens:
        for cand in (g, g.inverse()):
            if not any(np.allclose(cand.matrix, x.matrix, atol=1e-12) or np.allclose(cand.matrix, -x.matrix, atol=1e-12) for x in letters):
                letters.append(cand)
    return letters


def _hyperbolic_pool(letters: list[MobiusIsometry], max_length: int) -> list[tuple[_Word, IsometryClass]]:
    pool = []
    for length in range(1, max_length + 1):
        for combo in product(range(len(letters)), repeat=length):
            m = MobiusIsometry.identity()
            for i in combo:
                m = m @ letters[i]
            try:
                cls = classify(m)
            except UnstableClassification:
                continue
            if cls.kind == "hyperbolic":
                pool.append((_Word(m, length), cls))
    return pool


def _iterate_into(m: MobiusIsometry, gamma: MobiusIsometry, h1: Halfplane, h2: Halfplane, steps: int):
    """Smallest n <= steps with gamma^n m (h1) inside h2, as (isometry, n), else None."""
    current = m
    for n in range(steps + 1):
        if h2.contains_halfplane(h1.image(current)):
            return current, n
        current = gamma @ current
    return None


def map_halfplane_into(
    h1: Halfplane,
    h2: Halfplane,
    gens: list[MobiusIsometry],
    budget: int = 64,
) -> MobiusIsometry:
    """
    A composite of the generators mapping h1 into h2, certified by arc containment.

    Stage one finds a conjugator g by greedy descent into h2 until some g tau g^-1,
    tau hyperbolic, has its attracting point inside the ideal arc of h2. Stage two
    iterates that element on h1; if its repelling point lies in the arc of h1, an
    auxiliary hyperbolic element first pushes h1 away from it. The budget bounds the
    total number of steps (greedy moves plus iterations) spent across both stages.

    Args:
        h1: Halfplane to move.
        h2: Target halfplane.
        gens: Tiling symmetries to compose.
        budget: Step limit across both stages.

    Returns:
        Isometry m with h1.image(m) inside h2.

    Raises:
        MappingNotFound: the budget ran out or the generators hold no hyperbolic element.
    """
    identity = MobiusIsometry.identity()
    if h2.contains_halfplane(h1):
        return identity

    letters = _letters(gens)
    pool = _hyperbolic_pool(letters, max_length=4)
    if not pool:
        raise MappingNotFound("generators produce no hyperbolic element within word length 4")
    moves = [
        _Word(m, length)
        for length in range(1, 4)
        for m in (_compose(letters, combo) for combo in product(range(len(letters)), repeat=length))
    ]

    _, length = h2.arc
    margin = min(length / 8.0, 1e-3)
    spent = 0
    g = _Word(identity, 0)
    gamma = None
    while spent <= budget:
        gamma = _attracting_in(g, pool, h2, margin)
        if gamma is not None:
            break
        here = float(h2.depth(g.isometry.apply(0j)))
        best = max(moves, key=lambda w: float(h2.depth((g.isometry @ w.isometry).apply(0j))))
        if float(h2.depth((g.isometry @ best.isometry).apply(0j))) <= here + 1e-12:
            raise MappingNotFound("greedy descent into the target halfplane stalled")
        g = _Word(g.isometry @ best.isometry, g.length + best.length)
        spent += 1
    if gamma is None:
        raise MappingNotFound(f"no conjugated hyperbolic element points into the target within budget {budget}")

    gamma_m, gamma_cls, gamma_len = gamma
    pushed = identity
    if h1.contains_angle(gamma_cls.repelling, tol=1e-6):
        found = _push_away(h1, gamma_cls.repelling, pool, g, budget - spent)
        if found is None:
            raise MappingNotFound("no auxiliary hyperbolic element clears the repelling point within budget")
        pushed, used = found
        spent += used

    found = _iterate_into(pushed, gamma_m, h1, h2, max(budget - spent, 0))
    if found is None:
        raise MappingNotFound(f"iteration did not certify containment within budget {budget}")
    result, n = found
    logger.info(
        "mapped halfplane into target in %d steps (conjugated word of length %d, power %d)",
        spent + n, gamma_len, n,
    )
    return result


def _compose(letters: list[MobiusIsometry], combo) -> MobiusIsometry:
    m = MobiusIsometry.identity()
    for i in combo:
        m = m @ letters[i]
    return m


def _conjugate(g: _Word, tau: _Word) -> tuple[MobiusIsometry, int]:
    return g.isometry @ tau.isometry @ g.isometry.inverse(), 2 * g.length + tau.length


def _attracting_in(g: _Word, pool, h2: Halfplane, margin: float):
    start, length = h2.arc
    for tau, _ in pool:
        for t in (tau, _Word(tau.isometry.inverse(), tau.length)):
            m, n = _conjugate(g, t)
            try:
                cls = classify(m)
            except UnstableClassification:
                continue
            if cls.kind != "hyperbolic":
                continue
            offset = ccw_offset(start, cls.attracting)
            if margin < offset < length - margin:
                return m, cls, n
    return None


def _push_away(h1: Halfplane, avoid: float, pool, g: _Word, budget: int):
    """Iterate an auxiliary hyperbolic element until h1's arc no longer contains `avoid`."""
    candidates = []
    for tau, _ in pool:
        for t in (tau, _Word(tau.isometry.inverse(), tau.length)):
            for conj in (_conjugate(_Word(MobiusIsometry.identity(), 0), t), _conjugate(g, t)):
                candidates.append(conj)
    for m, _ in candidates:
        try:
            cls = classify(m)
        except UnstableClassification:
            continue
        if cls.kind != "hyperbolic":
            continue
        if h1.contains_angle(cls.repelling, tol=1e-6):
            continue
        if abs(math.remainder(cls.attracting - avoid, TWO_PI)) < 1e-6:
            continue
        current = MobiusIsometry.identity()
        for used in range(1, budget + 1):
            current = m @ current
            if not h1.image(current).contains_angle(avoid, tol=1e-6):
                return current, used
    return None


# ── Binary tree embedding ──────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class BinaryTreeEmbedding:
    """
    Complete binary tree of the given depth inside a patch.

    branch_vertices[i] is the patch vertex of tree node i in heap order (children of i
    are 2i+1 and 2i+2); paths[i] for i >= 1 runs from the parent's branch vertex to
    node i's branch vertex, inclusive.
    """

    graph: PatchGraph
    depth: int
    branch_vertices: np.ndarray
    paths: dict[int, list[int]] = field(default_factory=dict)

    @property
    def vertices(self) -> set[int]:
        used = {int(v) for v in self.branch_vertices}
        for path in self.paths.values():
            used.update(path)
        return used

    def as_graph(self) -> PatchGraph:
        """The abstract tree, positioned at the embedded branch vertices."""
        tree = binary_tree_patch(self.depth)
        return PatchGraph(
            layers=tree.layers,
            positions=self.graph.positions[self.branch_vertices],
            edges=tree.edges,
            faces=tree.faces,
            radius=tree.radius,
        )


def binary_tree_patch(depth: int) -> PatchGraph:
    """
    Complete binary tree as a patch: node i in heap order, layer = tree depth, leaves
    form the outermost layer. Node positions sit on the ray through the center of the
    node's dyadic angular interval.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    n = 2 ** (depth + 1) - 1
    nodes = np.arange(n, dtype=np.int64)
    layers = np.floor(np.log2(nodes + 1) + 1e-12).astype(np.int64)
    offset = nodes + 1 - 2 ** layers
    angle = TWO_PI * (offset + 0.5) / 2.0 ** layers
    positions = (layers / (depth + 1.0)) * np.exp(1j * angle)
    children = nodes[1:]
    edges = np.stack([(children - 1) // 2, children], axis=1)
    return PatchGraph(layers=layers, positions=positions, edges=edges, faces=np.zeros((0, 0)), radius=depth)


def _descendants(g: PatchGraph, v: int, steps: int, allowed) -> dict[int, list[int]]:
    """Vertices reachable from v by `steps` layer-increasing edges through allowed vertices, with one path each."""
    frontier = {v: [v]}
    for _ in range(steps):
        nxt: dict[int, list[int]] = {}
        for u in sorted(frontier):
            for w in g.neighbours(u):
                w = int(w)
                if g.layers[w] == g.layers[u] + 1 and w not in nxt and allowed(w):
                    nxt[w] = frontier[u] + [w]
        frontier = nxt
    return frontier


def embed_binary_tree(g: PatchGraph, depth: int, spacing: int = 2) -> BinaryTreeEmbedding:
    """
    Embed the complete binary tree of the given depth by angular sectors.

    Each tree node owns an angular sector; its two children are chosen among vertices
    `spacing` layers further out reachable by layer-increasing paths inside the
    sector, the leftmost and the rightmost, and the sector is split at the angular
    midpoint between them. Sibling subtrees live in disjoint sectors, so they are
    vertex-disjoint.
    """
    required = depth * spacing
    if g.radius < required:
        raise PatchTooLarge(
            f"embedding a depth-{depth} tree with spacing {spacing} needs radius {required}, patch has {g.radius}",
            required_radius=required,
        )
    n_nodes = 2 ** (depth + 1) - 1
    branch = np.full(n_nodes, -1, dtype=np.int64)
    branch[0] = g.root
    paths: dict[int, list[int]] = {}
    used = {g.root}
    angles = g.angles
    # sector per node: (start angle, width)
    sectors: dict[int, tuple[float, float]] = {0: (0.0, TWO_PI)}

    def in_sector(sector):
        start, width = sector

        def allowed(w: int) -> bool:
            return w not in used and ccw_offset(start, angles[w]) < width

        return allowed

    for node in range(n_nodes):
        left, right = 2 * node + 1, 2 * node + 2
        if left >= n_nodes:
            continue
        v = int(branch[node])
        sector = sectors[node]
        reach = _descendants(g, v, spacing, in_sector(sector))
        if len(reach) < 2:
            raise PatchTooLarge(
                f"tree node {node} at vertex {v} has {len(reach)} usable descendants; use a larger patch",
                required_radius=required + spacing,
            )
        start, width = sector
        if node == 0:
            start = _widest_gap_start(np.array([angles[w] for w in reach]))
            width = TWO_PI
        ordered = sorted(reach, key=lambda w: (ccw_offset(start, angles[w]), w))
        lo, hi = ccw_offset(start, angles[ordered[0]]), ccw_offset(start, angles[ordered[-1]])
        split = (lo + hi) / 2.0
        child_sectors = {left: (start, split), right: ((start + split) % TWO_PI, width - split)}

        for child, pick in ((left, ordered), (right, list(reversed(ordered)))):
            allowed = in_sector(child_sectors[child])
            choice = None
            for w in pick:
                if allowed(w):
                    sub = _descendants(g, v, spacing, allowed)
                    if w in sub:
                        choice = (w, sub[w])
                        break
            if choice is None:
                raise PatchTooLarge(
                    f"no disjoint path for tree node {child}; use a larger patch",
                    required_radius=required + spacing,
                )
            w, path = choice
            branch[child] = w
            paths[child] = path
            used.update(path[1:])
            sectors[child] = child_sectors[child]

    logger.info("embedded depth-%d binary tree using %d patch vertices", depth, len(used))
    return BinaryTreeEmbedding(graph=g, depth=depth, branch_vertices=branch, paths=paths)


def _widest_gap_start(angles: np.ndarray) -> float:
    """Midpoint of the largest cyclic gap between the given angles."""
    ordered = np.sort(np.mod(angles, TWO_PI))
    gaps = np.diff(np.concatenate([ordered, [ordered[0] + TWO_PI]]))
    i = int(np.argmax(gaps))
    return float((ordered[i] + gaps[i] / 2.0) % TWO_PI)
