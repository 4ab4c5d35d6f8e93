"""
PatchGraph: the immutable finite graph every analysis runs on.

Tiling patches, dual patches and binary-tree patches all share this shape:
per-vertex layer and disc position, an (E, 2) edge table with u < v, an (F, k)
face table of counterclockwise vertex cycles, and the patch radius. Vertex 0 is
the root. Arrays are read-only after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from core.disc import TWO_PI


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PatchGraph:
    layers: np.ndarray
    positions: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    radius: int

    def __post_init__(self):
        layers = np.asarray(self.layers, dtype=np.int64).reshape(-1)
        positions = np.asarray(self.positions, dtype=np.complex128).reshape(-1)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        faces = np.asarray(self.faces, dtype=np.int64)
        if faces.ndim != 2:
            faces = faces.reshape(0, 0)
        if layers.shape != positions.shape:
            raise ValueError("layers and positions must have one entry per vertex")
        if len(edges) and np.any(edges[:, 0] >= edges[:, 1]):
            raise ValueError("edges must be stored as (u, v) with u < v")
        object.__setattr__(self, "layers", _frozen(layers))
        object.__setattr__(self, "positions", _frozen(positions))
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "faces", _frozen(faces))
        object.__setattr__(self, "radius", int(self.radius))

    # ── Sizes ──────────────────────────────────────────────────────────

    @property
    def root(self) -> int:
        return 0

    @property
    def n_vertices(self) -> int:
        return int(self.layers.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @cached_property
    def layer_counts(self) -> np.ndarray:
        return np.bincount(self.layers, minlength=self.radius + 1)

    @cached_property
    def outer_mask(self) -> np.ndarray:
        mask = self.layers == self.radius
        mask.setflags(write=False)
        return mask

    @cached_property
    def outer_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.outer_mask)

    def describe(self) -> str:
        return f"patch/R{self.radius}/V{self.n_vertices}/E{self.n_edges}/F{self.n_faces}"

    # ── Adjacency ──────────────────────────────────────────────────────

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric CSR adjacency; data holds edge index + 1."""
        n = self.n_vertices
        u, v = self.edges[:, 0], self.edges[:, 1]
        idx = np.arange(1, self.n_edges + 1, dtype=np.int64)
        matrix = sparse.coo_matrix(
            (np.concatenate([idx, idx]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        )
        return matrix.tocsr()

    def neighbours(self, v: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[v]:adj.indptr[v + 1]]

    def edge_index(self, u: int, v: int) -> int:
        """Index of edge {u, v}, or -1 if absent."""
        adj = self.adjacency
        row = slice(adj.indptr[u], adj.indptr[u + 1])
        hit = np.flatnonzero(adj.indices[row] == v)
        return int(adj.data[row][hit[0]]) - 1 if len(hit) else -1

    def restrict_edges(self, indices) -> PatchGraph:
        """Same vertices, only the listed edges; faces are dropped."""
        keep = np.asarray(indices, dtype=np.int64)
        return PatchGraph(
            layers=self.layers,
            positions=self.positions,
            edges=self.edges[keep],
            faces=np.zeros((0, 0), dtype=np.int64),
            radius=self.radius,
        )

    # ── Geometry ───────────────────────────────────────────────────────

    @cached_property
    def angles(self) -> np.ndarray:
        return np.mod(np.angle(self.positions), TWO_PI)
