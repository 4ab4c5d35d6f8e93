"""
Graph files: a versioned JSON document holding one patch.

    {"header": {...}, "vertices": [[layer, x, y], ...], "edges": [[u, v], ...], "faces": [[...], ...]}

Floats are written with repr precision so a load reproduces positions exactly.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ValidationError

from core.errors import GraphFormatError
from core.graph import PatchGraph
from core.tiling import SchlafliSymbol, TilingGraph

logger = logging.getLogger(__name__)

FORMAT_NAME = "hyperperc-graph"
FORMAT_VERSION = 1


class GraphHeader(BaseModel):
    format: Literal["hyperperc-graph"] = FORMAT_NAME
    version: int = FORMAT_VERSION
    kind: str = "patch"
    """tiling, dual, tree or patch"""
    symbol: list[int] | None = None
    radius: int
    n_vertices: int
    n_edges: int
    n_faces: int
    face_size: int
    layer_counts: list[int]


def graph_document(g: PatchGraph, kind: str | None = None) -> dict:
    symbol = getattr(g, "symbol", None)
    if kind is None:
        kind = "tiling" if symbol is not None else "patch"
    header = GraphHeader(
        kind=kind,
        symbol=[symbol.p, symbol.q] if symbol is not None else None,
        radius=g.radius,
        n_vertices=g.n_vertices,
        n_edges=g.n_edges,
        n_faces=g.n_faces,
        face_size=int(g.faces.shape[1]) if g.n_faces else 0,
        layer_counts=[int(c) for c in g.layer_counts],
    )
    return {
        "header": header.model_dump(),
        "vertices": [
            [int(layer), float(z.real), float(z.imag)] for layer, z in zip(g.layers, g.positions)
        ],
        "edges": g.edges.tolist(),
        "faces": g.faces.tolist(),
    }


def dumps_graph(g: PatchGraph, kind: str | None = None) -> str:
    return json.dumps(graph_document(g, kind), separators=(",", ":"))


def save_graph(g: PatchGraph, path: Path, kind: str | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_graph(g, kind), encoding="utf-8")
    logger.info("wrote %s (%s)", path, g.describe())
    return path


def graph_from_document(doc: dict) -> PatchGraph:
    """Rebuild a patch; documents carrying a symbol come back as TilingGraph."""
    if not isinstance(doc, dict) or "header" not in doc:
        raise GraphFormatError("graph document has no header")
    try:
        header = GraphHeader.model_validate(doc["header"])
    except ValidationError as exc:
        raise GraphFormatError(f"invalid graph header: {exc.errors()[0]['msg']}") from None
    if header.version != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported graph format version {header.version}")

    vertices = np.asarray(doc.get("vertices") or [], dtype=np.float64).reshape(-1, 3)
    edges = np.asarray(doc.get("edges") or [], dtype=np.int64).reshape(-1, 2)
    faces_raw = doc.get("faces") or []
    faces = np.asarray(faces_raw, dtype=np.int64).reshape(len(faces_raw), header.face_size)
    if (len(vertices), len(edges), len(faces)) != (header.n_vertices, header.n_edges, header.n_faces):
        raise GraphFormatError("graph body does not match the counts in its header")
    if len(edges) and (edges.min() < 0 or edges.max() >= len(vertices)):
        raise GraphFormatError("edge endpoint out of range")

    fields = dict(
        layers=vertices[:, 0].astype(np.int64),
        positions=vertices[:, 1] + 1j * vertices[:, 2],
        edges=edges,
        faces=faces,
        radius=header.radius,
    )
    try:
        if header.symbol is not None:
            return TilingGraph(**fields, symbol=SchlafliSymbol(*header.symbol))
        return PatchGraph(**fields)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def loads_graph(text: str) -> PatchGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"graph file is not JSON: {exc.msg}") from None
    return graph_from_document(doc)


def load_graph(path: Path) -> PatchGraph:
    return loads_graph(Path(path).read_text(encoding="utf-8"))
