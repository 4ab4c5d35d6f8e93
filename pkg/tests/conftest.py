import json
from pathlib import Path

import numpy as np
import pytest

from core.graph import PatchGraph
from core.tiling import SchlafliSymbol, generate_tiling

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def pentagonal_r2():
    """{5,5} ball of radius 2: layers 1, 5, 20."""
    return generate_tiling(SchlafliSymbol(5, 5), 2)


@pytest.fixture(scope="session")
def pentagonal_r4():
    return generate_tiling(SchlafliSymbol(5, 5), 4)


@pytest.fixture(scope="session")
def pentagonal_r5():
    return generate_tiling(SchlafliSymbol(5, 5), 5)


@pytest.fixture(scope="session")
def pentagonal_r6():
    return generate_tiling(SchlafliSymbol(5, 5), 6)


@pytest.fixture(scope="session")
def heptagonal_r10():
    return generate_tiling(SchlafliSymbol(7, 3), 10)


@pytest.fixture(scope="session")
def pentagonal_layer_counts() -> list[int]:
    """Recorded {5,5} layer sizes up to radius 6."""
    return json.loads((GOLDEN_DIR / "layers_5_5.json").read_text())["layer_counts"]


@pytest.fixture
def eight_vertex_graph():
    """
    Hand-built patch: a square 0-1-2-3 around the root, a tail 2-4-5 and a
    triangle 5-6-7. Layers are graph distances from 0; vertices 6 and 7 are outer.
    """
    edges = np.array([
        [0, 1], [1, 2], [2, 3], [0, 3],
        [2, 4], [4, 5],
        [5, 6], [5, 7], [6, 7],
    ])
    layers = np.array([0, 1, 2, 1, 3, 4, 5, 5])
    angles = np.linspace(0.0, 2 * np.pi, 8, endpoint=False)
    positions = 0.1 * layers * np.exp(1j * angles)
    return PatchGraph(layers=layers, positions=positions, edges=edges, faces=np.zeros((0, 0)), radius=5)
