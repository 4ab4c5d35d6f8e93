import math

import numpy as np
import pytest

from core.disc import hyperbolic_distance
from core.errors import MappingNotFound, PatchTooLarge, UnstableClassification
from core.isometry import (
    MobiusIsometry,
    apply,
    binary_tree_patch,
    classify,
    embed_binary_tree,
    map_halfplane_into,
    symmetry_generators,
)
from core.tiling import Halfplane, SchlafliSymbol, generate_tiling


@pytest.fixture(scope="module")
def pentagonal_r9():
    return generate_tiling(SchlafliSymbol(5, 5), 9)


def angle_close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(math.remainder(a - b, 2 * math.pi)) < tol


def random_isometry(rng: np.random.Generator) -> MobiusIsometry:
    c = rng.uniform(0.0, 0.8) * np.exp(1j * rng.uniform(0.0, 2 * math.pi))
    return MobiusIsometry.translation(complex(c)) @ MobiusIsometry.rotation(float(rng.uniform(0.0, 2 * math.pi)))


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def assert_disjoint_tree(g, emb, depth: int) -> None:
    """Branch vertices at even layers joined by vertex-disjoint, layer-increasing paths of length 2."""
    n_nodes = 2 ** (depth + 1) - 1
    assert emb.branch_vertices[0] == 0
    assert len(emb.paths) == n_nodes - 1
    seen = {0}
    for child, path in emb.paths.items():
        parent = (child - 1) // 2
        assert path[0] == emb.branch_vertices[parent]
        assert path[-1] == emb.branch_vertices[child]
        assert len(path) == 3
        for a, b in zip(path, path[1:]):
            assert g.edge_index(a, b) >= 0
            assert g.layers[b] == g.layers[a] + 1
        assert seen.isdisjoint(path[1:])
        seen.update(path[1:])
    assert emb.vertices == seen
    level = np.floor(np.log2(np.arange(n_nodes) + 1)).astype(int)
    assert g.layers[emb.branch_vertices].tolist() == (2 * level).tolist()


# ── MobiusIsometry ────────────────────────────────────────────────────

class TestMobiusIsometry:

    def test_normalized(self):
        m = MobiusIsometry(3 + 1j, 1 - 2j)
        assert abs(m.a) ** 2 - abs(m.b) ** 2 == pytest.approx(1.0)

    def test_not_disc_preserving(self):
        with pytest.raises(ValueError):
            MobiusIsometry(0.5, 1.0)

    def test_composition_matches_application(self):
        f = MobiusIsometry.translation(0.3 + 0.2j)
        g = MobiusIsometry.rotation_about(-0.1 + 0.4j, 1.1)
        z = 0.25 - 0.35j
        assert (f @ g).apply(z) == pytest.approx(f.apply(g.apply(z)))

    def test_composition_at_random_points(self):
        rng = philox(11)
        f, g = random_isometry(rng), random_isometry(rng)
        z = np.sqrt(rng.uniform(0.0, 0.9, 100)) * np.exp(1j * rng.uniform(0.0, 2 * math.pi, 100))
        assert np.allclose((f @ g).apply(z), f.apply(g.apply(z)), atol=1e-9)
        assert np.allclose((g @ f).apply(z), g.apply(f.apply(z)), atol=1e-9)

    def test_inverse_and_power(self):
        m = MobiusIsometry.from_upper_half_plane(2, 1, 1, 2)
        z = 0.1 + 0.2j
        assert m.inverse().apply(m.apply(z)) == pytest.approx(z)
        assert m.power(3).apply(z) == pytest.approx(m.apply(m.apply(m.apply(z))))
        assert m.power(-2).apply(z) == pytest.approx(m.inverse().apply(m.inverse().apply(z)))
        assert m.power(0).apply(z) == pytest.approx(z)

    def test_translation_sends_origin(self):
        c = 0.4 - 0.3j
        assert MobiusIsometry.translation(c).apply(0j) == pytest.approx(c)

    def test_rotation_about_fixes_center(self):
        c = 0.2 + 0.5j
        assert MobiusIsometry.rotation_about(c, 0.7).apply(c) == pytest.approx(c)

    def test_preserves_distance(self):
        m = MobiusIsometry(2 + 1j, 0.5 - 1.5j)
        z1, z2 = 0.1 + 0.2j, -0.4 + 0.3j
        assert hyperbolic_distance(m.apply(z1), m.apply(z2)) == pytest.approx(hyperbolic_distance(z1, z2))

    def test_angles_and_points_agree(self):
        m = MobiusIsometry(1.5 + 0.2j, 0.8 + 0.9j)
        theta = 2.1
        w = m.apply(complex(math.cos(theta), math.sin(theta)))
        assert abs(w) == pytest.approx(1.0)
        assert angle_close(m.apply(theta), math.atan2(w.imag, w.real) % (2 * math.pi))
        batch = m.apply(np.array([0.0, 1.0, theta]))
        assert angle_close(batch[2], m.apply(theta))
        assert apply(m, theta) == m.apply(theta)

    def test_from_matrix(self):
        m = MobiusIsometry(1.2 + 0.3j, 0.4 - 0.1j)
        again = MobiusIsometry.from_matrix(2.0 * m.matrix)
        assert again.apply(0.3j) == pytest.approx(m.apply(0.3j))

    def test_from_matrix_rejects_non_disc(self):
        with pytest.raises(ValueError):
            MobiusIsometry.from_matrix([[1.0, 0.5], [0.7, 1.0]])


# ── classify ──────────────────────────────────────────────────────────

class TestClassify:

    def test_identity(self):
        assert classify(MobiusIsometry.identity()).kind == "identity"
        assert classify(MobiusIsometry.rotation(2 * math.pi)).kind == "identity"

    def test_rotation_is_elliptic(self):
        cls = classify(MobiusIsometry.rotation(math.pi / 3))
        assert cls.kind == "elliptic"
        assert cls.center == 0j
        assert cls.fixed_points == ()

    def test_rotation_about_point(self):
        c = 0.3 - 0.2j
        cls = classify(MobiusIsometry.rotation_about(c, 1.3))
        assert cls.kind == "elliptic"
        assert cls.center == pytest.approx(c)

    def test_parabolic(self):
        # z -> z + 1 fixes infinity, which the Cayley map sends to angle pi/2
        cls = classify(MobiusIsometry.from_upper_half_plane(1, 1, 0, 1))
        assert cls.kind == "parabolic"
        assert len(cls.fixed_points) == 1
        assert angle_close(cls.fixed_points[0], math.pi / 2)

    def test_hyperbolic(self):
        # fixed points 1 (attracting) and -1 on the real line
        cls = classify(MobiusIsometry.from_upper_half_plane(2, 1, 1, 2))
        assert cls.kind == "hyperbolic"
        assert angle_close(cls.attracting, 0.0)
        assert angle_close(cls.repelling, math.pi)
        assert len(cls.fixed_points) == 2

    def test_inverse_swaps_attracting_and_repelling(self):
        m = MobiusIsometry.from_upper_half_plane(2, 1, 1, 2)
        cls, inv = classify(m), classify(m.inverse())
        assert angle_close(cls.attracting, inv.repelling)
        assert angle_close(cls.repelling, inv.attracting)

    def test_attracting_point_attracts(self):
        m = MobiusIsometry.translation(0.6)
        cls = classify(m)
        assert cls.kind == "hyperbolic"
        assert angle_close(cls.attracting, 0.0)
        theta = 2.0
        for _ in range(60):
            theta = m.apply(theta)
        assert angle_close(theta, cls.attracting, tol=1e-6)

    def test_random_angles_converge_to_attracting_point(self):
        m = MobiusIsometry.translation(0.6) @ MobiusIsometry.rotation(0.4)
        cls = classify(m)
        assert cls.kind == "hyperbolic"
        assert m.trace > 2.0
        rng = philox(5)
        for theta in rng.uniform(0.0, 2 * math.pi, 50):
            if angle_close(theta, cls.repelling, tol=1e-3):
                continue
            for _ in range(200):
                theta = m.apply(theta)
            assert angle_close(theta, cls.attracting, tol=1e-9)

    @pytest.mark.parametrize(
        "m",
        [
            MobiusIsometry.rotation_about(0.2 + 0.1j, 1.0),
            MobiusIsometry.from_upper_half_plane(2, 1, 1, 2),
            MobiusIsometry.from_upper_half_plane(1, 1, 0, 1),
        ],
        ids=["elliptic", "hyperbolic", "parabolic"],
    )
    def test_kind_is_conjugation_invariant(self, m):
        cls = classify(m)
        rng = philox(3)
        for _ in range(20):
            sigma = random_isometry(rng)
            conj = classify(sigma @ m @ sigma.inverse())
            assert conj.kind == cls.kind
            if cls.kind == "elliptic":
                assert conj.center == pytest.approx(sigma.apply(cls.center))
            elif cls.kind == "hyperbolic":
                assert angle_close(conj.attracting, sigma.apply(cls.attracting), tol=1e-7)
                assert angle_close(conj.repelling, sigma.apply(cls.repelling), tol=1e-7)
            else:
                assert angle_close(conj.fixed_points[0], sigma.apply(cls.fixed_points[0]), tol=1e-6)

    def test_trace_decides_kind(self):
        rng = philox(7)
        seen = set()
        for _ in range(200):
            m = random_isometry(rng)
            t = m.trace
            assert t == pytest.approx(np.trace(m.matrix).real)
            if abs(abs(t) - 2.0) < 1e-3:
                continue
            cls = classify(m)
            seen.add(cls.kind)
            if abs(t) < 2.0:
                assert cls.kind == "elliptic"
                assert abs(cls.center) < 1.0
                assert m.apply(cls.center) == pytest.approx(cls.center, abs=1e-9)
            else:
                assert cls.kind == "hyperbolic"
                assert angle_close(m.apply(cls.attracting), cls.attracting, tol=1e-7)
                assert angle_close(m.apply(cls.repelling), cls.repelling, tol=1e-7)
        assert seen == {"elliptic", "hyperbolic"}

    def test_near_parabolic_is_unstable(self):
        h = 4.5e-4
        with pytest.raises(UnstableClassification) as exc_info:
            classify(MobiusIsometry.from_upper_half_plane(1 + h, 1, 0, 1))
        assert exc_info.value.code == "UnstableClassification"
        assert exc_info.value.candidates == ("parabolic", "hyperbolic")


# ── Tiling symmetries ─────────────────────────────────────────────────

class TestSymmetryGenerators:

    @pytest.mark.parametrize("symbol", [(5, 5), (7, 3)])
    def test_generators_map_vertices_to_vertices(self, symbol):
        sym = SchlafliSymbol(*symbol)
        g = generate_tiling(sym, 5)
        core = g.positions[g.layers <= 2]
        for m in symmetry_generators(sym):
            for z in m.apply(core):
                assert hyperbolic_distance(g.positions, z).min() < 1e-6

    def test_generators_orders(self):
        sym = SchlafliSymbol(5, 5)
        z = 0.05 + 0.02j
        rot_q, rot_p, half = symmetry_generators(sym)
        assert rot_q.power(sym.q).apply(z) == pytest.approx(z)
        assert rot_p.power(sym.p).apply(z) == pytest.approx(z)
        assert half.power(2).apply(z) == pytest.approx(z)


# ── map_halfplane_into ────────────────────────────────────────────────

class TestMapHalfplaneInto:

    def test_already_contained(self):
        gens = symmetry_generators(SchlafliSymbol(5, 5))
        m = map_halfplane_into(Halfplane(1.0, 2.0), Halfplane(0.0, math.pi), gens)
        assert classify(m).kind == "identity"

    def test_maps_half_disc_into_small_halfplane(self):
        gens = symmetry_generators(SchlafliSymbol(5, 5))
        h1 = Halfplane(0.0, math.pi)
        h2 = Halfplane(4.0, 4.6)
        m = map_halfplane_into(h1, h2, gens)
        assert h2.contains_halfplane(h1.image(m))

    def test_zero_budget_fails(self):
        gens = symmetry_generators(SchlafliSymbol(5, 5))
        with pytest.raises(MappingNotFound) as exc_info:
            map_halfplane_into(Halfplane(0.0, math.pi), Halfplane(4.0, 4.6), gens, budget=0)
        assert exc_info.value.code == "MappingNotFound"

    def test_elliptic_only_generators_fail(self):
        with pytest.raises(MappingNotFound):
            map_halfplane_into(
                Halfplane(0.0, math.pi), Halfplane(4.0, 4.6), [MobiusIsometry.rotation(math.pi / 2)]
            )


# ── Binary trees ──────────────────────────────────────────────────────

class TestBinaryTree:

    def test_patch_shape(self):
        t = binary_tree_patch(3)
        assert t.n_vertices == 15
        assert t.n_edges == 14
        assert t.layer_counts.tolist() == [1, 2, 4, 8]
        assert t.outer_vertices.tolist() == list(range(7, 15))
        assert t.edges[0].tolist() == [0, 1]
        assert np.all(np.abs(t.positions) < 1)

    def test_negative_depth(self):
        with pytest.raises(ValueError):
            binary_tree_patch(-1)

    @pytest.mark.parametrize("depth", [1, 2])
    def test_embedding_is_disjoint_tree(self, pentagonal_r5, depth):
        assert_disjoint_tree(pentagonal_r5, embed_binary_tree(pentagonal_r5, depth, spacing=2), depth)

    @pytest.mark.slow
    @pytest.mark.parametrize("depth", [3, 4])
    def test_deep_embedding_is_disjoint_tree(self, pentagonal_r9, depth):
        assert_disjoint_tree(pentagonal_r9, embed_binary_tree(pentagonal_r9, depth, spacing=2), depth)

    def test_embedding_as_graph(self, pentagonal_r5):
        emb = embed_binary_tree(pentagonal_r5, 2)
        tree = emb.as_graph()
        assert np.array_equal(tree.edges, binary_tree_patch(2).edges)
        assert np.array_equal(tree.positions, pentagonal_r5.positions[emb.branch_vertices])

    def test_patch_too_small(self, pentagonal_r4):
        with pytest.raises(PatchTooLarge) as exc_info:
            embed_binary_tree(pentagonal_r4, 3, spacing=2)
        assert exc_info.value.code == "PatchTooLarge"
        assert exc_info.value.required_radius == 6
