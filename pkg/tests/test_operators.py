import numpy as np
import pytest

import svnltv as sv
from conftest import random_graph


def two_pixel_graph():
    return sv.NonlocalGraph.from_undirected_edges((1, 2), [(0, 1)], [1.0], [1.0])


class TestGradient:
    def test_constant_raster_zero_field(self, rng):
        g = random_graph(rng, (5, 5))
        grad = sv.nl_gradient(np.full((5, 5), 0.7), g, "value")
        assert np.all(grad == 0.0)

    def test_two_pixel_antisymmetry(self):
        g = two_pixel_graph()
        grad = sv.nl_gradient(np.array([[0.0, 1.0]]), g, "value")
        # edges sorted by (src, dst): (0,1) then (1,0)
        np.testing.assert_array_equal(grad, [1.0, -1.0])

    def test_antisymmetry_exhaustive(self, rng):
        g = random_graph(rng, (6, 6), max_extra=30)
        u = rng.random((6, 6))
        grad = sv.nl_gradient(u, g, "value")
        np.testing.assert_array_equal(grad, -grad[g.reverse])
        pair = sv.nl_gradient(rng.random((6, 6, 2)), g, "saturation")
        np.testing.assert_array_equal(pair, -pair[g.reverse])

    def test_dimension_mismatch(self, rng):
        g = random_graph(rng, (4, 4))
        with pytest.raises(ValueError):
            sv.nl_gradient(np.zeros((5, 4)), g, "value")


class TestDivergence:
    def test_zero_field(self, rng):
        g = random_graph(rng, (4, 5))
        div = sv.nl_divergence(np.zeros(g.n_edges), g, "value")
        assert np.all(div == 0.0)

    def test_symmetric_field_killed(self, rng):
        g = random_graph(rng, (4, 4), max_extra=20)
        p = rng.random(g.n_edges)
        sym = p + p[g.reverse]  # symmetric in (i, j)
        div = sv.nl_divergence(sym, g, "value")
        assert np.abs(div).max() <= 1e-14

    def test_zero_sum(self, rng):
        for _ in range(10):
            g = random_graph(rng, (6, 6), max_extra=25)
            p = rng.standard_normal(g.n_edges)
            assert abs(sv.nl_divergence(p, g, "value").sum()) <= 1e-10
            pair = rng.standard_normal((g.n_edges, 2))
            assert np.abs(sv.nl_divergence(pair, g, "saturation").sum(axis=(0, 1))).max() <= 1e-10

    def test_support_mismatch(self, rng):
        g = random_graph(rng, (4, 4))
        with pytest.raises(ValueError):
            sv.nl_divergence(np.zeros(g.n_edges + 1), g, "value")


class TestLaplacian:
    def test_constant_zero(self, rng):
        g = random_graph(rng, (5, 4))
        lap = sv.nl_laplacian(np.full((5, 4), 2.5), g, "value")
        assert np.all(lap == 0.0)

    def test_two_pixel_values(self):
        g = two_pixel_graph()
        lap = sv.nl_laplacian(np.array([[0.0, 1.0]]), g, "value")
        np.testing.assert_array_equal(lap, [[2.0, -2.0]])

    def test_matches_divergence_of_gradient(self, rng):
        for _ in range(10):
            g = random_graph(rng, (6, 6), max_extra=25)
            u = rng.random((6, 6))
            lap = sv.nl_laplacian(u, g, "value")
            comp = sv.nl_divergence(sv.nl_gradient(u, g, "value"), g, "value")
            assert np.abs(lap - comp).max() <= 1e-12


class TestInner:
    def test_positive_definite(self, rng):
        g = random_graph(rng, (4, 4))
        a = rng.standard_normal(g.n_edges)
        assert sv.nl_inner(a, a) >= 0.0
        assert sv.nl_inner(np.zeros(g.n_edges), np.zeros(g.n_edges)) == 0.0
        assert sv.nl_inner(a, a) > 0.0

    def test_orthogonal_indicators(self, rng):
        g = random_graph(rng, (4, 4))
        a = np.zeros(g.n_edges)
        b = np.zeros(g.n_edges)
        a[0] = 1.0
        b[1] = 1.0
        assert sv.nl_inner(a, b) == 0.0

    def test_commutative(self, rng):
        g = random_graph(rng, (4, 4))
        a = rng.standard_normal(g.n_edges)
        b = rng.standard_normal(g.n_edges)
        assert sv.nl_inner(a, b) == sv.nl_inner(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sv.nl_inner(np.zeros(3), np.zeros(4))


class TestAdjointness:
    def test_value_channel(self, rng):
        for _ in range(20):
            g = random_graph(rng, tuple(rng.integers(3, 7, size=2)), max_extra=20)
            u = rng.standard_normal(g.shape)
            p = rng.standard_normal(g.n_edges)
            lhs = sv.nl_inner(sv.nl_gradient(u, g, "value"), p)
            rhs = float(np.sum(u * sv.nl_divergence(p, g, "value")))
            assert abs(lhs + rhs) <= 1e-10 * (1.0 + abs(lhs))

    def test_saturation_channel(self, rng):
        for _ in range(20):
            g = random_graph(rng, tuple(rng.integers(3, 7, size=2)), max_extra=20)
            u = rng.standard_normal(g.shape + (2,))
            p = rng.standard_normal((g.n_edges, 2))
            lhs = sv.nl_inner(sv.nl_gradient(u, g, "saturation"), p)
            rhs = float(np.sum(u * sv.nl_divergence(p, g, "saturation")))
            assert abs(lhs + rhs) <= 1e-10 * (1.0 + abs(lhs))

    def test_dirichlet_identity(self, rng):
        # <grad u, grad u> = -sum_i lap(u)(i) u(i)
        for _ in range(10):
            g = random_graph(rng, (5, 5), max_extra=20)
            u = rng.standard_normal((5, 5))
            grad = sv.nl_gradient(u, g, "value")
            lhs = sv.nl_inner(grad, grad)
            rhs = -float(np.sum(sv.nl_laplacian(u, g, "value") * u))
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))
