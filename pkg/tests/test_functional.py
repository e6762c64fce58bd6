import numpy as np
import pytest

import svnltv as sv
from conftest import random_graph
from svnltv.functional import RegWeights


class TestSvsNltv:
    def test_constant_image_zero(self, rng):
        g = random_graph(rng, (4, 4))
        img = np.full((4, 4, 3), 0.3)
        assert sv.svs_nltv(img, g, 0.05) == 0.0
        assert sv.svs_nltv_qform(img, g, 0.05) == 0.0

    def test_gray_image_has_zero_saturation_term(self, rng):
        g = random_graph(rng, (5, 5), max_extra=20)
        gray = rng.random((5, 5))
        img = np.stack([gray, gray, gray], axis=-1)
        assert sv.svs_nltv(img, g, 0.0) == 0.0  # saturation term alone
        assert sv.svs_nltv(img, g, 1.0) > 0.0  # value term sees the texture

    def test_two_forms_agree(self, rng):
        for _ in range(20):
            g = random_graph(rng, (4, 4), max_extra=15)
            img = rng.random((4, 4, 3))
            a = sv.svs_nltv(img, g, 0.05)
            b = sv.svs_nltv_qform(img, g, 0.05)
            assert abs(a - b) <= 1e-10 * (1.0 + abs(a))

    def test_red_only_value_term(self, rng):
        # with g = b = 0 the value term is the nonlocal TV of u_r/sqrt(3)
        g = random_graph(rng, (4, 4), max_extra=15)
        red = rng.random((4, 4))
        img = np.stack([red, np.zeros_like(red), np.zeros_like(red)], axis=-1)
        mu = 0.7
        value_term = sv.svs_nltv(img, g, mu) - sv.svs_nltv(img, g, 0.0)
        direct = mu * np.sum(np.abs(sv.nl_gradient(red / np.sqrt(3.0), g, "value")))
        assert value_term == pytest.approx(direct, rel=1e-12)

    def test_one_homogeneity_power_of_two(self, rng):
        g = random_graph(rng, (4, 4), max_extra=15)
        img = rng.random((4, 4, 3))
        base = sv.svs_nltv(img, g, 0.05)
        for c in (2.0, -0.5, 4.0):
            assert sv.svs_nltv(c * img, g, 0.05) == abs(c) * base


class TestNltvBaseline:
    def test_constant_zero(self, rng):
        graphs = tuple(random_graph(rng, (4, 4)) for _ in range(3))
        assert sv.nltv(np.full((4, 4, 3), 0.2), graphs) == 0.0

    def test_single_channel_reduces_to_red(self, rng):
        graphs = tuple(random_graph(rng, (4, 4), max_extra=10) for _ in range(3))
        red = rng.random((4, 4))
        img = np.stack([red, np.zeros_like(red), np.zeros_like(red)], axis=-1)
        direct = np.sum(np.abs(sv.nl_gradient(red, graphs[0], "value")))
        assert sv.nltv(img, graphs) == pytest.approx(direct, rel=1e-12)

    def test_two_pixel_value(self):
        g = sv.NonlocalGraph.from_undirected_edges((1, 2), [(0, 1)], [1.0], [1.0])
        img = np.zeros((1, 2, 3))
        img[0, 1, 0] = 1.0
        assert sv.nltv(img, (g, g, g)) == 2.0  # both directed edges


class TestObjective:
    def test_zero_residual(self, rng):
        g = random_graph(rng, (4, 4), max_extra=10)
        img = rng.random((4, 4, 3))
        w = RegWeights(alpha=0.7, mu=0.05)
        obj = sv.objective(img, img, sv.identity_kernel(), g, w, "l2")
        assert obj == pytest.approx(0.7 * sv.svs_nltv(img, g, 0.05), rel=1e-12)

    def test_constant_l2_value(self, rng):
        g = random_graph(rng, (4, 4))
        u = np.zeros((4, 4, 3))
        f = np.full((4, 4, 3), 0.3)
        w = RegWeights(alpha=1.0)
        obj = sv.objective(u, f, sv.identity_kernel(), g, w, "l2")
        assert obj == pytest.approx(0.5 * 3 * 16 * 0.3**2, rel=1e-12)

    def test_l1_matches_elementwise_oracle(self, rng):
        g = random_graph(rng, (4, 4), max_extra=10)
        u = rng.random((4, 4, 3))
        f = rng.random((4, 4, 3))
        w = RegWeights(alpha=0.4, mu=0.05)
        obj = sv.objective(u, f, sv.identity_kernel(), g, w, "l1")
        oracle = 0.4 * sv.svs_nltv(u, g, 0.05) + 0.5 * sum(
            abs(u[idx] - f[idx]) for idx in np.ndindex(u.shape)
        )
        assert obj == pytest.approx(oracle, rel=1e-10)

    def test_shape_mismatch(self, rng):
        g = random_graph(rng, (4, 4))
        with pytest.raises(ValueError):
            sv.objective(
                np.zeros((4, 4, 3)), np.zeros((5, 4, 3)),
                sv.identity_kernel(), g, RegWeights(1.0), "l2",
            )

    def test_weights_validation(self):
        with pytest.raises(ValueError):
            RegWeights(alpha=0.0)
        with pytest.raises(ValueError):
            RegWeights(alpha=1.0, mu=-0.1)
