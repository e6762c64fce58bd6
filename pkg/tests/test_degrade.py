import numpy as np
import pytest

import svnltv as sv
from svnltv.degrade import BlurKernel, kernel_transfer


class TestGaussianKernel:
    def test_tiny_sigma_is_delta(self):
        k = sv.gaussian_kernel(1e-6, radius=2)
        assert k.taps[2, 2] == pytest.approx(1.0)
        assert k.taps.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rotation_symmetry(self):
        k = sv.gaussian_kernel(1.5, radius=4)
        np.testing.assert_array_equal(k.taps, np.rot90(k.taps))

    def test_center_tap_matches_summation_oracle(self):
        sigma, radius = 1.5, 4
        k = sv.gaussian_kernel(sigma, radius)
        total = sum(
            np.exp(-(dy * dy + dx * dx) / (2 * sigma**2))
            for dy in range(-radius, radius + 1)
            for dx in range(-radius, radius + 1)
        )
        assert k.taps[radius, radius] == pytest.approx(1.0 / total, rel=1e-12)

    def test_default_radius(self):
        assert sv.gaussian_kernel(1.5).taps.shape == (11, 11)  # ceil(4.5) = 5

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            sv.gaussian_kernel(0.0)


class TestMotionKernel:
    def test_length_one_identity(self):
        k = sv.motion_kernel(1, 90.0)
        np.testing.assert_array_equal(k.taps, [[1.0]])

    def test_length_three_diagonal(self):
        k = sv.motion_kernel(3, 45.0)
        expected = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]]) / 3.0
        np.testing.assert_allclose(k.taps, expected)

    def test_length_three_horizontal(self):
        k = sv.motion_kernel(3, 0.0)
        np.testing.assert_allclose(k.taps, np.array([[1, 1, 1]]) / 3.0)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            sv.motion_kernel(0, 45.0)


class TestConvolve:
    def test_identity_unchanged(self, rng):
        img = rng.random((6, 7, 3))
        np.testing.assert_array_equal(sv.convolve_periodic(img, sv.identity_kernel()), img)

    def test_constant_preserved(self, rng):
        img = np.full((8, 8, 3), 0.42)
        for k in (sv.gaussian_kernel(1.5), sv.motion_kernel(3, 45.0)):
            out = sv.convolve_periodic(img, k)
            assert np.abs(out - img).max() <= 1e-12

    @pytest.mark.parametrize("size", [4, 8, 17, 32])
    def test_spatial_vs_frequency(self, rng, size):
        img = rng.random((size, size, 3))
        for k in (sv.gaussian_kernel(1.0, radius=1), sv.motion_kernel(3, 45.0)):
            a = sv.convolve_periodic(img, k, "spatial")
            b = sv.convolve_periodic(img, k, "frequency")
            assert np.abs(a - b).max() <= 1e-10

    def test_mean_preserved(self, rng):
        img = rng.random((12, 10, 3))
        out = sv.convolve_periodic(img, sv.gaussian_kernel(1.5, radius=3))
        assert out.mean() == pytest.approx(img.mean(), abs=1e-12)

    def test_kernel_larger_than_image(self, rng):
        with pytest.raises(ValueError):
            sv.convolve_periodic(rng.random((4, 4, 3)), sv.gaussian_kernel(1.5))

    def test_transfer_dc_is_one(self):
        khat = kernel_transfer(sv.gaussian_kernel(1.5, radius=3), (16, 16))
        assert khat[0, 0].real == pytest.approx(1.0, abs=1e-12)

    def test_kernel_validation(self):
        with pytest.raises(ValueError):
            BlurKernel(np.ones((2, 2)) / 4.0)  # even dims
        with pytest.raises(ValueError):
            BlurKernel(np.ones((3, 3)))  # does not sum to 1


class TestNoise:
    def test_gaussian_sample_std(self):
        img = np.full((256, 256, 3), 0.5)
        spec = sv.NoiseSpec("gaussian", 30 / 255, seed=123)
        out = sv.add_gaussian_noise(img, spec)
        measured = (out - img).std()
        assert abs(measured - spec.level) <= 0.03 * spec.level

    def test_gaussian_deterministic(self, rng):
        img = rng.random((16, 16, 3))
        spec = sv.NoiseSpec("gaussian", 0.1, seed=9)
        a = sv.add_gaussian_noise(img, spec)
        b = sv.add_gaussian_noise(img, spec)
        assert np.array_equal(a, b)

    def test_gaussian_vanishing_sigma(self, rng):
        img = rng.random((8, 8, 3))
        out = sv.add_gaussian_noise(img, sv.NoiseSpec("gaussian", 1e-12, seed=1))
        assert np.abs(out - img).max() <= 1e-10

    def test_poisson_zero_image(self):
        img = np.zeros((8, 8, 3))
        out = sv.add_poisson_noise(img, sv.NoiseSpec("poisson", 0.3, seed=5))
        assert np.array_equal(out, img)

    def test_poisson_mean_preserved(self):
        img = np.full((256, 256, 3), 0.5)
        out = sv.add_poisson_noise(img, sv.NoiseSpec("poisson", 0.3, seed=17))
        assert abs(out.mean() - 0.5) <= 0.03 * 0.5

    def test_poisson_values_are_count_multiples(self, rng):
        img = rng.random((16, 16, 3))
        d = 0.3
        out = sv.add_poisson_noise(img, sv.NoiseSpec("poisson", d, seed=2))
        counts = np.round(out / d**2)
        assert np.array_equal(out, counts * d**2)

    def test_kind_mismatch(self, rng):
        img = rng.random((4, 4, 3))
        with pytest.raises(ValueError):
            sv.add_gaussian_noise(img, sv.NoiseSpec("poisson", 0.3))
        with pytest.raises(ValueError):
            sv.add_poisson_noise(img, sv.NoiseSpec("gaussian", 0.1))
        with pytest.raises(ValueError):
            sv.NoiseSpec("speckle", 0.1)
        with pytest.raises(ValueError):
            sv.NoiseSpec("gaussian", 0.0)
