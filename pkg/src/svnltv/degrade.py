"""Degradation protocol: blur kernels, periodic convolution, and noise.

Convolution is circular (periodic boundary) and available through two
independent routes, a direct spatial stencil and an FFT product, which
are cross-checked in the tests. Noise generation uses a counter-based
generator (Philox) so results are reproducible from the 64-bit seed
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import as_image

__all__ = [
    "BlurKernel",
    "identity_kernel",
    "gaussian_kernel",
    "motion_kernel",
    "kernel_transfer",
    "convolve_periodic",
    "NoiseSpec",
    "add_gaussian_noise",
    "add_poisson_noise",
]


@dataclass(frozen=True)
class BlurKernel:
    """Centered 2-D stencil with odd dimensions, taps summing to 1."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
            raise ValueError(f"kernel dimensions must be odd, got {taps.shape}")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel must sum to 1, got {taps.sum()!r}")

    @property
    def is_identity(self) -> bool:
        return self.taps.shape == (1, 1)


def identity_kernel() -> BlurKernel:
    return BlurKernel(np.ones((1, 1)))


def gaussian_kernel(sigma: float, radius: int | None = None) -> BlurKernel:
    """Isotropic Gaussian taps exp(-(i^2+j^2)/2 sigma^2), normalized.

    Default radius is ceil(3 sigma).
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if radius is None:
        radius = int(np.ceil(3.0 * sigma))
    radius = max(radius, 0)
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    with np.errstate(under="ignore"):
        g = np.exp(-(t[:, None] ** 2 + t[None, :] ** 2) / (2.0 * sigma**2))
    return BlurKernel(g / g.sum())


def motion_kernel(length: int, angle: float) -> BlurKernel:
    """Equal-weight taps along a rasterized line through the center.

    ``angle`` is in degrees, counterclockwise from the +x (column) axis
    with y pointing up, so 45 degrees runs toward the upper right.
    Length 1 degenerates to the identity kernel.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if length == 1:
        return identity_kernel()
    theta = np.deg2rad(angle)
    half = (length - 1) / 2.0
    t = np.linspace(-half, half, length)
    cols = np.rint(t * np.cos(theta)).astype(int)
    rows = np.rint(-t * np.sin(theta)).astype(int)
    radius = max(np.abs(rows).max(), np.abs(cols).max(), 0)
    taps = np.zeros((2 * radius + 1, 2 * radius + 1))
    np.add.at(taps, (rows + radius, cols + radius), 1.0)
    return BlurKernel(taps / taps.sum())


def kernel_transfer(kernel: BlurKernel, shape: tuple[int, int]) -> np.ndarray:
    """DFT of the kernel embedded centered-at-origin with wraparound."""
    h, w = shape
    taps = kernel.taps
    rk, ck = taps.shape[0] // 2, taps.shape[1] // 2
    if taps.shape[0] > h or taps.shape[1] > w:
        raise ValueError(f"kernel {taps.shape} larger than image {shape}")
    embed = np.zeros((h, w))
    for dy in range(-rk, rk + 1):
        for dx in range(-ck, ck + 1):
            embed[dy % h, dx % w] = taps[dy + rk, dx + ck]
    return np.fft.fft2(embed)


def convolve_periodic(img, kernel: BlurKernel, method: str = "spatial") -> np.ndarray:
    """Circular convolution of each channel with the kernel.

    ``method`` picks the route: "spatial" applies the stencil with wrap
    boundary, "frequency" multiplies DFTs. Both compute
    sum_t taps(t) * img(x - t mod N) and agree to ~1e-10.
    """
    img = as_image(img)
    taps = kernel.taps
    if taps.shape[0] > img.shape[0] or taps.shape[1] > img.shape[1]:
        raise ValueError(f"kernel {taps.shape} larger than image {img.shape[:2]}")
    if kernel.is_identity:
        return img * taps[0, 0]
    out = np.empty_like(img)
    if method == "spatial":
        for c in range(3):
            out[:, :, c] = ndimage.convolve(img[:, :, c], taps, mode="wrap")
    elif method == "frequency":
        khat = kernel_transfer(kernel, img.shape[:2])
        for c in range(3):
            out[:, :, c] = np.fft.ifft2(np.fft.fft2(img[:, :, c]) * khat).real
    else:
        raise ValueError(f"unknown method {method!r}")
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: kind "gaussian" (level = std) or "poisson" (level = scale d)."""

    kind: str
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "poisson"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.level <= 0:
            raise ValueError("noise level must be > 0")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def add_gaussian_noise(img, spec: NoiseSpec) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of std ``spec.level``.

    The output is not clipped; values may leave [0, 1].
    """
    if spec.kind != "gaussian":
        raise ValueError(f"expected gaussian spec, got {spec.kind!r}")
    img = as_image(img)
    noise = _rng(spec.seed).normal(0.0, spec.level, size=img.shape)
    return img + noise


def add_poisson_noise(img, spec: NoiseSpec) -> np.ndarray:
    """Scaled Poisson noise: Poisson(max(0, img / d^2)) * d^2 with d = level."""
    if spec.kind != "poisson":
        raise ValueError(f"expected poisson spec, got {spec.kind!r}")
    img = as_image(img)
    d2 = spec.level**2
    counts = _rng(spec.seed).poisson(np.maximum(img, 0.0) / d2)
    return counts.astype(np.float64) * d2
