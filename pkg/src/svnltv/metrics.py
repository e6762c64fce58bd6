"""Image quality metrics: PSNR, SSIM, quaternion SSIM, S-CIELAB count.

All metrics take float images in [0, 1] (peak 1 for PSNR). SSIM and
QSSIM share the reference 11x11 Gaussian window (sigma 1.5) and
constants K1=0.01, K2=0.03; local statistics are computed on the
interior of the image (5-pixel margin cropped) so every window is
fully supported. QSSIM treats pixels as pure quaternions scaled by
1/sqrt(3) so that achromatic images reduce exactly to the scalar SSIM
path. The S-CIELAB count filters both images in opponent color space
with visual-angle-scaled kernels before the CIELAB difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import as_image

__all__ = ["MetricsReport", "psnr", "ssim", "qssim", "scielab_count", "evaluate_pair"]

_C1 = 0.01**2
_C2 = 0.03**2
_WIN_RADIUS = 5
_WIN_SIGMA = 1.5


@dataclass(frozen=True)
class MetricsReport:
    psnr: float
    ssim: float
    qssim: float
    scielab_count: int


def _check_pair(a, b, min_side: int = 1):
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape[:2]) < min_side:
        raise ValueError(f"images must be at least {min_side}x{min_side}")
    return a, b


def psnr(a, b) -> float:
    """10 log10(1 / MSE) with MSE over all pixels and channels; inf if equal."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _window() -> np.ndarray:
    t = np.arange(-_WIN_RADIUS, _WIN_RADIUS + 1, dtype=np.float64)
    g = np.exp(-(t**2) / (2.0 * _WIN_SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def _local_mean(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Windowed mean on the fully supported interior of the raster."""
    m = ndimage.correlate(x, win, mode="constant")
    return m[_WIN_RADIUS:-_WIN_RADIUS, _WIN_RADIUS:-_WIN_RADIUS]


def ssim(a, b) -> float:
    """Mean structural similarity, averaged over the three channels."""
    a, b = _check_pair(a, b, min_side=2 * _WIN_RADIUS + 1)
    win = _window()
    total = 0.0
    for c in range(3):
        x, y = a[:, :, c], b[:, :, c]
        mx = _local_mean(x, win)
        my = _local_mean(y, win)
        vx = _local_mean(x * x, win) - mx * mx
        vy = _local_mean(y * y, win) - my * my
        cov = _local_mean(x * y, win) - mx * my
        s = ((2.0 * mx * my + _C1) * (2.0 * cov + _C2)) / (
            (mx * mx + my * my + _C1) * (vx + vy + _C2)
        )
        total += float(np.mean(s))
    return total / 3.0


def qssim(a, b) -> float:
    """Structural similarity on pure-quaternion pixels.

    Pixels embed as (r i + g j + b k)/sqrt(3). Luminance uses the moduli
    of the windowed quaternion means; the structure term uses the
    modulus of the quaternion covariance, signed by its scalar part so
    anticorrelated content scores negative. Equals 1 for identical
    images and collapses to scalar SSIM on achromatic pairs.
    """
    a, b = _check_pair(a, b, min_side=2 * _WIN_RADIUS + 1)
    win = _window()
    x = a / np.sqrt(3.0)
    y = b / np.sqrt(3.0)
    mx = np.stack([_local_mean(x[:, :, c], win) for c in range(3)], axis=-1)
    my = np.stack([_local_mean(y[:, :, c], win) for c in range(3)], axis=-1)
    mod_mx2 = np.sum(mx * mx, axis=-1)
    mod_my2 = np.sum(my * my, axis=-1)
    vx = _local_mean(np.sum(x * x, axis=-1), win) - mod_mx2
    vy = _local_mean(np.sum(y * y, axis=-1), win) - mod_my2
    # covariance quaternion of pure quaternions: scalar part is the dot
    # product, vector part minus the cross product
    cov_scalar = _local_mean(np.sum(x * y, axis=-1), win) - np.sum(mx * my, axis=-1)
    cross = np.cross(x.reshape(-1, 3), y.reshape(-1, 3)).reshape(x.shape)
    mean_cross = np.stack([_local_mean(cross[:, :, c], win) for c in range(3)], axis=-1)
    cov_vec = -(mean_cross - np.cross(mx.reshape(-1, 3), my.reshape(-1, 3)).reshape(mx.shape))
    cov_mod = np.sqrt(cov_scalar**2 + np.sum(cov_vec**2, axis=-1))
    cov_signed = np.where(cov_scalar < 0.0, -cov_mod, cov_mod)
    s = ((2.0 * np.sqrt(mod_mx2) * np.sqrt(mod_my2) + _C1) * (2.0 * cov_signed + _C2)) / (
        (mod_mx2 + mod_my2 + _C1) * (vx + vy + _C2)
    )
    return float(np.mean(s))


# sRGB (D65) to XYZ, IEC 61966-2-1
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

# XYZ to opponent (luminance, red-green, blue-yellow)
_XYZ_TO_OPP = np.array(
    [
        [0.279, 0.720, -0.107],
        [-0.449, 0.290, -0.077],
        [0.086, -0.590, 0.501],
    ]
)
_OPP_TO_XYZ = np.linalg.inv(_XYZ_TO_OPP)

# two-Gaussian fits of the opponent contrast sensitivities:
# (weight, spread in degrees of visual angle) per channel
_OPP_FILTERS = (
    ((0.7931, 0.0283), (0.2069, 0.1330)),
    ((0.7116, 0.0479), (0.2884, 0.1333)),
    ((0.6064, 0.0670), (0.3936, 0.1333)),
)


def _srgb_to_xyz(img: np.ndarray) -> np.ndarray:
    c = np.clip(img, 0.0, 1.0)
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    return lin @ _SRGB_TO_XYZ.T


def _xyz_to_lab(xyz: np.ndarray) -> np.ndarray:
    t = xyz / _WHITE_D65
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _opponent_kernel(pairs, samples_per_degree: float) -> np.ndarray:
    """Sum of isotropic Gaussians, spreads scaled to pixels, sum 1."""
    spreads = [s * samples_per_degree for _, s in pairs]
    radius = max(1, int(np.ceil(3.0 * max(spreads))))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.zeros((t.size, t.size))
    for (weight, _), sd in zip(pairs, spreads):
        g = np.exp(-(t**2) / (2.0 * sd**2))
        g2 = np.outer(g, g)
        k += weight * g2 / g2.sum()
    return k / k.sum()


def _scielab_lab(img: np.ndarray, samples_per_degree: float) -> np.ndarray:
    opp = _srgb_to_xyz(img) @ _XYZ_TO_OPP.T
    filtered = np.empty_like(opp)
    for c in range(3):
        k = _opponent_kernel(_OPP_FILTERS[c], samples_per_degree)
        filtered[:, :, c] = ndimage.correlate(opp[:, :, c], k, mode="mirror")
    return _xyz_to_lab(filtered @ _OPP_TO_XYZ.T)


def scielab_count(a, b, threshold: float = 15.0, samples_per_degree: float = 23.0) -> int:
    """Number of pixels whose spatially filtered CIELAB distance exceeds
    ``threshold``.

    Both images are interpreted as sRGB, converted to opponent space,
    filtered with visual-angle-scaled kernels (identity on constants),
    converted to CIELAB (D65), and compared with the Euclidean delta-E.
    """
    a, b = _check_pair(a, b)
    lab_a = _scielab_lab(a, samples_per_degree)
    lab_b = _scielab_lab(b, samples_per_degree)
    delta = np.sqrt(np.sum((lab_a - lab_b) ** 2, axis=-1))
    return int(np.count_nonzero(delta > threshold))


def evaluate_pair(a, b, threshold: float = 15.0, samples_per_degree: float = 23.0) -> MetricsReport:
    """All four metrics for one restored/reference pair."""
    return MetricsReport(
        psnr=psnr(a, b),
        ssim=ssim(a, b),
        qssim=qssim(a, b),
        scielab_count=scielab_count(a, b, threshold, samples_per_degree),
    )
