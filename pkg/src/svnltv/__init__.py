"""Color image restoration by saturation-value nonlocal total variation."""

from .degrade import (
    BlurKernel,
    NoiseSpec,
    add_gaussian_noise,
    add_poisson_noise,
    convolve_periodic,
    gaussian_kernel,
    identity_kernel,
    motion_kernel,
)
from .functional import RegWeights, nltv, objective, svs_nltv, svs_nltv_qform
from .graph import (
    NonlocalGraph,
    PatchParams,
    build_channel_graph,
    build_graph,
    load_graph,
    nl_divergence,
    nl_gradient,
    nl_inner,
    nl_laplacian,
    save_graph,
)
from .image import clamp, load_image, rgb_to_sv, save_image, sv_to_rgb
from .metrics import MetricsReport, evaluate_pair, psnr, qssim, scielab_count, ssim
from .restoration import NonlocalTVRestorer
from .solver import (
    DivergenceError,
    RestoreResult,
    SolverConfig,
    SpectralGuardError,
    SplitState,
    estimate_spectral_norm,
    p_update_l1,
    p_update_l2,
    shrink,
    solve,
    u_subproblem,
    w_update,
)

__version__ = "0.1.0"

__all__ = [
    "BlurKernel",
    "NoiseSpec",
    "add_gaussian_noise",
    "add_poisson_noise",
    "convolve_periodic",
    "gaussian_kernel",
    "identity_kernel",
    "motion_kernel",
    "RegWeights",
    "nltv",
    "objective",
    "svs_nltv",
    "svs_nltv_qform",
    "NonlocalGraph",
    "PatchParams",
    "build_channel_graph",
    "build_graph",
    "load_graph",
    "save_graph",
    "nl_divergence",
    "nl_gradient",
    "nl_inner",
    "nl_laplacian",
    "clamp",
    "load_image",
    "rgb_to_sv",
    "save_image",
    "sv_to_rgb",
    "MetricsReport",
    "evaluate_pair",
    "psnr",
    "qssim",
    "scielab_count",
    "ssim",
    "NonlocalTVRestorer",
    "DivergenceError",
    "RestoreResult",
    "SolverConfig",
    "SpectralGuardError",
    "SplitState",
    "estimate_spectral_norm",
    "p_update_l1",
    "p_update_l2",
    "shrink",
    "solve",
    "u_subproblem",
    "w_update",
]
