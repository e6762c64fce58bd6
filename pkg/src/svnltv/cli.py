"""Command-line driver: degrade, restore, evaluate, and sweep.

Configuration is a flat ``key=value`` file ('#' comments allowed);
command-line flags override file values, unknown keys are rejected, and
every output CSV starts with '#'-prefixed lines echoing the fully
resolved configuration for reproducibility.

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numeric
guard violation or divergence.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

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
from .graph import PatchParams, build_channel_graph, build_graph, load_graph, save_graph
from .image import ImageError, load_image, save_image
from .metrics import evaluate_pair
from .solver import DivergenceError, SolverConfig, SpectralGuardError, solve

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


# every key a config file may carry, with its parser and default
def _bool(s):
    if isinstance(s, bool):
        return s
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ratio(s):
    """Float literal or a fraction like 30/255."""
    if isinstance(s, (int, float)):
        return float(s)
    if "/" in s:
        num, den = s.split("/", 1)
        return float(num) / float(den)
    return float(s)


CONFIG_KEYS = {
    "method": (str, "sv"),
    "fidelity": (str, "l2"),
    "alpha": (float, 0.1),
    "mu": (float, 0.05),
    "lam": (float, 1.0),
    "delta": (float, 0.45),
    "beta": (float, 1.0),
    "outer_max": (int, 200),
    "inner_max": (int, 2),
    "gs_sweeps": (int, 4),
    "tol": (float, 1e-6),
    "clamp_each_iter": (_bool, False),
    "gs_mode": (str, "serial"),
    "patch_radius": (int, 2),
    "search_radius": (int, 5),
    "neighbor_count": (int, 10),
    "kernel_sigma": (float, 1.0),
    "h0": (float, 0.1),
    "blur": (str, "none"),
    "noise": (str, "gaussian"),
    "sigma": (_ratio, 30 / 255),
    "d": (float, 0.3),
    "seed": (int, 0),
    "scielab_threshold": (float, 15.0),
    "scielab_spd": (float, 23.0),
}


def read_config_file(path) -> dict:
    """Parse a flat key=value file; unknown keys are a usage error."""
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        parse, _ = CONFIG_KEYS[key]
        try:
            cfg[key] = parse(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return cfg


def resolve_config(args) -> dict:
    """Defaults, then config file, then explicit command-line flags."""
    cfg = {key: default for key, (_, default) in CONFIG_KEYS.items()}
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            parse, _ = CONFIG_KEYS[key]
            cfg[key] = parse(flag)
    if cfg["method"] not in ("sv", "rgb"):
        raise UsageError(f"method must be sv or rgb, got {cfg['method']!r}")
    if cfg["fidelity"] not in ("l2", "l1"):
        raise UsageError(f"fidelity must be l2 or l1, got {cfg['fidelity']!r}")
    return cfg


def config_lines(cfg: dict) -> list[str]:
    return [f"# {key}={cfg[key]}" for key in sorted(cfg)]


def parse_blur(spec: str) -> BlurKernel:
    """Kernel spec: none | gaussian:SIGMA[:RADIUS] | motion:LENGTH:ANGLE."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "none":
            return identity_kernel()
        if kind == "gaussian":
            sigma = float(parts[1])
            radius = int(parts[2]) if len(parts) > 2 else None
            return gaussian_kernel(sigma, radius)
        if kind == "motion":
            return motion_kernel(int(parts[1]), float(parts[2]))
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad blur spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown blur kind {kind!r}")


def _solver_config(cfg: dict, alpha: float | None = None) -> SolverConfig:
    return SolverConfig(
        alpha=cfg["alpha"] if alpha is None else alpha,
        mu=cfg["mu"],
        lam=cfg["lam"],
        delta=cfg["delta"],
        beta=cfg["beta"],
        outer_max=cfg["outer_max"],
        inner_max=cfg["inner_max"],
        gs_sweeps=cfg["gs_sweeps"],
        tol=cfg["tol"],
        clamp_each_iter=cfg["clamp_each_iter"],
        gs_mode=cfg["gs_mode"],
    )


def _patch_params(cfg: dict) -> PatchParams:
    return PatchParams(
        patch_radius=cfg["patch_radius"],
        search_radius=cfg["search_radius"],
        neighbor_count=cfg["neighbor_count"],
        kernel_sigma=cfg["kernel_sigma"],
        h0=cfg["h0"],
    )


def _build_graphs(img, cfg: dict, cache: str | None):
    """Build the method's graph(s), optionally via the binary cache."""
    params = _patch_params(cfg)
    shape = img.shape[:2]
    if cfg["method"] == "sv":
        if cache and Path(cache).exists():
            return load_graph(cache, shape)
        graph = build_graph(img, params)
        if cache:
            save_graph(graph, cache)
        return graph
    paths = [f"{cache}.{c}" for c in "rgb"] if cache else [None] * 3
    graphs = []
    for c, path in enumerate(paths):
        if path and Path(path).exists():
            graphs.append(load_graph(path, shape))
            continue
        g = build_channel_graph(img[:, :, c], params)
        if path:
            save_graph(g, path)
        graphs.append(g)
    return tuple(graphs)


def cmd_degrade(args) -> int:
    cfg = resolve_config(args)
    img = load_image(args.input)
    kernel = parse_blur(cfg["blur"])
    out = convolve_periodic(img, kernel) if not kernel.is_identity else img
    if cfg["noise"] == "gaussian":
        out = add_gaussian_noise(out, NoiseSpec("gaussian", cfg["sigma"], cfg["seed"]))
    elif cfg["noise"] == "poisson":
        out = add_poisson_noise(out, NoiseSpec("poisson", cfg["d"], cfg["seed"]))
    elif cfg["noise"] != "none":
        raise UsageError(f"unknown noise kind {cfg['noise']!r}")
    save_image(out, args.output)
    return 0


def cmd_restore(args) -> int:
    cfg = resolve_config(args)
    img = load_image(args.input)
    kernel = parse_blur(cfg["blur"])
    graph = _build_graphs(img, cfg, args.graph_cache)
    result = solve(img, kernel, graph, _solver_config(cfg), cfg["fidelity"])
    save_image(result.restored, args.output)
    trace_path = args.trace or str(Path(args.output).with_suffix(".trace.csv"))
    with open(trace_path, "w", newline="") as fh:
        for line in config_lines(cfg):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "rel_err"])
        for i, (obj, rel) in enumerate(
            zip(result.objective_trace, result.rel_err_trace), start=1
        ):
            writer.writerow([i, repr(obj), repr(rel)])
    return 0


_METRIC_HEADER = ["restored", "reference", "psnr", "ssim", "qssim", "scielab_count"]


def _metric_row(name_a, name_b, report) -> list:
    return [
        name_a,
        name_b,
        "inf" if np.isinf(report.psnr) else repr(report.psnr),
        repr(report.ssim),
        repr(report.qssim),
        report.scielab_count,
    ]


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    a = load_image(args.restored)
    b = load_image(args.reference)
    report = evaluate_pair(a, b, cfg["scielab_threshold"], cfg["scielab_spd"])
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        for line in config_lines(cfg):
            out.write(line + "\n")
        out.write("# ssim_channels=mean_rgb\n")
        writer = csv.writer(out)
        writer.writerow(_METRIC_HEADER)
        writer.writerow(_metric_row(args.restored, args.reference, report))
    finally:
        if args.output:
            out.close()
    return 0


def parse_alpha_range(spec: str) -> list[float]:
    """lo:hi:step, inclusive of hi up to a half-step tolerance."""
    try:
        lo, hi, step = (float(part) for part in spec.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad alpha range {spec!r} (want lo:hi:step)") from exc
    if step <= 0 or hi < lo:
        raise UsageError(f"bad alpha range {spec!r}")
    count = int(np.floor((hi - lo) / step + 0.5)) + 1
    return [lo + i * step for i in range(count)]


def _sweep_one(payload):
    img, kernel, graph, cfg, alpha, reference, threshold, spd = payload
    result = solve(img, kernel, graph, _solver_config(cfg, alpha), cfg["fidelity"])
    report = evaluate_pair(result.restored, reference, threshold, spd)
    return alpha, report


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    img = load_image(args.input)
    reference = load_image(args.reference)
    if args.paper_range:
        n = img.shape[0] * img.shape[1]
        lo, hi = np.sqrt(n) / 1000.0, np.sqrt(n) / 10.0
        step = args.alpha_step
        alphas = parse_alpha_range(f"{lo}:{hi}:{step}")
    elif args.alphas:
        alphas = parse_alpha_range(args.alphas)
    else:
        raise UsageError("sweep needs --alphas lo:hi:step or --paper-range")
    kernel = parse_blur(cfg["blur"])
    graph = _build_graphs(img, cfg, args.graph_cache)
    payloads = [
        (img, kernel, graph, cfg, alpha, reference, cfg["scielab_threshold"], cfg["scielab_spd"])
        for alpha in alphas
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    best_alpha, best = max(results, key=lambda item: item[1].psnr)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        for line in config_lines(cfg):
            out.write(line + "\n")
        writer = csv.writer(out)
        writer.writerow(["kind", "alpha", "psnr", "ssim", "qssim", "scielab_count"])
        for alpha, report in results:
            writer.writerow(["point", repr(alpha)] + _metric_row("", "", report)[2:])
        writer.writerow(["best", repr(best_alpha)] + _metric_row("", "", best)[2:])
    finally:
        if args.output:
            out.close()
    return 0


def _add_config_flags(parser: argparse.ArgumentParser, keys=None) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    for key in keys or CONFIG_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svnltv",
        description="Color image restoration by saturation-value nonlocal TV",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="blur and add noise")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(p, ["blur", "noise", "sigma", "d", "seed"])
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("restore", help="run the solver on a degraded image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--trace", help="per-iteration CSV path (default: output stem)")
    p.add_argument("--graph-cache", help="binary graph cache path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("evaluate", help="metrics for a restored/reference pair")
    p.add_argument("restored")
    p.add_argument("reference")
    p.add_argument("--output", help="CSV path (default: stdout)")
    _add_config_flags(p, ["scielab_threshold", "scielab_spd"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="restore over an alpha range, report metrics")
    p.add_argument("input")
    p.add_argument("reference")
    p.add_argument("--alphas", help="lo:hi:step")
    p.add_argument("--paper-range", action="store_true",
                   help="use [sqrt(N)/1000, sqrt(N)/10] for an N-pixel image")
    p.add_argument("--alpha-step", type=float, default=0.01)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.add_argument("--graph-cache", help="binary graph cache path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpectralGuardError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
