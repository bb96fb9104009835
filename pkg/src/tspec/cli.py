"""Batch front-end: JSON run configuration in, CSV/JSON artifacts out.

Subcommands cover the analysis stages (hypotheses, spectrum slice, kernel
search, branch continuation, growth curve).  Outputs are deterministic for
a fixed configuration; the manifest is the only file carrying wall-clock
data.  Exit codes are a stable contract: 0 success, 1 configuration or IO
problem, 2 hypothesis failure, 3 kernel wavenumber not found, 4
continuation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy
import threadpoolctl

from . import __version__
from .bifurcation import growth_curve, trace_branch
from .errors import (
    BadProfileFile,
    ConfigError,
    EigFailure,
    InvalidGrid,
    InvalidSpeed,
    KernelNotSimple,
    NewtonDiverged,
    NoBracket,
    NoConvergence,
    NoNegativeDirection,
    NoSignChange,
    ProfileNotPositive,
    SaturatedCount,
    ShiftSingular,
    SingularBorder,
    TspecError,
)
from .models import (
    EKParams,
    GPBlackParams,
    KPIParams,
    ek_family,
    ek_params_from_profile,
    gp_black_family,
    gp_dark_ek_params,
    kpi_family,
    load_profile_csv,
)
from .numgrid import build_grid, sym_eigs
from .opcore import (
    TAU_KER_DEFAULT,
    TAU_NEG_DEFAULT,
    HypothesisOptions,
    check_hypotheses,
    find_k0,
)

__all__ = [
    "RunConfig",
    "load_config",
    "MODEL_REGISTRY",
    "cmd_hypotheses",
    "cmd_spectrum",
    "cmd_find_k0",
    "cmd_branch",
    "cmd_growth",
    "main",
    "console_main",
]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_NO_K0 = 3
EXIT_CONTINUATION = 4

# Errors that mean the run was misconfigured rather than that the
# mathematics said no.
_CONFIG_ERRORS = (
    ConfigError,
    BadProfileFile,
    InvalidGrid,
    InvalidSpeed,
    ProfileNotPositive,
    OSError,
    ValueError,
)


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with model defaults filled in."""

    model: str
    model_params: dict
    grid_half_width: float
    grid_n: int
    tau_neg: float
    tau_ker: float
    tol_branch: float | None
    k_scan_max: float | None
    sigma_max: float
    branch_steps: int
    growth_k_min: float | None
    growth_k_max: float | None
    growth_samples: int
    output_dir: str
    raw: dict = field(repr=False)


def _build_kpi(config: RunConfig):
    params = KPIParams(
        p=int(config.model_params.get("p", 2)),
        grid_half_width=config.grid_half_width,
        grid_n=config.grid_n,
        k_scan_max=config.k_scan_max or 4.0,
    )
    grid = build_grid(params.grid_half_width, params.grid_n)
    return kpi_family(params, grid), grid


def _ek_family_from(config: RunConfig, params: EKParams):
    grid = build_grid(config.grid_half_width, config.grid_n)
    return ek_family(params, grid), grid


def _build_ek_gp_dark(config: RunConfig):
    params = gp_dark_ek_params(
        float(config.model_params.get("c", 0.5)),
        k_scan_max=config.k_scan_max or 4.0,
        grid_half_width=config.grid_half_width,
        grid_n=config.grid_n,
    )
    return _ek_family_from(config, params)


def _build_ek_custom(config: RunConfig):
    path = config.model_params.get("profile_csv")
    if not path:
        raise ConfigError("ek-custom requires model_params.profile_csv")
    profile = load_profile_csv(path)
    params = ek_params_from_profile(
        profile,
        float(config.model_params.get("c", 0.5)),
        k_scan_max=config.k_scan_max or 4.0,
        grid_half_width=config.grid_half_width,
        grid_n=config.grid_n,
    )
    return _ek_family_from(config, params)


def _build_gp_black(config: RunConfig):
    params = GPBlackParams(
        grid_half_width=config.grid_half_width,
        grid_n=config.grid_n,
        k_scan_max=config.k_scan_max or 3.0,
    )
    grid = build_grid(params.grid_half_width, params.grid_n)
    return gp_black_family(params, grid), grid


# Model name -> (builder, default half-width). Tests may register
# additional entries; load_config validates against the live registry.
MODEL_REGISTRY = {
    "kpi": (_build_kpi, 40.0),
    "ek-gp-dark": (_build_ek_gp_dark, 40.0),
    "ek-custom": (_build_ek_custom, 40.0),
    "gp-black": (_build_gp_black, 30.0),
}


def load_config(path: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Raises :class:`ConfigError` for malformed JSON, unknown models,
    non-positive tolerances, undersized grids, or missing referenced
    files.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    model = raw.get("model")
    if model not in MODEL_REGISTRY:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise ConfigError(f"unknown model {model!r} (known: {known})")
    default_l = MODEL_REGISTRY[model][1]
    grid = raw.get("grid", {})
    half_width = float(grid.get("L", default_l))
    n = int(grid.get("n", 1024))
    if n < 3:
        raise ConfigError(f"grid needs at least 3 points, got n = {n}")
    if half_width <= 0.0:
        raise ConfigError(f"grid half-width must be positive, got {half_width}")
    tol = raw.get("tolerances", {})
    tau_neg = float(tol.get("tau_neg", TAU_NEG_DEFAULT))
    tau_ker = float(tol.get("tau_ker", TAU_KER_DEFAULT))
    tol_branch = tol.get("tol_branch")
    if tol_branch is not None:
        tol_branch = float(tol_branch)
    for name, value in (("tau_neg", tau_neg), ("tau_ker", tau_ker)):
        if value <= 0.0:
            raise ConfigError(f"tolerance {name} must be positive, got {value}")
    if tol_branch is not None and tol_branch <= 0.0:
        raise ConfigError(f"tolerance tol_branch must be positive, got {tol_branch}")
    k0_search = raw.get("k0_search", {})
    k_scan_max = k0_search.get("k_scan_max")
    if k_scan_max is not None:
        k_scan_max = float(k_scan_max)
        if k_scan_max <= 0.0:
            raise ConfigError(f"k_scan_max must be positive, got {k_scan_max}")
    branch = raw.get("branch", {})
    sigma_max = float(branch.get("sigma_max", 0.1))
    steps = int(branch.get("steps", 20))
    if steps < 1:
        raise ConfigError(f"branch needs at least one step, got {steps}")
    if sigma_max < 0.0:
        raise ConfigError(f"sigma_max must be nonnegative, got {sigma_max}")
    growth = raw.get("growth", {})
    samples = int(growth.get("samples", 8))
    if samples < 0:
        raise ConfigError(f"growth sample count must be nonnegative, got {samples}")
    params = raw.get("model_params", {})
    csv_path = params.get("profile_csv")
    if csv_path is not None and not os.path.exists(csv_path):
        raise ConfigError(f"profile file does not exist: {csv_path}")
    return RunConfig(
        model=model,
        model_params=dict(params),
        grid_half_width=half_width,
        grid_n=n,
        tau_neg=tau_neg,
        tau_ker=tau_ker,
        tol_branch=tol_branch,
        k_scan_max=k_scan_max,
        sigma_max=sigma_max,
        branch_steps=steps,
        growth_k_min=None if growth.get("k_min") is None else float(growth["k_min"]),
        growth_k_max=None if growth.get("k_max") is None else float(growth["k_max"]),
        growth_samples=samples,
        output_dir=str(raw.get("output_dir", ".")),
        raw=raw,
    )


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else _fmt(v) for v in row])


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Manifest:
    """Run manifest, written once up front and finalized at exit so a
    partial run still leaves a diagnosable record."""

    def __init__(self, out_dir: str, command: str, config: RunConfig):
        self.path = os.path.join(out_dir, "manifest.json")
        self.t0 = time.monotonic()
        self.payload = {
            "command": command,
            "config": config.raw,
            "status": "running",
            "versions": {
                "numpy": np.__version__,
                "python": platform.python_version(),
                "scipy": scipy.__version__,
                "tspec": __version__,
            },
        }
        _write_json(self.path, self.payload)

    def finish(self, status: str, **extra) -> None:
        self.payload["status"] = status
        self.payload["wall_clock_s"] = round(time.monotonic() - self.t0, 3)
        self.payload.update(extra)
        _write_json(self.path, self.payload)


def _prepare(config: RunConfig, command: str, out_override: str | None):
    out_dir = out_override or config.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
    manifest = _Manifest(out_dir, command, config)
    return out_dir, manifest


def _hypothesis_payload(report) -> dict:
    def listify(values):
        return None if values is None else [float(v) for v in np.atleast_1d(values)]

    return {
        "h1": {
            "pass": report.h1.passed,
            "k_probe": report.h1.k_probe,
            "lambda_min_at_probe": report.h1.lambda_min_at_probe,
            "alpha_required": report.h1.alpha_required,
        },
        "h2": {
            "pass": report.h2.passed,
            "k_samples": listify(report.h2.k_samples),
            "floors": listify(report.h2.floors),
            "note": report.h2.note,
        },
        "h3": {
            "pass": report.h3.passed,
            "k_samples": listify(report.h3.k_samples),
            "min_eig_lprime": report.h3.min_eig_lprime,
            "kernel_quadratic_form": report.h3.kernel_quadratic_form,
        },
        "h4": {
            "pass": report.h4.passed,
            "n_negative_at_0": report.h4.n_negative_at_0,
            "lambda_neg": report.h4.lambda_neg,
            "gap": report.h4.gap,
        },
        "overall": report.overall,
    }


def cmd_hypotheses(config: RunConfig, out_override: str | None = None) -> int:
    """Run the four-hypothesis audit and write hypothesis_report.json."""
    out_dir, manifest = _prepare(config, "hypotheses", out_override)
    try:
        fam, grid = MODEL_REGISTRY[config.model][0](config)
        opts = HypothesisOptions(tau_neg=config.tau_neg)
        report = check_hypotheses(fam, grid, opts)
    except _CONFIG_ERRORS as exc:
        manifest.finish("failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_json(os.path.join(out_dir, "hypothesis_report.json"), _hypothesis_payload(report))
    manifest.finish("complete")
    if not report.overall:
        failed = [
            name
            for name, ev in (("h1", report.h1), ("h2", report.h2), ("h3", report.h3), ("h4", report.h4))
            if not ev.passed
        ]
        print(f"hypothesis failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return EXIT_OK


def cmd_spectrum(config: RunConfig, k: float = 0.0, out_override: str | None = None) -> int:
    """Write the lowest eigenvalues of L(k) to spectrum_k{value}.csv."""
    out_dir, manifest = _prepare(config, "spectrum", out_override)
    try:
        fam, grid = MODEL_REGISTRY[config.model][0](config)
        pairs = sym_eigs(fam.assemble_L(float(k)), 8)
    except (*_CONFIG_ERRORS, EigFailure) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    name = f"spectrum_k{float(k):g}.csv"
    _write_csv(
        os.path.join(out_dir, name),
        ["index", "eigenvalue"],
        [(float(i), v) for i, v in enumerate(pairs.values)],
    )
    manifest.finish("complete")
    return EXIT_OK


def _solve_k0(config: RunConfig, fam, grid):
    return find_k0(fam, grid, tau_neg=config.tau_neg, tau_ker=config.tau_ker)


def _write_kernel(out_dir: str, grid, fam, kernel: np.ndarray) -> str:
    parts = np.split(kernel, fam.dim_factor)
    header = ["x"] + (
        ["u"] if fam.dim_factor == 1 else [f"u{i + 1}" for i in range(fam.dim_factor)]
    )
    rows = [
        (grid.nodes[i], *(part[i] for part in parts)) for i in range(grid.n)
    ]
    path = os.path.join(out_dir, "kernel.csv")
    _write_csv(path, header, rows)
    return path


def cmd_find_k0(config: RunConfig, out_override: str | None = None) -> int:
    """Locate the kernel wavenumber; write k0.json and kernel.csv."""
    out_dir, manifest = _prepare(config, "find-k0", out_override)
    try:
        fam, grid = MODEL_REGISTRY[config.model][0](config)
        result = _solve_k0(config, fam, grid)
    except (NoNegativeDirection, NoSignChange, NoBracket, KernelNotSimple) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"kernel search failed: {exc}", file=sys.stderr)
        return EXIT_NO_K0
    except (*_CONFIG_ERRORS, EigFailure, SaturatedCount) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_kernel(out_dir, grid, fam, result.kernel)
    _write_json(
        os.path.join(out_dir, "k0.json"),
        {
            "gap": result.report.gap,
            "k0": result.k0,
            "kernel_file": "kernel.csv",
        },
    )
    manifest.finish("complete")
    return EXIT_OK


def cmd_branch(config: RunConfig, out_override: str | None = None) -> int:
    """Trace the branch to sigma_max and write branch.csv ordered by sigma."""
    out_dir, manifest = _prepare(config, "branch", out_override)
    try:
        fam, grid = MODEL_REGISTRY[config.model][0](config)
        result = _solve_k0(config, fam, grid)
        if config.sigma_max == 0.0:
            schedule = np.array([0.0])
        else:
            schedule = np.linspace(0.0, config.sigma_max, config.branch_steps + 1)
        branch = trace_branch(
            fam, grid, result.k0, result.kernel, schedule, config.tol_branch
        )
    except (NoNegativeDirection, NoSignChange, NoBracket, KernelNotSimple) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"kernel search failed: {exc}", file=sys.stderr)
        return EXIT_NO_K0
    except (NewtonDiverged, SingularBorder) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"continuation failed: {exc}", file=sys.stderr)
        return EXIT_CONTINUATION
    except (*_CONFIG_ERRORS, EigFailure, SaturatedCount) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_csv(
        os.path.join(out_dir, "branch.csv"),
        ["sigma", "k", "residual", "norm_V"],
        [
            (p.sigma, p.k, p.residual, float(np.linalg.norm(p.V)))
            for p in branch.points
        ],
    )
    manifest.finish("complete")
    return EXIT_OK


def cmd_growth(config: RunConfig, out_override: str | None = None) -> int:
    """Sample the growth curve across the unstable band; write growth.csv."""
    out_dir, manifest = _prepare(config, "growth", out_override)
    growth_path = os.path.join(out_dir, "growth.csv")
    if config.growth_samples == 0:
        _write_csv(growth_path, ["k", "sigma", "residual"], [])
        manifest.finish("complete")
        return EXIT_OK
    try:
        fam, grid = MODEL_REGISTRY[config.model][0](config)
        result = _solve_k0(config, fam, grid)
        k0 = result.k0
        k_min = config.growth_k_min if config.growth_k_min is not None else 0.25 * k0
        k_max = config.growth_k_max if config.growth_k_max is not None else 0.95 * k0
        targets = np.linspace(k_min, k_max, config.growth_samples)
        in_band = [float(k) for k in targets if 0.0 < k < k0]
        curve = (
            growth_curve(fam, grid, k0, result.kernel, in_band) if in_band else []
        )
    except (NoNegativeDirection, NoSignChange, NoBracket, KernelNotSimple) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"kernel search failed: {exc}", file=sys.stderr)
        return EXIT_NO_K0
    except (NewtonDiverged, SingularBorder, ShiftSingular, NoConvergence) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"continuation failed: {exc}", file=sys.stderr)
        return EXIT_CONTINUATION
    except (*_CONFIG_ERRORS, EigFailure, SaturatedCount) as exc:
        manifest.finish("failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    by_k = {s.k: s for s in curve}
    rows = []
    converged = 0
    for k in targets:
        sample = by_k.get(float(k))
        if sample is not None and sample.sigma is not None:
            converged += 1
            rows.append((float(k), sample.sigma, sample.residual))
        else:
            rows.append((float(k), None, None))
    _write_csv(growth_path, ["k", "sigma", "residual"], rows)
    manifest.finish("complete", converged=converged, requested=int(config.growth_samples))
    if converged < 0.8 * config.growth_samples:
        print(
            f"growth curve: only {converged}/{config.growth_samples} samples converged",
            file=sys.stderr,
        )
        return EXIT_CONTINUATION
    return EXIT_OK


def _apply_thread_cap() -> None:
    value = os.environ.get("TSPEC_THREADS")
    if not value:
        return
    try:
        limit = int(value)
    except ValueError:
        return
    if limit >= 1:
        threadpoolctl.threadpool_limits(limits=limit)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tspec",
        description="Transverse spectral stability analysis of solitary waves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("hypotheses", "spectrum", "find-k0", "branch", "growth"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON run configuration")
        cmd.add_argument("--out", default=None, help="output directory override")
        if name == "spectrum":
            cmd.add_argument("--k", type=float, default=0.0, help="wavenumber slice")
    args = parser.parse_args(argv)
    _apply_thread_cap()
    try:
        config = load_config(args.config)
        if args.command == "hypotheses":
            return cmd_hypotheses(config, args.out)
        if args.command == "spectrum":
            return cmd_spectrum(config, args.k, args.out)
        if args.command == "find-k0":
            return cmd_find_k0(config, args.out)
        if args.command == "branch":
            return cmd_branch(config, args.out)
        return cmd_growth(config, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())
