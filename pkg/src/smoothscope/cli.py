"""Command-line front end.

``analyze``  estimate local smoothness at a set of centers
``rates``    run a named convergence-rate experiment
``synth``    sample a built-in test function to a data file

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .geometry import GeometryError, PointSet, bounding_box
from .interpolation import ConditioningError
from .kernels import KernelError, KernelSpec
from .ratelab import EXPERIMENTS, RateError, build_experiment, inverse_consistency_check, run_experiment, write_rate_table
from .rules import Rule, RuleError
from .salsa import SalsaOptions, StencilPolicy, SubsamplePolicy, analyze_field
from .tables import DataError, emit_report, fmt_float, ingest, read_coordinates, write_dataset
from .testbed import BUNNY_CENTER, FUNCTIONS, get_function, grid_points, halton_points

__all__ = ["main", "build_policy", "resolve_centers"]

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("smoothscope")


def resolve_centers(cfg: RunConfig, data: PointSet) -> PointSet:
    """Centers named by ``cfg.centers``: all sites, a file, or a grid over the data box."""
    if cfg.centers == "all":
        return data
    if cfg.centers.startswith("file:"):
        return read_coordinates(cfg.centers[5:], data.dim)
    n = int(cfg.centers[5:])
    box = bounding_box(data)
    axes = [np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2]) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.column_stack([m.ravel() for m in mesh]))


def build_policy(cfg: RunConfig, dim: int):
    if cfg.method == "stencil":
        fn = get_function(cfg.function)
        if fn.dim != dim:
            raise ConfigError(f"function: {fn.name} is {fn.dim}-D but the data are {dim}-D")
        return StencilPolicy(fn, cfg.levels, cfg.stencil_radius_rule, cfg.lengthscale_rule, fn.domain)
    if cfg.lengthscale_rule.name == "stencil_radius_x2":
        raise ConfigError("lengthscale_rule: stencil_radius_x2 needs the stencil method")
    return SubsamplePolicy(cfg.neighbors, cfg.levels, cfg.lengthscale_rule, cfg.measured_h)


def _parameters(cfg: RunConfig) -> dict[str, str]:
    out = {}
    for k, v in asdict(cfg).items():
        if k in ("lengthscale_rule", "stencil_radius_rule"):
            v = str(getattr(cfg, k))
        elif isinstance(v, float):
            v = fmt_float(v)
        out[k] = "" if v is None else str(v)
    return out


def cmd_analyze(args) -> int:
    cfg = load_config(args.config, RunConfig(mode="analyze"))
    cfg = replace(cfg, input=args.input or cfg.input, output=args.out or cfg.output)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if not cfg.input or not cfg.output:
        raise ConfigError("input, output: both paths are required")
    data, values = ingest(cfg.input)
    cfg.validate(dim=data.dim)
    if cfg.method == "subsample" and cfg.neighbors > len(data):
        raise ConfigError(f"neighbors: {cfg.neighbors} exceeds the {len(data)} data sites")
    policy = build_policy(cfg, data.dim)
    centers = resolve_centers(cfg, data)
    # The lengthscale below is a placeholder; the policy's rule sets it per center.
    spec = KernelSpec(cfg.tau, data.dim, 1.0, bessel=cfg.bessel)
    options = SalsaOptions(cfg.drop_first, cfg.floor, cfg.native_track, cfg.drop_flagged)
    t0 = time.perf_counter()
    reports = analyze_field(spec, data, values, centers, policy, options, workers=cfg.worker_count)
    log.info("analyzed %d centers in %.1f s", len(reports), time.perf_counter() - t0)
    emit_report(reports, cfg.output, parameters=_parameters(cfg), raw=cfg.raw_dump)
    n_bad = sum(r.status != "ok" for r in reports)
    print(f"{len(reports)} centers, {n_bad} degenerate -> {Path(cfg.output) / 'smoothness.csv'}")
    return EXIT_OK


def cmd_rates(args) -> int:
    cfg = RunConfig(mode="rates", tau=3.0, lengthscale_rule=Rule("fixed", 0.25))
    if args.config:
        cfg = load_config(args.config, cfg)
    cfg.validate()
    if args.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if cfg.lengthscale_rule.name != "fixed":
        raise ConfigError("lengthscale_rule: rate experiments need fixed(value)")
    exp = build_experiment(
        args.experiment, tau=cfg.tau, k_min=cfg.grid_min, k_max=cfg.grid_max, lengthscale=cfg.lengthscale_rule.value
    )
    result = run_experiment(exp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = write_rate_table(result, out / f"{exp.name}_rates.csv")
    lines = [f"experiment {exp.name}: tau={fmt_float(cfg.tau)} known_beta={fmt_float(exp.known_beta)}"]
    for q, fit in result.error_fits.items():
        qn = "inf" if q == math.inf else format(q, "g")
        lines.append(
            f"L{qn} exponent {fit.slope:.4f} (predicted {exp.predicted_error_exponent(q):.4f}, r2 {fit.r_squared:.4f})"
        )
    nf = result.native_fit
    lines.append(f"native exponent {nf.slope:.4f} (predicted {exp.predicted_native_exponent:.4f}, r2 {nf.r_squared:.4f})")
    if exp.name != "translate":
        chk = inverse_consistency_check(exp)
        lines.append(
            f"inverse check: rates {chk.beta_from_rates:.4f} vs local {chk.beta_from_salsa:.4f} "
            f"-> {'pass' if chk.passed else 'fail'}"
        )
    if result.pre_asymptotic:
        lines.append("warning: pre-asymptotic fit (r2 < 0.95)")
    (out / f"{exp.name}_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    print(f"table -> {table}")
    return EXIT_OK


def cmd_synth(args) -> int:
    fn = get_function(args.function)
    if args.n < 1:
        raise ConfigError("n: must be positive")
    if args.sampler == "halton":
        pts = halton_points(args.n, fn.domain)
    else:
        per_axis = max(2, int(round(args.n ** (1.0 / fn.dim))))
        pts = grid_points(per_axis, fn.domain)
    coords = pts.coords
    if fn.name == "bunny_3d":
        coords = coords[np.any(coords != np.asarray(BUNNY_CENTER), axis=1)]
    values = fn(coords)
    write_dataset(args.out, PointSet(coords, check=False), values)
    print(f"{len(coords)} points of {fn.name} -> {args.out}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothscope", description="Local Sobolev smoothness of scattered data.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="estimate local smoothness at every center")
    a.add_argument("--input", help="data table x1..xd,f")
    a.add_argument("--config", required=True, help="key=value configuration file")
    a.add_argument("--out", help="output directory")
    a.add_argument("--workers", type=int, help="override the worker count")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("rates", help="run a convergence-rate experiment")
    r.add_argument("--experiment", required=True, help="abs, step, sine or translate")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--config", help="optional key=value file (tau, lengthscale_rule, grid_min, grid_max)")
    r.set_defaults(func=cmd_rates)

    s = sub.add_parser("synth", help="sample a built-in test function")
    s.add_argument("--function", required=True, choices=sorted(FUNCTIONS))
    s.add_argument("--sampler", required=True, choices=("grid", "halton"))
    s.add_argument("--n", required=True, type=int, help="number of points (grid: rounded to a full tensor grid)")
    s.add_argument("--out", required=True, help="output file")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        return args.func(args)
    except (ConfigError, RuleError, KernelError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) else exc
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GeometryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConditioningError, np.linalg.LinAlgError, FloatingPointError, RateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
