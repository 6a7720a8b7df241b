"""Command line interface: ``levykernel <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import AsymptoticRegime, PowerLawBandwidth, check_conditions, optimal_exponents
from .estimators import LevyKernelDensity
from .exceptions import ConfigError, DomainError, NoDataError, SimulationError
from .harness import (
    CoverageReport,
    _write_csv,
    config_hash,
    coverage_study,
    load_config,
    run_scenario,
    simulate_trajectory,
)
from .simulate import SamplePath, read_path, write_jumplog, write_path

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("levykernel")


def _pair(text: str, name: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"--{name} expects two comma-separated numbers, got {text!r}") from None
    if len(vals) != 2:
        raise ConfigError(f"--{name} expects two comma-separated numbers, got {text!r}")
    return vals


def _values(text: str):
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ":" in part:
            lo, hi, step = (float(v) for v in part.split(":"))
            if step <= 0 or hi < lo:
                raise ConfigError(f"bad range {part!r}; expected lo:hi:step with step > 0")
            n = int(np.floor((hi - lo) / step + 1e-9))
            out += [round(lo + k * step, 10) for k in range(n + 1)]
        else:
            out.append(float(part))
    return out


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``x=0,2;y=-4:-0.3:0.05,0.3:4:0.05`` into ``(x, y)`` rows."""
    fields = {}
    try:
        for item in filter(None, (s.strip() for s in spec.split(";"))):
            key, _, val = item.partition("=")
            fields[key.strip()] = _values(val)
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}: {exc}") from None
    if set(fields) != {"x", "y"}:
        raise ConfigError(f"grid spec needs exactly x=... and y=..., got {spec!r}")
    return np.array([(x, y) for x in fields["x"] for y in fields["y"]], dtype=float).reshape(-1, 2)


def _config_from_args(args):
    cfg = load_config(args.config)
    changes = {
        "base_seed": getattr(args, "seed", None),
        "t_end": getattr(args, "t_end", None),
        "delta": getattr(args, "delta", None),
        "substeps": getattr(args, "substeps", None),
        "eps_jump": getattr(args, "eps_jump", None),
        "monte_carlo": getattr(args, "trajectories", None),
        "level": getattr(args, "level", None),
        "ci_method": getattr(args, "method", None),
    }
    if getattr(args, "bandwidth", None):
        changes["bandwidths"] = [_pair(args.bandwidth, "bandwidth")]
    if getattr(args, "subtract_bias", None) is not None:
        changes["subtract_bias"] = args.subtract_bias
    if getattr(args, "out", None):
        changes["output_dir"] = args.out
    return cfg.replace(**changes)


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    path, jumps = simulate_trajectory(cfg, 0)
    header = {"config_hash": chash, "version": __version__}
    write_path(path, out / "path.csv", header)
    write_jumplog(jumps, out / "jumps.csv", path.seed, path.model_id, header)
    files = ["path.csv", "jumps.csv"]
    if args.fine:
        write_path(SamplePath(jumps.step, jumps.sojourn_grid, path.seed, path.model_id),
                   out / "fine.csv", header)
        files.append("fine.csv")
    manifest = {"config": cfg.to_dict(), "config_hash": chash, "version": __version__,
                "seeds": [cfg.seed_for(0)], "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(path.values)} observations and {len(jumps.jumps)} logged jumps to {out}")
    return 0


def cmd_estimate(args) -> int:
    try:
        path = read_path(args.path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read {args.path}: {exc}") from exc
    grid = parse_grid(args.grid)
    if args.floor is not None:
        grid = grid[np.abs(grid[:, 1]) >= args.floor]
    if np.any(grid[:, 1] == 0.0):
        raise ConfigError("the grid contains y = 0, where the density is undefined")
    bw = _pair(args.bandwidth, "bandwidth")
    est = LevyKernelDensity(bandwidth=tuple(bw), kernel=args.kernel, level=args.level,
                            ci_method=args.method, subtract_bias=args.subtract_bias,
                            sigma=args.sigma, zeta=args.zeta)
    est.fit(path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {"bandwidth": args.bandwidth, "kernel": args.kernel, "level": args.level,
                  "method": args.method, "subtract_bias": args.subtract_bias, "path": str(args.path),
                  "delta": path.delta, "seed": path.seed, "version": __version__}
    chash = hashlib.sha256(json.dumps(provenance, sort_keys=True).encode()).hexdigest()[:16]
    rows = []
    if len(grid):
        table = est.estimate(grid)
        rows = table.rows()
        cols = table.columns()
    else:
        cols = ["x", "y", "f_hat", "gamma_hat", "denom", "reliable", "ci_lo", "ci_hi", "method"]
    _write_csv(out / "estimates.csv", cols, rows, {"config_hash": chash, "version": __version__})
    (out / "manifest.json").write_text(json.dumps(
        {"config": provenance, "config_hash": chash, "version": __version__,
         "files": ["estimates.csv"]}, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(grid)} estimates to {out / 'estimates.csv'}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    manifest = run_scenario(cfg, args.out, n_jobs=args.jobs, save_paths=args.save_paths)
    print(f"wrote {len(manifest['files'])} files to {args.out} (config {manifest['config_hash']})")
    return 0


def cmd_coverage(args) -> int:
    cfg = _config_from_args(args)
    if cfg.base_seed is None:
        raise ConfigError("coverage needs --seed or a base_seed in the config")
    report: CoverageReport = coverage_study(cfg, out_dir=args.out, n_jobs=args.jobs)
    print(f"{report.n_trajectories} trajectories, eta={report.bandwidth}, level={report.level}, "
          f"method={report.method}")
    print(f"coverage: min {np.min(report.coverage):.3f}  mean {np.mean(report.coverage):.3f}  "
          f"max {np.max(report.coverage):.3f} over {len(report.coverage)} points")
    return 0


def cmd_check_bandwidth(args) -> int:
    e1, e2 = _pair(args.eta_exponents, "eta-exponents")
    c1, c2 = _pair(args.eta_coeffs, "eta-coeffs")
    try:
        regime = AsymptoticRegime(args.alpha1, args.alpha2, args.d, args.beta, args.delta)
        eta1, eta2 = PowerLawBandwidth(c1, e1), PowerLawBandwidth(c2, e2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = check_conditions(eta1, eta2, regime, lag_exponent=args.lag_exponent)
    if args.format == "rows":
        for cid, status, q in report.rows():
            print(f"{cid},{status},{q:.17g}")
    else:
        print(report.table())
        xi1, xi2, rate = optimal_exponents(regime)
        print(f"\noptimal exponents: eta1 ~ T^-{xi1:.6g}, eta2 ~ T^-{xi2:.6g}, rate T^-{rate:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levykernel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_flags(sp, seed_required):
        sp.add_argument("--config", required=True, help="JSON file or preset name")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--out", required=True)
        sp.add_argument("--t-end", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--substeps", type=int)
        sp.add_argument("--eps-jump", type=float)

    def estimation_flags(sp):
        sp.add_argument("--bandwidth", help="eta1,eta2")
        sp.add_argument("--level", type=float)
        sp.add_argument("--method", choices=("inversion", "wald"))
        bias = sp.add_mutually_exclusive_group()
        bias.add_argument("--subtract-bias", dest="subtract_bias", action="store_true", default=None)
        bias.add_argument("--no-subtract-bias", dest="subtract_bias", action="store_false")
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("simulate", help="simulate one trajectory")
    scenario_flags(sp, True)
    sp.add_argument("--fine", action="store_true", help="also write the substep path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="estimate on a stored path")
    sp.add_argument("--path", required=True)
    sp.add_argument("--bandwidth", required=True, help="eta1,eta2")
    sp.add_argument("--grid", required=True, help="e.g. 'x=0,2;y=-4:-0.3:0.05,0.3:4:0.05'")
    sp.add_argument("--out", required=True)
    sp.add_argument("--kernel", default="biweight")
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--method", choices=("inversion", "wald"), default="inversion")
    sp.add_argument("--no-subtract-bias", dest="subtract_bias", action="store_false")
    sp.add_argument("--sigma", type=float, help="diffusion scale; default: median-increment proxy")
    sp.add_argument("--zeta", type=float, default=5.0)
    sp.add_argument("--floor", type=float, help="drop grid points with |y| below this")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("experiment", help="simulate, estimate and write plot data")
    scenario_flags(sp, True)
    estimation_flags(sp)
    sp.add_argument("--trajectories", type=int)
    sp.add_argument("--save-paths", action="store_true")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("coverage", help="Monte Carlo coverage study")
    scenario_flags(sp, False)
    estimation_flags(sp)
    sp.add_argument("--trajectories", type=int, required=True)
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("check-bandwidth", help="check asymptotic bandwidth conditions")
    sp.add_argument("--alpha1", type=float, required=True)
    sp.add_argument("--alpha2", type=float, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True, help="recurrence index; 1 when ergodic")
    sp.add_argument("--eta-exponents", required=True, help="E1,E2 in eta_i = C_i (n delta)^-E_i")
    sp.add_argument("--eta-coeffs", default="1,1", help="C1,C2")
    sp.add_argument("--lag-exponent", type=float, default=2.0, help="p in delta = (n delta)^-p")
    sp.add_argument("--format", choices=("table", "rows"), default="table")
    sp.set_defaults(func=cmd_check_bandwidth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, NoDataError, DomainError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
