"""Command-line front end.

Subcommands: scale, optimize, simulate, check-shapes, pmf.  Exit codes
are a stable contract: 0 success, 2 configuration error, 3 numeric
domain error, 4 validation alarm (simulation disagrees with the analytic
value beyond |z| > 4).  All outputs are deterministic given the config
bytes and seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .config import load_config
from .distributions import CompoundClaimDistribution, counting_pmf
from .errors import (
    ConfigError,
    DegenerateBarrierError,
    EvaluationError,
    ExtrapolationError,
    GridTooShortError,
    InsufficientDataError,
    ParameterError,
)
from .optimize import RULE_NONE, barrier_value, certify_optimality, find_b_star
from .report import dump_json, write_csv, write_grid_csv
from .scale import build_scale_grid, default_x_max
from .shapes import (
    check_density_cm,
    check_dfr,
    check_discrete_cm,
    check_discrete_dfr,
    check_discrete_log_convex,
    check_log_convex_density,
)
from .simulate import simulate_dividends, trace_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ALARM = 4

Z_ALARM = 4.0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="divbarrier",
        description="Optimal dividend barriers for bulk-arrival risk models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="YAML model configuration")
        p.add_argument("--out", required=needs_out, help="output file path")
        p.add_argument("--grid-n", type=int, default=None, help="override grid size")
        p.add_argument("--xmax", type=float, default=None, help="override grid range")

    p_scale = sub.add_parser("scale", help="tabulate the scale function to CSV")
    common(p_scale)

    p_opt = sub.add_parser("optimize", help="find b*, certify, write JSON report")
    common(p_opt)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of the barrier value")
    common(p_sim)
    p_sim.add_argument("--barrier", type=float, default=None, help="barrier level (default: computed b*)")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--trace", default=None, help="also write one path trace CSV here")

    p_shapes = sub.add_parser("check-shapes", help="dump shape verdicts as JSON")
    common(p_shapes)

    p_pmf = sub.add_parser("pmf", help="tabulate the claim-count pmf to CSV")
    common(p_pmf)
    p_pmf.add_argument("--t", type=float, default=1.0, help="observation time")
    p_pmf.add_argument("--nmax", type=int, default=20, help="largest count tabulated")

    return parser


def _grid_from_config(cfg, args):
    n = args.grid_n if args.grid_n is not None else cfg.grid_n
    x_max = args.xmax if args.xmax is not None else cfg.x_max
    if x_max is None:
        x_max = default_x_max(cfg.model, cfg.q)
    return build_scale_grid(cfg.model, cfg.q, x_max, n)


def _warn_flagged(grid):
    if grid.flagged:
        for note in grid.notes or ["grid flagged"]:
            print(f"warning: {note}", file=sys.stderr)


def cmd_scale(args):
    cfg = load_config(args.config)
    grid = _grid_from_config(cfg, args)
    write_grid_csv(grid, args.out)
    _warn_flagged(grid)
    return EXIT_OK


def cmd_optimize(args):
    cfg = load_config(args.config)
    grid = _grid_from_config(cfg, args)
    _warn_flagged(grid)
    cert = certify_optimality(cfg.model, grid)
    values_path = _sibling(args.out, "_values.csv")
    xs = np.linspace(0.0, grid.x_max, 201)
    rows = [(x, barrier_value(grid, cert.b_star, x)) for x in xs]
    write_csv(values_path, ["x", "V"], rows)
    report = {
        "b_star": cert.b_star,
        "w1_min": cert.w1_min,
        "certificate": cert.to_dict(),
        "value_table": values_path,
        "grid": {"x_max": grid.x_max, "n": int(grid.x.size - 1), "method": grid.method, "flagged": grid.flagged},
    }
    dump_json(report, args.out)
    note = "" if cert.rule != RULE_NONE else "  (barrier-optimal on grid only)"
    tag = " (conjectural)" if cert.conjectural else ""
    print(f"b*={cert.b_star:.10g} rule={cert.rule}{tag}{note}")
    return EXIT_OK


def cmd_simulate(args):
    cfg = load_config(args.config)
    if cfg.simulation is None:
        raise ConfigError("simulate", "missing required section for this command")
    sim_cfg = cfg.simulation
    if args.seed is not None:
        sim_cfg = replace(sim_cfg, seed=args.seed)
    grid = _grid_from_config(cfg, args)
    _warn_flagged(grid)
    if args.barrier is not None:
        b = args.barrier
    else:
        b, _ = find_b_star(grid)
    x = min(b, grid.x_max) if b > 0 else 0.0
    analytic = barrier_value(grid, b, x) if b <= grid.x_max else None
    result = simulate_dividends(cfg.model, b, x, sim_cfg)
    z = None
    if analytic is not None and result.std_error > 0:
        z = (result.estimate - analytic) / result.std_error
    payload = {
        "barrier": float(b),
        "initial_capital": float(x),
        "analytic_value": analytic,
        "z_score": z,
        "result": result.to_dict(),
        "seed": int(sim_cfg.seed),
    }
    dump_json(payload, args.out)
    if args.trace:
        rows = trace_path(cfg.model, b, x, sim_cfg)
        write_csv(args.trace, ["t", "U", "L"], rows)
    if z is not None and abs(z) > Z_ALARM:
        print(f"alarm: |z|={abs(z):.2f} exceeds {Z_ALARM}", file=sys.stderr)
        return EXIT_ALARM
    return EXIT_OK


def cmd_check_shapes(args):
    cfg = load_config(args.config)
    model = cfg.model
    compound = CompoundClaimDistribution(model.compounder, model.claim, eps_f=1e-8)
    verdicts = {
        "compounder": {
            "log_convex": check_discrete_log_convex(model.compounder).to_dict(),
            "discrete_completely_monotone": check_discrete_cm(model.compounder).to_dict(),
            "discrete_dfr": check_discrete_dfr(model.compounder).to_dict(),
        },
        "claims": {
            "completely_monotone": check_density_cm(model.claim).to_dict(),
            "dfr": check_dfr(model.claim).to_dict(),
            "log_convex_density": check_log_convex_density(model.claim).to_dict(),
        },
        "compound": {
            "dfr": check_dfr(compound).to_dict(),
            "log_convex_density": check_log_convex_density(compound).to_dict(),
        },
    }
    dump_json(verdicts, args.out)
    return EXIT_OK


def cmd_pmf(args):
    cfg = load_config(args.config)
    if args.nmax < 0:
        raise ConfigError("nmax", "must be nonnegative")
    rows = [
        (n, counting_pmf(cfg.model.compounder, cfg.model.lam, args.t, n))
        for n in range(args.nmax + 1)
    ]
    write_csv(args.out, ["n", "p"], rows)
    return EXIT_OK


def _sibling(path, suffix):
    base = path
    for ext in (".json", ".csv"):
        if base.endswith(ext):
            base = base[: -len(ext)]
            break
    return base + suffix


_COMMANDS = {
    "scale": cmd_scale,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "check-shapes": cmd_check_shapes,
    "pmf": cmd_pmf,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridTooShortError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, EvaluationError, ExtrapolationError, DegenerateBarrierError, InsufficientDataError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
