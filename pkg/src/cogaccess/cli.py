"""Command-line entry point: ``cogaccess {sweep,optimize,simulate,validate-config}``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .analytic import AccessPolicy, UnstableQueueError
from .config import ConfigError, load_config
from .optimizer import ProtocolVariant, optimize
from .simulator import SimConfig, simulate, validate_against_analytic
from .sweep import any_flagged, run_sweep, write_table

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("cogaccess")


def _load(args):
    config = load_config(args.config, args.allow_nonmonotone_roc)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def cmd_sweep(args) -> int:
    config = _load(args)
    rows = run_sweep(config, jobs=args.jobs)
    out = args.output or config.output_path
    write_table(rows, config, out)
    log.info("wrote %d rows to %s", len(rows), out)
    if config.simulation and any_flagged(rows):
        log.error("simulation disagrees with the closed forms (|z| > 3) on at least one row")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = _load(args)
    res = optimize(ProtocolVariant.parse(args.variant), args.lambda_p, config.profile, config.system,
                   config.delay_cap, config.optimizer)
    print(f"variant   {res.variant.value}")
    print(f"feasible  {res.feasible}")
    print(f"mu_s      {res.mu_s!r}")
    print(f"mu_p      {res.metrics.mu_p!r}")
    print(f"delay_p   {res.metrics.delay_p!r}")
    print("policy    " + ", ".join(repr(float(v)) for v in res.policy.as_vector()))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    if args.policy:
        policy = AccessPolicy.from_vector([float(v) for v in args.policy.split(",")])
    else:
        policy = optimize(ProtocolVariant.parse(args.variant), args.lambda_p, config.profile, config.system,
                          config.delay_cap, config.optimizer).policy
    base = config.simulation or SimConfig(10**6, seed=config.optimizer.seed)
    sim = SimConfig(args.slots or base.n_slots, None if args.slots else base.warmup_slots,
                    base.seed if args.seed is None else args.seed)
    if args.trace:
        simulate(config.system, config.profile, policy, args.lambda_p, sim, trace_path=args.trace)
    try:
        report = validate_against_analytic(config.system, config.profile, policy, args.lambda_p, sim)
    except UnstableQueueError as exc:
        print(f"refusing to validate: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{'quantity':<10}{'analytic':>14}{'simulated':>14}{'99% +/-':>12}{'z':>8}")
    for c in report:
        print(f"{c.quantity:<10}{c.analytic:>14.6g}{c.empirical:>14.6g}{c.halfwidth:>12.3g}{c.z:>8.2f}"
              + ("  <-- |z| > 3" if c.flagged else ""))
    return EXIT_VALIDATION if any(c.flagged for c in report) else EXIT_OK


def cmd_validate_config(args) -> int:
    config = _load(args)
    grid = config.lambda_grid()
    print(f"ok: M={config.profile.m}, delay cap {config.delay_cap:g}, {len(grid)} arrival rates "
          f"in [{grid[0]:g}, {grid[-1]:g}], variants {', '.join(v.value for v in config.variants)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogaccess", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run-config file, or a bundled name (fig1.cfg, fig2.cfg)")
    common.add_argument("--seed", type=int, default=None, help="override optimizer and simulation seeds")
    common.add_argument("--allow-nonmonotone-roc", action="store_true",
                        help="warn instead of failing when the ROC table is not non-increasing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="optimise every variant over the arrival-rate grid")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", default=None, help="results CSV (default: the config's sweep.output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", parents=[common], help="optimise one variant at one arrival rate")
    p.add_argument("--lambda", dest="lambda_p", type=float, required=True)
    p.add_argument("--variant", default="proposed")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common], help="simulate one policy and compare with the closed forms")
    p.add_argument("--lambda", dest="lambda_p", type=float, required=True)
    p.add_argument("--policy", default=None, help="comma-separated omega_0, omega_1..M, beta_1..M")
    p.add_argument("--variant", default="proposed", help="optimise this variant when --policy is not given")
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--trace", default=None, help="write a per-slot CSV trace here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate-config", parents=[common], help="parse and check a run-config")
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
