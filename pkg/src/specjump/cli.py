"""Command line entry point.

One subcommand per scenario plus the acceptance self-test.  Exit codes:
0 when every declared assertion passes, 1 when a numeric assertion or
model invariant fails, 2 for configuration problems (bad file, bad key,
bad value, unwritable output directory).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NumericalAssertionFailure, SpecjumpError
from .scenarios import SCENARIOS, default_config, load_config, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specjump",
        description="Spectral checks for jump transport, the relativistic "
                    "boundary solver, its high-carrier limit, and the "
                    "trajectory ensemble.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", metavar="PATH",
                       help="TOML config file; built-in defaults otherwise")
        p.add_argument("--out", metavar="DIR", default="specjump-out",
                       help="output directory (default: specjump-out)")
        p.add_argument("--seed", type=int, metavar="U64",
                       help="override the run seed")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="worker threads for independent measurements")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering figures")
    sub.add_parser("self-test",
                   help="run the acceptance matrix and report per-criterion "
                        "pass/fail")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "self-test":
        from .acceptance import self_test
        return self_test(sys.stdout)
    try:
        if args.config:
            cfg = load_config(args.config, args.command)
        else:
            cfg = default_config(args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError(f"--seed must be a 64-bit unsigned "
                                  f"integer, got {args.seed}")
            cfg.run["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be at least 1, got {args.jobs}")
        outcome = run_scenario(cfg, args.out,
                               make_figures=not args.no_figures,
                               jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalAssertionFailure as exc:
        print(f"numerical assertion failed: {exc}", file=sys.stderr)
        return 1
    except SpecjumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    for a in outcome.assertions:
        flag = "PASS" if a["passed"] else "FAIL"
        print(f"[{flag}] {a['name']}: {a['value']:.6e} "
              f"(tolerance {a['tolerance']:.6e})")
    for path in outcome.artifacts:
        print(f"wrote {path}")
    if outcome.failed:
        print(f"{len(outcome.failed)} of {len(outcome.assertions)} "
              f"assertions failed", file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
