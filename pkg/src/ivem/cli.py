"""Command-line front end: ``ivem run``, ``ivem dump-mesh`` and ``ivem verify``.

Exit codes: 0 success, 1 invalid input (config or arguments), 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ivem.errors import ConfigError, IvemError, NumericalFailure
from ivem.mesh_geometry import dump_mesh

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivem", description="Immersed virtual element convergence studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence study and write the CSV table")
    run.add_argument("config_path", nargs="?", metavar="config", help="study config (JSON)")
    run.add_argument("--config", dest="config_flag", metavar="PATH", help="study config (alternative to positional)")
    run.add_argument("--out", metavar="PATH", help="CSV destination (default: config 'output', else stdout)")
    run.add_argument("--plot-data", action="store_true", help="also emit (log h, log error) rows")
    run.add_argument("--seed", type=int, default=0, help="seed for interface perturbations (default 0)")

    dump = sub.add_parser("dump-mesh", help="print the cut mesh of one level")
    dump.add_argument("config_path", nargs="?", metavar="config")
    dump.add_argument("level", nargs="?", type=int, help="index into the config's mesh list")
    dump.add_argument("--config", dest="config_flag", metavar="PATH")
    dump.add_argument("--out", metavar="PATH", help="write to a file instead of stdout")
    dump.add_argument("--seed", type=int, default=0)

    verify = sub.add_parser("verify", help="run the structural property suite")
    verify.add_argument("--config", dest="config_flag", metavar="PATH",
                        help="config supplying mesh and coefficients (default: built-in circle benchmark)")
    verify.add_argument("--seed", type=int, default=0, help="seed for random samples (default 0)")
    verify.add_argument("--out", metavar="PATH", help="write the table to a file as well")
    return parser


def _config_path(args) -> str:
    path = args.config_flag or getattr(args, "config_path", None)
    if path is None:
        raise ConfigError("config: no config file given (positional argument or --config)")
    return path


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def _plot_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + "_plot" + p.suffix))


def _run(args) -> int:
    from ivem.study import load_config, run_study

    config = load_config(_config_path(args))
    out = args.out if args.out is not None else config.output
    report = run_study(config, seed=args.seed, out=None)
    _emit(report.to_csv(), out)
    if args.plot_data:
        _emit(report.plot_data(), _plot_path(out) if out else None)
    return EXIT_OK


def _dump(args) -> int:
    from ivem.study import build_level_mesh, level_offsets, load_config

    config = load_config(_config_path(args))
    if args.level is None:
        raise ConfigError("level: missing mesh level index")
    if not 0 <= args.level < len(config.meshes):
        raise ConfigError(f"level: index {args.level} outside 0..{len(config.meshes) - 1}")
    offset = level_offsets(config, args.seed)[args.level]
    imesh = build_level_mesh(config, config.meshes[args.level], offset)
    _emit(dump_mesh(imesh), args.out)
    return EXIT_OK


def _verify(args) -> int:
    from ivem.study import load_config
    from ivem.verification import format_table, run_verification

    config = load_config(args.config_flag) if args.config_flag else None
    results = run_verification(seed=args.seed, config=config)
    table = format_table(results)
    sys.stdout.write(table)
    if args.out:
        Path(args.out).write_text(table, newline="\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    handlers = {"run": _run, "dump-mesh": _dump, "verify": _verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IvemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
