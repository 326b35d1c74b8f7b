"""Command-line entry point: ``eitsplit run|sweep|list-presets|validate|show``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_preset, preset_names, resolve
from .scenario import OUTPUT_ROOT_ENV, run_config, sweep, write_sweep
from .solver import NumericalError, StabilityError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _values(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eitsplit",
        description="EIT light storage and dynamic beam splitting simulator.",
        epilog=f"Output root defaults to ./runs; override with ${OUTPUT_ROOT_ENV}.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset or TOML config")
    r.add_argument("scenario", help="preset name or path to a config file")
    r.add_argument("--out", default=None, help="output root (overrides the environment)")
    r.add_argument("--no-plot", action="store_true", help="skip SVG plots")
    r.add_argument("--no-convergence", action="store_true", help="skip the half-grid convergence rerun")

    s = sub.add_parser("sweep", help="vary one scalar config field and tabulate the results")
    s.add_argument("config", help="preset name or path to a config file")
    s.add_argument("--param", required=True, help="field path, e.g. sequence.storage_us")
    s.add_argument("--values", required=True, type=_values, help="comma-separated values")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.add_argument("--out", default=None)

    sub.add_parser("list-presets", help="print the built-in presets")

    v = sub.add_parser("validate", help="check a config file and print the resolved config")
    v.add_argument("config")

    sh = sub.add_parser("show", help="print a preset as TOML (a starting point for custom configs)")
    sh.add_argument("preset")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "list-presets":
            for name in preset_names():
                print(f"{name:14s} {load_preset(name).description}")
        elif args.command == "show":
            print(load_preset(args.preset).dumps(), end="")
        elif args.command == "validate":
            cfg = resolve(args.config)
            print(cfg.dumps(), end="")
            print(f"# ok: {cfg.name} ({cfg.kind})", file=sys.stderr)
        elif args.command == "run":
            cfg = resolve(args.scenario)
            if args.no_convergence:
                import dataclasses

                cfg = dataclasses.replace(cfg, analysis=dataclasses.replace(cfg.analysis, convergence_check=False))
            outcome = run_config(cfg, args.out, plot=False if args.no_plot else None)
            for f in outcome.files:
                print(f)
        elif args.command == "sweep":
            cfg = resolve(args.config)
            rows = sweep(cfg, args.param, args.values, jobs=args.jobs)
            print(write_sweep(cfg, args.param, rows, args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
