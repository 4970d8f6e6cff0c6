"""Command-line entry point.

Subcommands: calibrate, size, power, cvf-surface, compare, limits.
Every configuration key is settable in a flat config file (--config) and
overridable by a flag of the same name; exit codes are 0 success,
2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import sys
from dataclasses import fields

from . import experiments as xp
from .errors import (
    BadOverlay,
    ConfigError,
    DegenerateSample,
    Infeasible,
    NoConvergence,
    NumericalFailure,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cvfkit",
        description="Similar t-tests for persistent predictive regressions: "
        "calibration, size/power studies, and limit checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    types = xp.field_types()
    for command in xp.RUNNERS:
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument(
            "--trend",
            action="store_true",
            help="use the intercept-plus-trend deterministic part",
        )
        for f in fields(xp.ExperimentConfig):
            flag = "--" + f.name.replace("_", "-")
            if f.name == "cov_mode":
                p.add_argument("--cov-mode", dest="cov_mode", default=None)
                continue
            p.add_argument(flag, dest=f.name, default=None, metavar=str(types[f.name].__name__).upper())
    return parser


def resolve_config(args):
    values = {}
    if args.config:
        values.update(xp.parse_config_file(args.config))
    types = xp.field_types()
    for f in fields(xp.ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            values[f.name] = (
                raw if not isinstance(raw, str) else xp._parse_value(f.name, raw, types[f.name])
            )
    if getattr(args, "trend", False):
        values["kind"] = "trend"
    return xp.config_from(values)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        outputs = xp.RUNNERS[args.command](cfg)
    except (ConfigError, BadOverlay) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, NumericalFailure, NoConvergence, DegenerateSample) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
