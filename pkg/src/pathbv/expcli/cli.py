"""Command line entry point: ``pathbv <kind> --config PATH [options]``.

Exit status is 0 when every verdict passes, 2 when some verdict fails and
1 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import ConfigError, InputError, NumericalError
from .config import KINDS, config_from_dict, load_config
from .runner import run_experiment

log = logging.getLogger("pathbv")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="pathbv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run a {kind} experiment")
        s.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        s.add_argument("--workers", type=int, help="threads; results do not depend on it")
        s.add_argument("--dump-paths", action="store_true", help="write the first sample paths")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.kind:
            raise ConfigError(f"config is for kind {cfg.kind!r}, not {args.kind!r}", "kind")
        overrides = {k: v for k, v in (("seed", args.seed), ("out", args.out),
                                        ("workers", args.workers)) if v is not None}
        if overrides:
            cfg = config_from_dict(dict(cfg.to_dict(), **overrides))
        report = run_experiment(cfg, dump=args.dump_paths)
    except (ConfigError, InputError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name, v in report.all_verdicts():
        log.info("%s %s (%s)", "PASS" if v.passed else "FAIL", name, v.rule)
    summary = {"kind": cfg.kind, "out": cfg.out, "passed": report.passed,
               "cells": len(report.cells), "wall_clock_s": round(report.wall_clock, 3)}
    print(json.dumps(summary))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
