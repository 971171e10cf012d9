"""Run reports and their on-disk form (report.json, cells.csv, slopes.csv)."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

SCHEMA_VERSION = 1
CELL_COLUMNS = ("cell", "value", "stderr", "bound", "pass")
SLOPE_COLUMNS = ("name", "slope", "intercept", "slope_stderr", "expected", "tol", "pass")


@dataclass
class Cell:
    cell: str
    param: float
    value: float
    stderr: float
    bound: float | None = None
    verdict: object = None
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return None if self.verdict is None else self.verdict.passed

    def to_dict(self):
        return {"cell": self.cell, "param": self.param, "value": self.value,
                "stderr": self.stderr, "bound": self.bound,
                "verdict": None if self.verdict is None else self.verdict.to_dict(),
                "meta": self.meta}


@dataclass
class SlopeRow:
    name: str
    fit: object
    expected: float
    tol: float
    verdict: object


@dataclass
class RunReport:
    config: dict
    kind: str
    param_name: str
    seed: int
    version: str
    cells: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    wall_clock: float = 0.0
    complete: bool = True
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def all_verdicts(self):
        out = [(c.cell, c.verdict) for c in self.cells if c.verdict is not None]
        out += [(s.name, s.verdict) for s in self.slopes]
        out += list(self.verdicts)
        return out

    @property
    def passed(self):
        return self.complete and all(v.passed for _, v in self.all_verdicts())

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "version": self.version,
            "kind": self.kind,
            "seed": self.seed,
            "complete": self.complete,
            "error": self.error,
            "passed": self.passed,
            "wall_clock_s": self.wall_clock,
            "config": self.config,
            "param_name": self.param_name,
            "cells": [c.to_dict() for c in self.cells],
            "slopes": [{"name": s.name, "fit": s.fit.to_dict(), "expected": s.expected,
                        "tol": s.tol, "verdict": s.verdict.to_dict()} for s in self.slopes],
            "verdicts": [{"name": n, **v.to_dict()} for n, v in self.verdicts],
            "extra": self.extra,
        }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def cells_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([CELL_COLUMNS[0], report.param_name, *CELL_COLUMNS[1:]])
    for c in report.cells:
        w.writerow([c.cell, _fmt(c.param), _fmt(c.value), _fmt(c.stderr), _fmt(c.bound),
                    _fmt(c.passed)])
    return buf.getvalue()


def slopes_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLOPE_COLUMNS)
    for s in report.slopes:
        w.writerow([s.name, _fmt(s.fit.slope), _fmt(s.fit.intercept), _fmt(s.fit.slope_stderr),
                    _fmt(s.expected), _fmt(s.tol), _fmt(s.verdict.passed)])
    return buf.getvalue()


def atomic_write(path, text):
    """Write to a temporary file in the same directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_report(report, directory):
    """Write report.json, cells.csv and slopes.csv; returns their paths."""
    paths = {name: os.path.join(directory, name)
             for name in ("report.json", "cells.csv", "slopes.csv")}
    atomic_write(paths["cells.csv"], cells_csv(report))
    atomic_write(paths["slopes.csv"], slopes_csv(report))
    atomic_write(paths["report.json"], json.dumps(report.to_dict(), indent=2, default=_jsonable))
    return paths


def _jsonable(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
