"""Experiment configuration: JSON parsing, defaults and validation."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError, InputError
from ..geometry import domain_from_dict

KINDS = ("survival", "shell", "bridge_shell", "two_window", "bv_sequence",
         "reflect_chain", "uebc_check", "hitting_tables")
ONE_SIDED_KINDS = ("survival", "shell", "bridge_shell", "bv_sequence", "reflect_chain")
# kinds whose paths are pinned at b; for these a missing b selects the one-sided mode
BRIDGE_KINDS = ("bridge_shell", "two_window", "bv_sequence", "reflect_chain")


@dataclass
class ExperimentConfig:
    """One experiment. Keys absent from the JSON take the defaults below.

    ``points`` are the start points of survival and shell cells; ``a`` and
    ``b`` the bridge endpoints (no ``b``: one-sided mode). ``steps_log2``
    sets the path grid to 2**steps_log2 uniform steps.
    """

    kind: str
    domain: dict
    a: list | None = None
    b: list | None = None
    points: list = field(default_factory=list)
    r_list: list = field(default_factory=list)
    u_list: list = field(default_factory=list)
    n_list: list = field(default_factory=list)
    n_paths: int = 100_000
    steps_log2: int = 9
    delta: float | None = None
    s1: float = 1.0 / 3.0
    s2: float = 2.0 / 3.0
    m: int = 15
    dt: float = 1e-3
    T: float = 1000.0
    burn_in: float | None = None
    reflection: str = "conormal"
    oracle_samples: int = 0
    n_boundary_samples: int = 10_000
    k_sigma: float = 4.0
    slope_tol: float | None = None
    ratio_max: float = 1.5
    bounded_factor: float = 2.0
    tv_max: float = 0.02
    fraction_max: float | None = None
    seed: int = 0
    workers: int = 1
    out: str = "runs/out"

    @property
    def one_sided(self):
        return self.kind in BRIDGE_KINDS and self.b is None

    def domain_obj(self):
        return domain_from_dict(self.domain)

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2)


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))
_POSITIVE_INT = ("n_paths", "steps_log2", "m", "n_boundary_samples", "workers")
_POSITIVE_FLOAT = ("dt", "T", "k_sigma", "ratio_max", "bounded_factor", "tv_max")


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def config_from_dict(data, text=None):
    """Validate a parsed JSON object; ``text`` (the raw file) locates errors by line."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    for key in data:
        if key not in FIELD_NAMES:
            raise ConfigError("unknown key", key, _line_of(text, key))

    def fail(msg, key):
        raise ConfigError(msg, key, _line_of(text, key))

    for key in ("kind", "domain"):
        if key not in data:
            raise ConfigError("missing required key", key)
    if data["kind"] not in KINDS:
        fail(f"kind must be one of {KINDS}", "kind")
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        dom = domain_from_dict(cfg.domain)
    except InputError as exc:
        fail(str(exc), "domain")

    for key in _POSITIVE_INT:
        v = getattr(cfg, key)
        if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
            fail("must be a positive integer", key)
    for key in _POSITIVE_FLOAT:
        v = getattr(cfg, key)
        if not _is_num(v) or v <= 0:
            fail("must be a positive number", key)
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        fail("must be a nonnegative integer", "seed")
    if not isinstance(cfg.oracle_samples, int) or cfg.oracle_samples < 0:
        fail("must be a nonnegative integer", "oracle_samples")
    for key in ("delta", "slope_tol", "fraction_max", "burn_in"):
        v = getattr(cfg, key)
        if v is not None and (not _is_num(v) or v <= 0):
            fail("must be a positive number", key)

    def vec(key, v):
        if not isinstance(v, list) or len(v) != dom.dim or not all(_is_num(c) for c in v):
            fail(f"must be a list of {dom.dim} numbers", key)

    for key in ("a", "b"):
        if getattr(cfg, key) is not None:
            vec(key, getattr(cfg, key))
    if not isinstance(cfg.points, list):
        fail("must be a list of points", "points")
    for p in cfg.points:
        vec("points", p)
    for key in ("r_list", "u_list"):
        v = getattr(cfg, key)
        if not isinstance(v, list) or not all(_is_num(c) and c > 0 for c in v):
            fail("entries must be positive numbers", key)
    if not isinstance(cfg.n_list, list) or not all(
            isinstance(c, int) and not isinstance(c, bool) and c > 0 for c in cfg.n_list):
        fail("entries must be positive integers", "n_list")
    if cfg.reflection not in ("conormal", "euclidean"):
        fail("must be 'conormal' or 'euclidean'", "reflection")
    if not 0 < cfg.s1 < cfg.s2 < 1:
        fail("need 0 < s1 < s2 < 1", "s1")

    kind = cfg.kind
    if cfg.b is not None and kind not in BRIDGE_KINDS:
        fail(f"b is not used by kind {kind}", "b")
    if kind == "two_window" and cfg.b is None:
        fail("the one-sided variant is not defined for two_window", "b")
    need = {
        "survival": ("points", "u_list"),
        "shell": ("points", "u_list", "r_list"),
        "bridge_shell": ("a", "r_list"),
        "two_window": ("a", "r_list"),
        "bv_sequence": ("a", "n_list"),
        "reflect_chain": ("a",),
        "uebc_check": ("delta",),
        "hitting_tables": ("r_list", "u_list"),
    }[kind]
    for key in need:
        if getattr(cfg, key) in (None, []):
            raise ConfigError(f"required for kind {kind}", key)
    if kind == "shell" and len(cfg.u_list) != 1:
        fail("shell cells share one horizon; give exactly one u", "u_list")
    if kind == "reflect_chain" and cfg.burn_in is not None and cfg.burn_in >= cfg.T:
        fail("burn_in must be smaller than T", "burn_in")
    return cfg


def loads_config(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return config_from_dict(data, text)


def load_config(path):
    """Parse and validate a JSON config file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads_config(text)
