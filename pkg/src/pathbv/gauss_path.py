"""Brownian motion and pinned bridge sampling on time grids, plus path functionals."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times starting at 0 and ending at or before ``horizon``."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise InputError("time grid must be a nonempty 1-D sequence")
        if t[0] != 0.0:
            raise InputError("time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise InputError("time grid must be strictly increasing")
        if not self.horizon > 0 or t[-1] > self.horizon:
            raise InputError("time grid must end at or before a positive horizon")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, k=9, horizon=1.0):
        """2**k equal steps on [0, horizon]."""
        return cls(np.linspace(0.0, horizon, 2 ** k + 1), horizon)

    @classmethod
    def refined(cls, base, extra):
        """``base`` with the times in ``extra`` inserted."""
        t = np.union1d(base.times, np.asarray(extra, float))
        return cls(t, base.horizon)

    @property
    def dt(self):
        return np.diff(self.times)

    @property
    def n_steps(self):
        return len(self.times) - 1

    def __len__(self):
        return len(self.times)

    def same_as(self, other):
        return (self.horizon == other.horizon and len(self) == len(other)
                and np.array_equal(self.times, other.times))

    def window_index(self, breaks=()):
        """Window number of every step; step i lies in window #{b in breaks : b <= t_i}."""
        return np.searchsorted(np.sort(np.asarray(breaks, float)), self.times[:-1], side="right")


@dataclass
class PathSample:
    grid: TimeGrid
    points: np.ndarray
    law_tag: dict
    seed_info: tuple = field(default=(None, None))

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or len(self.points) != len(self.grid):
            raise InputError("points must have one row per grid time")

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class MinQResult:
    min_q_discrete: float
    survival_prob_correction: float
    level: float

    def touch_probability(self):
        """Probability that the continuous path dipped below the level between grid points."""
        return 1.0 - self.survival_prob_correction


def _point(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InputError("expected a single point")
    return x


def sample_bm_batch(start, grid, n, rng):
    """``n`` Brownian paths from ``start``; array of shape (n, len(grid), d)."""
    start = _point(start)
    dt = grid.dt
    incr = rng.standard_normal((n, grid.n_steps, start.size)) * np.sqrt(dt)[None, :, None]
    out = np.empty((n, len(grid), start.size))
    out[:, 0] = start
    np.cumsum(incr, axis=1, out=out[:, 1:])
    out[:, 1:] += start
    return out


def sample_bridge_batch(a, b, grid, n, rng):
    """``n`` pinned bridges from a to b over [0, grid.times[-1]]."""
    a, b = _point(a), _point(b)
    if a.shape != b.shape:
        raise InputError("bridge endpoints must share a dimension")
    z = rng.standard_normal((n, max(grid.n_steps - 1, 0), a.size))
    return kernels.bridge_paths(a, b, grid.times, z)


def sample_bm(start, grid, rng, seed_info=(None, None)):
    """One Brownian path: independent N(0, dt I) increments."""
    pts = sample_bm_batch(start, grid, 1, rng)[0]
    return PathSample(grid, pts, {"law": "bm", "start": _point(start).tolist()}, seed_info)


def sample_bridge(a, b, grid, rng, seed_info=(None, None)):
    """One pinned Brownian bridge on a grid ending at time 1.

    Sampled sequentially: from x at time t the next point at time s is
    Gaussian with mean ``x + (s-t)/(1-t) (b-x)`` and covariance
    ``(s-t)(1-s)/(1-t) I``. The final point equals ``b`` exactly.
    """
    if grid.horizon != 1.0 or grid.times[-1] != 1.0:
        raise InputError("bridge grids must end at time 1")
    pts = sample_bridge_batch(a, b, grid, 1, rng)[0]
    tag = {"law": "bridge", "a": _point(a).tolist(), "b": _point(b).tolist(), "total_time": 1.0}
    return PathSample(grid, pts, tag, seed_info)


def linear_path(a, b, times):
    """h_{a,b}(t) = a + (b - a) t evaluated on ``times``."""
    a, b = _point(a), _point(b)
    t = np.asarray(times, float)[:, None]
    return a + (b - a) * t


def shift_to_origin(path, a, b):
    """Shift map w -> w - h_{a,b}, sending a bridge from a to b to one from 0 to 0."""
    pts = path.points - linear_path(a, b, path.grid.times)
    tag = dict(path.law_tag, shifted=True)
    return PathSample(path.grid, pts, tag, path.seed_info)


def crossing_correction(q0, q1, dt):
    """Probability that a 1-D Brownian bridge from q0 to q1 over time dt hits 0."""
    q0, q1, dt = np.asarray(q0, float), np.asarray(q1, float), np.asarray(dt, float)
    if np.any(dt <= 0):
        raise InputError("dt must be positive")
    if np.any(q0 < 0) or np.any(q1 < 0):
        raise InputError("crossing_correction needs q0, q1 >= 0")
    res = np.exp(-2.0 * q0 * q1 / dt)
    return float(res) if res.ndim == 0 else res


def inf_q(domain, path):
    """Skeleton version of F(w) = inf_t q(w(t))."""
    return float(domain.signed_distance(path.points).min())


def min_q_result(domain, path, level):
    """Skeleton minimum of q and the bridge-corrected probability of staying at q >= level."""
    if level < 0:
        raise InputError("level must be nonnegative")
    q = domain.signed_distance(path.points)[None, :]
    win = np.zeros(path.grid.n_steps, dtype=np.int64)
    qmin, haz = kernels.window_hazard(q, path.grid.dt, win, 1, [level])
    return MinQResult(float(q.min()), float(np.exp(-haz[0, 0, 0])), float(level))


def min_q_functional(domain, path, level, mode="corrected", rng=None):
    """Whether the path stayed at q >= level.

    ``discrete`` checks grid points only. ``corrected`` additionally thins by
    the per-step bridge crossing probabilities of the locally flattened
    boundary, using an exponential clock (one draw from ``rng``).
    """
    if mode not in ("discrete", "corrected"):
        raise InputError(f"unknown mode {mode!r}")
    res = min_q_result(domain, path, level)
    if res.min_q_discrete < level:
        return False
    if mode == "discrete":
        return True
    if rng is None:
        raise InputError("corrected mode needs an rng")
    hazard = -np.log(res.survival_prob_correction) if res.survival_prob_correction > 0 else np.inf
    return bool(hazard < rng.standard_exponential())


def h0_norm(path_a, path_b):
    """Cameron-Martin norm of the piecewise-linear interpolant of path_a - path_b."""
    if not path_a.grid.same_as(path_b.grid):
        raise InputError("h0_norm needs identical grids")
    diff = path_a.points - path_b.points
    incr = np.diff(diff, axis=0)
    return float(np.sqrt(np.sum(np.sum(incr * incr, axis=1) / path_a.grid.dt)))


def dump_path_csv(path, filename):
    """Write columns t, x_1..x_d."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(path.dim)])
        for t, x in zip(path.grid.times, path.points):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])
