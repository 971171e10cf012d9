"""Monte Carlo estimators for survival, shell and two-window probabilities.

All estimators share one engine: replicas are split into fixed blocks, block
``j`` draws from ``rng.stream(seed, tag, j)``, every block is reduced to
integer event counts and counts are summed. Estimates are therefore bitwise
reproducible from ``(arguments, seed)`` and independent of ``workers``.

Paths are simulated once per call and shared across all requested levels,
so estimates for different ``r`` on the same seed are coupled pathwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError
from .gauss_path import TimeGrid, sample_bm_batch, sample_bridge_batch
from .hitting1d import EtaLaw, eta_tail_upper_bound
from .rng import BLOCK_SIZE, blocks, stream

TAG_BM = 1
TAG_BRIDGE = 2


@dataclass
class Estimate:
    value: float
    stderr: float
    n: int
    seed: int
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "n": self.n,
                "seed": self.seed, "meta": self.meta}


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    slope_stderr: float
    points: list
    dropped: list = field(default_factory=list)

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "slope_stderr": self.slope_stderr, "points": self.points,
                "dropped": self.dropped}


@dataclass
class Verdict:
    passed: bool
    margin: float
    rule: str

    def to_dict(self):
        return {"pass": self.passed, "margin": self.margin, "rule": self.rule}


def bernoulli_estimate(count, n, seed, meta=None, scale=1.0):
    """Frequency estimate with stderr = sample sd / sqrt(n), optionally scaled."""
    if n < 2:
        raise InputError("need at least 2 replicates")
    p = count / n
    sd = math.sqrt(max(p * (1.0 - p), 0.0) * n / (n - 1))
    return Estimate(scale * p, scale * sd / math.sqrt(n), int(n), seed, dict(meta or {}))


def paired_difference_stderr(n_a_only, n_b_only, n):
    """Stderr of mean(1_A - 1_B) from the counts of A\\B and B\\A over n paths."""
    mean = (n_a_only - n_b_only) / n
    second = (n_a_only + n_b_only) / n
    var = max(second - mean * mean, 0.0) * n / (n - 1)
    return math.sqrt(var / n)


# -- engine ------------------------------------------------------------------

@dataclass
class WindowStats:
    """Per-path skeleton minima, crossing hazards and exponential clocks.

    ``qmin[p, w]`` is the grid minimum of q in window w, ``hazard[p, w, k]``
    the summed crossing hazard at ``levels[k]`` and ``clock[p, w]`` an Exp(1)
    draw. Path p stays at q >= levels[k] throughout window w iff
    ``hazard[p, w, k] < clock[p, w]``.
    """

    qmin: np.ndarray
    hazard: np.ndarray
    clock: np.ndarray
    levels: np.ndarray

    def stayed(self, k, windows=None):
        h = self.hazard[:, :, k]
        ok = h < self.clock
        if windows is not None:
            ok = ok[:, list(windows)]
        return ok.all(axis=1)

    def stayed_discrete(self, level, windows=None):
        m = self.qmin if windows is None else self.qmin[:, list(windows)]
        return m.min(axis=1) >= level


@dataclass
class PathSetup:
    """What to simulate: BM from ``start`` (``end`` is None) or a bridge to ``end``."""

    domain: object
    start: np.ndarray
    end: np.ndarray | None
    grid: TimeGrid
    levels: np.ndarray
    breaks: tuple = ()

    @property
    def n_windows(self):
        return len(self.breaks) + 1

    def simulate_block(self, g, m):
        if self.end is None:
            pts = sample_bm_batch(self.start, self.grid, m, g)
        else:
            pts = sample_bridge_batch(self.start, self.end, self.grid, m, g)
        q = self.domain.signed_distance(pts)
        win = self.grid.window_index(self.breaks).astype(np.int64)
        qmin, haz = kernels.window_hazard(q, self.grid.dt, win, self.n_windows, self.levels)
        clock = g.standard_exponential((m, self.n_windows))
        return pts, WindowStats(qmin, haz, clock, self.levels)


def run_blocks(fn, n, seed, tag, workers=1, block_size=BLOCK_SIZE):
    """Sum ``fn(generator, block_len, block_index)`` over all blocks in index order."""
    tasks = list(blocks(n, block_size))

    def job(task):
        j, lo, hi = task
        return np.asarray(fn(stream(seed, tag, j), hi - lo, j), dtype=np.int64)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, tasks))
    else:
        parts = [job(t) for t in tasks]
    total = np.zeros_like(parts[0])
    for p in parts:
        total = total + p
    return total


def count_events(setup, n, seed, reducer, workers=1, on_block=None):
    """Simulate n paths and sum ``reducer(WindowStats)`` count vectors."""
    tag = TAG_BM if setup.end is None else TAG_BRIDGE

    def fn(g, m, j):
        pts, stats = setup.simulate_block(g, m)
        if on_block is not None:
            on_block(j, pts)
        return reducer(stats)

    return run_blocks(fn, n, seed, tag, workers)


# -- helpers -------------------------------------------------------------------

def _pt(x, dim):
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (dim,):
        raise InputError(f"expected a point of dimension {dim}")
    return x


def _check_levels(rs):
    rs = np.atleast_1d(np.asarray(rs, float))
    if np.any(rs < 0):
        raise InputError("levels must be nonnegative")
    return rs


def _check_inside(domain, *pts):
    for p in pts:
        if p is not None and not float(domain.signed_distance(p)) > 0:
            raise InputError(f"point {p.tolist()} is not inside the domain")


def _bridge_grid(grid):
    grid = grid or TimeGrid.uniform(9)
    if grid.times[-1] != 1.0:
        raise InputError("bridge and one-sided experiments run on [0, 1]")
    return grid


# -- estimators ----------------------------------------------------------------

def estimate_survival(domain, x, u, n, grid=None, seed=0, workers=1):
    """P_x[q(omega_t) >= 0 for t in [0, u]] for Brownian motion, corrected mode."""
    x = _pt(x, domain.dim)
    if float(domain.signed_distance(x)) < 0:
        raise InputError("starting point must lie in the closure")
    grid = grid or TimeGrid.uniform(9, u)
    if grid.times[-1] != u:
        raise InputError("grid must end at the horizon u")
    setup = PathSetup(domain, x, None, grid, np.array([0.0]))
    counts = count_events(setup, n, seed, lambda s: [s.stayed(0).sum()], workers)
    meta = {"estimator": "survival", "x": x.tolist(), "u": u, "steps": grid.n_steps,
            "mode": "corrected"}
    return bernoulli_estimate(int(counts[0]), n, seed, meta)


def survival_bound(domain, x, u, delta):
    """sqrt(2/pi) q(x)/sqrt(u) + 2 K q(x) with K = (d-1)/(2 delta)."""
    qx = float(domain.signed_distance(np.asarray(x, float)))
    if qx <= 0:
        return 0.0
    K = (domain.dim - 1) / (2.0 * delta)
    return eta_tail_upper_bound(u, EtaLaw(qx, K))


def _shell_reducer(levels_idx, upper_mode, rs):
    def reducer(s):
        stay = s.stayed(0)
        out = [stay.sum()]
        for k, r in zip(levels_idx, rs):
            if upper_mode == "corrected":
                touched = ~s.stayed(k)
            else:
                touched = ~s.stayed_discrete(r)
            out.append((stay & touched).sum())
        return out
    return reducer


def estimate_shell_curve(domain, x, u, rs, n, grid=None, seed=0, workers=1,
                         upper_mode="corrected"):
    """P_x[0 <= inf_{[0,u]} q <= r] for every r in ``rs`` on shared paths."""
    if upper_mode not in ("corrected", "discrete"):
        raise InputError(f"unknown upper_mode {upper_mode!r}")
    x = _pt(x, domain.dim)
    rs = _check_levels(rs)
    if np.any(rs <= 0):
        raise InputError("shell width r must be positive")
    grid = grid or TimeGrid.uniform(9, u)
    setup = PathSetup(domain, x, None, grid, np.concatenate([[0.0], rs]))
    idx = list(range(1, len(rs) + 1))
    counts = count_events(setup, n, seed, _shell_reducer(idx, upper_mode, rs), workers)
    base = {"estimator": "shell", "x": x.tolist(), "u": u, "steps": grid.n_steps,
            "lower_mode": "corrected", "upper_mode": upper_mode,
            "survival_count": int(counts[0])}
    return [bernoulli_estimate(int(c), n, seed, dict(base, r=float(r)))
            for c, r in zip(counts[1:], rs)]


def estimate_shell(domain, x, u, r, n, grid=None, seed=0, workers=1, upper_mode="corrected"):
    return estimate_shell_curve(domain, x, u, [r], n, grid, seed, workers, upper_mode)[0]


def estimate_bridge_shell_curve(domain, a, b, rs, n, grid=None, seed=0, workers=1,
                                on_block=None):
    """mu_{a,b}[0 <= inf_{[0,1]} q <= r] for each r on shared bridge paths.

    ``b=None`` selects the one-sided space: Brownian paths from ``a`` with a
    free right endpoint.
    """
    a = _pt(a, domain.dim)
    b = None if b is None else _pt(b, domain.dim)
    _check_inside(domain, a, b)
    rs = _check_levels(rs)
    grid = _bridge_grid(grid)
    setup = PathSetup(domain, a, b, grid, np.concatenate([[0.0], rs]))
    idx = list(range(1, len(rs) + 1))
    counts = count_events(setup, n, seed, _shell_reducer(idx, "corrected", rs), workers,
                          on_block)
    base = {"estimator": "bridge_shell", "a": a.tolist(),
            "b": None if b is None else b.tolist(), "one_sided": b is None,
            "steps": grid.n_steps, "mode": "corrected", "survival_count": int(counts[0])}
    return [bernoulli_estimate(int(c), n, seed, dict(base, r=float(r)))
            for c, r in zip(counts[1:], rs)]


def estimate_bridge_shell(domain, a, b, r, n, grid=None, seed=0, workers=1):
    return estimate_bridge_shell_curve(domain, a, b, [r], n, grid, seed, workers)[0]


def estimate_two_window_curve(domain, a, b, s1, s2, rs, n, grid=None, seed=0, workers=1):
    """Xi(r) = mu[stays in closure, min_{[0,s1]} q <= r, min_{[s1,s2]} q <= r].

    Each estimate's meta carries the one-window shell on the same paths and
    the stderr of the paired difference one-window minus two-window.
    """
    if not 0 < s1 < s2 < 1:
        raise InputError("need 0 < s1 < s2 < 1")
    a = _pt(a, domain.dim)
    b = None if b is None else _pt(b, domain.dim)
    _check_inside(domain, a, b)
    rs = _check_levels(rs)
    if np.any(rs <= 0):
        raise InputError("r must be positive")
    grid = TimeGrid.refined(_bridge_grid(grid), [s1, s2])
    setup = PathSetup(domain, a, b, grid, np.concatenate([[0.0], rs]), breaks=(s1, s2))

    def reducer(s):
        stay = s.stayed(0)
        out = []
        for k in range(1, len(rs) + 1):
            two = stay & ~s.stayed(k, [0]) & ~s.stayed(k, [1])
            one = stay & ~s.stayed(k)
            out += [two.sum(), one.sum(), (one & ~two).sum(), (two & ~one).sum()]
        return out

    counts = count_events(setup, n, seed, reducer, workers).reshape(len(rs), 4)
    res = []
    for r, (two, one, one_only, two_only) in zip(rs, counts):
        one_est = bernoulli_estimate(int(one), n, seed)
        meta = {"estimator": "two_window", "r": float(r), "s1": s1, "s2": s2,
                "a": a.tolist(), "b": None if b is None else b.tolist(),
                "one_sided": b is None, "steps": grid.n_steps,
                "one_window": one_est.value, "one_window_stderr": one_est.stderr,
                "paired_diff_stderr": paired_difference_stderr(int(one_only), int(two_only), n)}
        res.append(bernoulli_estimate(int(two), n, seed, meta))
    return res


def estimate_two_window(domain, a, b, s1, s2, r, n, grid=None, seed=0, workers=1):
    return estimate_two_window_curve(domain, a, b, s1, s2, [r], n, grid, seed, workers)[0]


def estimate_bv_gradient_sequence(domain, a, b, n_list, mc_n, grid=None, seed=0, workers=1):
    """n * mu[0 <= inf q <= 1/n] for each n, the proxy for the L1 norm of grad rho_n."""
    n_list = [int(k) for k in n_list]
    if any(k <= 0 for k in n_list):
        raise InputError("n_list entries must be positive")
    shells = estimate_bridge_shell_curve(domain, a, b, [1.0 / k for k in n_list], mc_n,
                                         grid, seed, workers)
    out = []
    for k, est in zip(n_list, shells):
        meta = dict(est.meta, estimator="bv_sequence", n_mollifier=k)
        out.append(Estimate(k * est.value, k * est.stderr, est.n, seed, meta))
    return out


# -- analysis ------------------------------------------------------------------

def fit_loglog_slope(points):
    """OLS of log(value) on log(r); nonpositive values are dropped and listed."""
    points = [(float(r), float(v)) for r, v in points]
    if len(points) < 3:
        raise InputError("slope fit needs at least 3 points")
    if any(r <= 0 for r, _ in points):
        raise InputError("abscissae must be positive")
    dropped = [(r, v) for r, v in points if not v > 0]
    kept = [(r, v) for r, v in points if v > 0]
    if len(kept) < 2:
        raise InputError("fewer than 2 positive values to fit")
    x = np.log([r for r, _ in kept])
    y = np.log([v for _, v in kept])
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if len(kept) > 2:
        resid = y - (intercept + slope * x)
        se = float(math.sqrt(np.sum(resid ** 2) / (len(kept) - 2) / sxx))
    else:
        se = float("nan")
    return SlopeFit(slope, intercept, se, [(float(a), float(b)) for a, b in zip(x, y)], dropped)


def verdict_bound(estimate, bound, k_sigma=4.0, rule=None):
    """Pass iff value - k_sigma * stderr <= bound."""
    if not math.isfinite(bound):
        raise InputError("bound must be finite")
    rule = rule or f"value - {k_sigma:g}*stderr <= bound"
    passed = estimate.value - k_sigma * estimate.stderr <= bound
    return Verdict(bool(passed), float(bound - estimate.value), rule)


def verdict_slope(fit, expected, tol, rule=None):
    rule = rule or f"|slope - {expected:g}| <= {tol:g}"
    margin = tol - abs(fit.slope - expected)
    return Verdict(bool(margin >= 0), float(margin), rule)


def ratio_spread(estimates, rs):
    """max/min of value/r over the cells; inf if some value is zero."""
    ratios = np.array([e.value / r for e, r in zip(estimates, rs)])
    if np.any(ratios <= 0):
        return math.inf
    return float(ratios.max() / ratios.min())


def verdict_bounded_sequence(estimates, factor=2.0, rule=None):
    """Pass iff max value <= factor * median value."""
    vals = np.array([e.value for e in estimates])
    med = float(np.median(vals))
    rule = rule or f"max <= {factor:g} * median"
    return Verdict(bool(vals.max() <= factor * med), float(factor * med - vals.max()), rule)
