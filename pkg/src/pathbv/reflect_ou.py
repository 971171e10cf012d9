"""Discretized reflecting Ornstein-Uhlenbeck process on constrained bridge space.

The state is a configuration ``y`` of shape (m, d): one point of the domain
per interior grid time ``t_i = i / (m + 1)``. In centered coordinates
``c = y - mean_path`` one step is the preconditioned Euler scheme

    c' = c - (dt / 2) c + Sigma^{1/2} sqrt(dt) xi

whose unconstrained invariant law is the discretized bridge N(0, Sigma),
followed by a projection back onto the closure. The projection correction
``ell`` is the discrete reflection term; its size in the Sigma^{-1} norm is
the boundary local-time increment.

Two reflections are available. ``"conormal"`` (default) projects the whole
configuration in the Sigma^{-1} metric, which reflects along Sigma n and
keeps the restricted Gaussian invariant. ``"euclidean"`` projects each row
on its own.

With ``b=None`` the one-sided variant is used: free right endpoint, grid
``t_i = i / m`` for i = 1..m, covariance min(s, t) and constant mean ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, NumericalError
from .gauss_path import TimeGrid, sample_bm_batch, sample_bridge_batch
from .rng import stream

REFLECTIONS = ("conormal", "euclidean")
FEASIBILITY_TOL = 1e-12


@dataclass
class DiscretizedForm:
    """Discretized Gaussian reference measure on the interior grid.

    ``C`` is the m x m time covariance; the full covariance is
    ``Sigma = kron(C, I_d)`` acting on row-major flattened configurations.
    """

    domain: object
    a: np.ndarray
    b: np.ndarray | None
    m: int
    times: np.ndarray
    C: np.ndarray
    C_half: np.ndarray
    C_inv: np.ndarray
    mean_path: np.ndarray

    @property
    def dim(self):
        return self.domain.dim

    @property
    def one_sided(self):
        return self.b is None

    @property
    def Sigma(self):
        return np.kron(self.C, np.eye(self.dim))

    @property
    def Sigma_half(self):
        return np.kron(self.C_half, np.eye(self.dim))

    @property
    def coupling(self):
        """coupling[j, i] = C_ji / C_ii, the row shift of a metric projection of row i."""
        return self.C / np.diag(self.C)[None, :]

    def inv_norm(self, ell):
        """Sigma^{-1} norm of configuration(s) of shape (..., m, d)."""
        ell = np.asarray(ell, float)
        quad = np.einsum("...ik,ij,...jk->...", ell, self.C_inv, ell)
        return np.sqrt(np.maximum(quad, 0.0))


def build_discretization(domain, a, b, m):
    """Bridge covariance min(s, t) - s t on t_i = i/(m+1) and the linear mean path."""
    if int(m) != m or m < 1:
        raise InputError("m must be a positive integer")
    m = int(m)
    a = np.atleast_1d(np.asarray(a, float))
    if a.shape != (domain.dim,):
        raise InputError("a has the wrong dimension")
    if b is not None:
        b = np.atleast_1d(np.asarray(b, float))
        if b.shape != (domain.dim,):
            raise InputError("b has the wrong dimension")
    for p in (a, b):
        if p is not None and not float(domain.signed_distance(p)) > 0:
            raise InputError(f"endpoint {p.tolist()} is not inside the domain")
    if b is None:
        t = np.arange(1, m + 1) / m
        C = np.minimum.outer(t, t)
        mean = np.repeat(a[None, :], m, axis=0)
    else:
        t = np.arange(1, m + 1) / (m + 1)
        C = np.minimum.outer(t, t) - np.outer(t, t)
        mean = a + (b - a) * t[:, None]
    try:
        w, V = np.linalg.eigh(C)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    if not np.all(w > 0):
        raise NumericalError("covariance is not positive definite")
    C_half = (V * np.sqrt(w)) @ V.T
    C_inv = (V / w) @ V.T
    return DiscretizedForm(domain, a, b, m, t, C, C_half, C_inv, mean)


@dataclass
class ReflectState:
    y: np.ndarray
    clock: float = 0.0


@dataclass
class LocalTimeEntry:
    step: int
    ell: np.ndarray
    indices: tuple
    dA: float


@dataclass
class LocalTimeRecord:
    """Contact steps of a run.

    ``steps[k]`` is the step number of the k-th contact, ``hits[k]`` marks the
    rows that left the closure, ``dA[k]`` is the Sigma^{-1} norm of its
    correction and ``A`` the running sum. ``ell`` is kept only on request.
    """

    steps: np.ndarray
    hits: np.ndarray
    dA: np.ndarray
    A: np.ndarray
    ell: np.ndarray | None = None

    @classmethod
    def empty(cls, m):
        return cls(np.zeros(0, np.int64), np.zeros((0, m), bool), np.zeros(0), np.zeros(0))

    @property
    def total(self):
        return float(self.A[-1]) if len(self.A) else 0.0

    @property
    def n_contacts(self):
        return len(self.steps)

    def entries(self):
        for k in range(self.n_contacts):
            yield LocalTimeEntry(int(self.steps[k]),
                                 None if self.ell is None else self.ell[k],
                                 tuple(np.flatnonzero(self.hits[k]).tolist()),
                                 float(self.dA[k]))

    @classmethod
    def concat(cls, parts, m):
        parts = [p for p in parts if p.n_contacts]
        if not parts:
            return cls.empty(m)
        steps = np.concatenate([p.steps for p in parts])
        hits = np.concatenate([p.hits for p in parts])
        dA = np.concatenate([p.dA for p in parts])
        ell = None
        if all(p.ell is not None for p in parts):
            ell = np.concatenate([p.ell for p in parts])
        return cls(steps, hits, dA, np.cumsum(dA), ell)


@dataclass
class ContactProfile:
    simultaneous: dict
    windows_touched: dict
    n_contacts: int
    multi_window_fraction: float
    total_A: float

    def to_dict(self):
        return {"simultaneous": {str(k): v for k, v in self.simultaneous.items()},
                "windows_touched": {str(k): v for k, v in self.windows_touched.items()},
                "n_contacts": self.n_contacts,
                "multi_window_fraction": self.multi_window_fraction,
                "total_A": self.total_A}


@dataclass
class Trajectory:
    """Every state of a short run with its driving noise, for residual checks."""

    states: np.ndarray
    increments: np.ndarray | None
    ell: np.ndarray
    hits: np.ndarray
    dt: float


@dataclass
class OccupationStats:
    n: int
    mean: np.ndarray
    cov: np.ndarray
    mean_stderr: np.ndarray
    hist: np.ndarray
    edges: np.ndarray

    def marginal_density(self):
        """Histogram counts normalized to probabilities, shape (m, d, bins)."""
        return self.hist / np.maximum(self.hist.sum(axis=-1, keepdims=True), 1)

    def to_dict(self):
        return {"n": self.n, "mean": self.mean.tolist(), "mean_stderr": self.mean_stderr.tolist(),
                "cov": self.cov.tolist(), "hist": self.hist.tolist(), "edges": self.edges.tolist()}


@dataclass
class ChainResult:
    form: DiscretizedForm
    dt: float
    T: float
    burn_in: float
    reflection: str
    state: ReflectState
    occupation: OccupationStats
    record: LocalTimeRecord
    profile: ContactProfile
    series: np.ndarray | None = None

    def summary(self):
        return {"dt": self.dt, "T": self.T, "burn_in": self.burn_in, "m": self.form.m,
                "reflection": self.reflection, "one_sided": self.form.one_sided,
                "A_total": self.record.total, "n_contacts": self.record.n_contacts,
                "occupation": self.occupation.to_dict(), "contact_profile": self.profile.to_dict()}


# -- stepping ------------------------------------------------------------------

def _check_reflection(reflection):
    if reflection not in REFLECTIONS:
        raise InputError(f"reflection must be one of {REFLECTIONS}")


def _advance(form, y0, increments, dt, reflection):
    code, params = form.domain.kernel_projection()
    project = form.domain.project if code == kernels.PROJ_NONE else None
    coupling = form.coupling if reflection == "conormal" else None
    try:
        return kernels.reflect_chunk(np.ascontiguousarray(y0, dtype=float), form.mean_path,
                                     np.ascontiguousarray(increments), dt, code, params,
                                     project, coupling)
    except FloatingPointError as exc:
        raise NumericalError(str(exc)) from exc


def noise_increments(form, dt, xi):
    """Sigma^{1/2} sqrt(dt) xi for xi of shape (S, m, d)."""
    return np.einsum("ij,sjk->sik", form.C_half, xi) * math.sqrt(dt)


def step_reflected(form, state, dt, rng, reflection="conormal", xi=None):
    """One projected Euler step; ``xi`` overrides the standard normal draw."""
    if not dt > 0:
        raise InputError("dt must be positive")
    _check_reflection(reflection)
    if xi is None:
        xi = rng.standard_normal((form.m, form.dim))
    inc = noise_increments(form, dt, np.asarray(xi, float)[None])
    traj, ell, hit = _advance(form, state.y, inc, dt, reflection)
    entry = LocalTimeEntry(0, ell[0], tuple(np.flatnonzero(hit[0]).tolist()),
                           float(form.inv_norm(ell[0])) if hit[0].any() else 0.0)
    return ReflectState(traj[0], state.clock + dt), entry


def simulate_trajectory(form, n_steps, dt, rng, y0=None, reflection="conormal",
                        increments=None):
    """Short run keeping every state and the noise; ``increments`` may be supplied."""
    _check_reflection(reflection)
    y0 = form.mean_path if y0 is None else np.asarray(y0, float)
    if increments is None:
        increments = noise_increments(form, dt, rng.standard_normal((n_steps, form.m, form.dim)))
    traj, ell, hit = _advance(form, y0, increments, dt, reflection)
    states = np.concatenate([y0[None], traj])
    return Trajectory(states, increments, ell, hit, dt)


def skorokhod_residual(form, trajectory):
    """|c_0 + sum inc - (dt/2) sum c_{k-1} + sum ell - c_N|, the telescoping identity."""
    if trajectory.increments is None:
        raise InputError("trajectory has no noise record")
    c = trajectory.states - form.mean_path
    drift = -0.5 * trajectory.dt * c[:-1].sum(axis=0)
    recon = c[0] + trajectory.increments.sum(axis=0) + drift + trajectory.ell.sum(axis=0)
    return float(np.linalg.norm(recon - c[-1]))


def refinement_residual(form, dt, horizon=1.0, n_runs=20, seed=0, reflection="conormal"):
    """Mean |Y_dt(T) - Y_{dt/2}(T)| over coupled runs started at the mean path.

    The dt/2 chain uses increments from Philox stream ``(seed, 0x0DE, run)``;
    the dt chain is driven by their pairwise sums, i.e. the same Brownian path.
    """
    n = int(round(horizon / dt))
    if n < 1 or not math.isclose(n * dt, horizon, rel_tol=1e-9):
        raise InputError("horizon must be a multiple of dt")
    res = []
    for run in range(n_runs):
        g = stream(seed, 0x0DE, run)
        fine = noise_increments(form, dt / 2, g.standard_normal((2 * n, form.m, form.dim)))
        coarse = fine[0::2] + fine[1::2]
        yf = _advance(form, form.mean_path, fine, dt / 2, reflection)[0][-1]
        yc = _advance(form, form.mean_path, coarse, dt, reflection)[0][-1]
        res.append(np.linalg.norm(yf - yc))
    return float(np.mean(res))


# -- long runs -------------------------------------------------------------------

def _hist_edges(form, bins, hist_range):
    if hist_range is not None:
        lo, hi = (np.broadcast_to(np.asarray(v, float), (form.dim,)) for v in hist_range)
    else:
        box = form.domain.bounding_box()
        if box is None:
            sd = 5.0 * math.sqrt(float(np.max(np.diag(form.C))))
            lo = form.mean_path.min(axis=0) - sd
            hi = form.mean_path.max(axis=0) + sd
        else:
            lo, hi = (np.asarray(v, float) for v in box)
    return np.stack([np.linspace(lo[k], hi[k], bins + 1) for k in range(form.dim)])


def run_chain(form, T, dt, burn_in=None, seed=0, reflection="conormal", bins=20,
              hist_range=None, n_batches=32, chunk=100_000, windows=None, record_ell=False,
              stride=None, y0=None):
    """Run the reflected chain for time T and collect post-burn-in statistics.

    Noise for chunk j comes from Philox stream ``(seed, 0xC4A1, j)``. The
    default burn-in is 10% of T. ``windows`` is the grid-index partition used
    for the contact profile (default: thirds). ``stride`` keeps every
    stride-th state as a time series.
    """
    _check_reflection(reflection)
    burn_in = 0.1 * T if burn_in is None else burn_in
    if not (T > burn_in > 0) or not dt > 0:
        raise InputError("need T > burn_in > 0 and dt > 0")
    n_steps = int(round(T / dt))
    n_burn = int(round(burn_in / dt))
    n_keep = n_steps - n_burn
    if n_keep < n_batches:
        raise InputError("too few post-burn-in steps for batch means")
    m, d = form.m, form.dim
    edges = _hist_edges(form, bins, hist_range)
    hist = np.zeros((m, d, bins), np.int64)
    s1 = np.zeros((m, d))
    s2 = np.zeros((m * d, m * d))
    bsize = n_keep // n_batches
    bsum = np.zeros((n_batches, m, d))
    parts = []
    series = []
    y = form.mean_path.copy() if y0 is None else np.asarray(y0, float)
    done = 0
    j = 0
    while done < n_steps:
        k = min(chunk, n_steps - done)
        g = stream(seed, 0xC4A1, j)
        inc = noise_increments(form, dt, g.standard_normal((k, m, d)))
        traj, ell, hit = _advance(form, y, inc, dt, reflection)
        y = traj[-1]
        contact = np.flatnonzero(hit.any(axis=1))
        if contact.size:
            dA = form.inv_norm(ell[contact])
            parts.append(LocalTimeRecord(done + contact, hit[contact], dA, dA,
                                         ell[contact] if record_ell else None))
        if stride:
            first = (-done) % stride
            series.append(traj[first::stride])
        lo = max(n_burn - done, 0)
        if lo < k:
            keep = traj[lo:]
            idx = np.arange(done + lo, done + k) - n_burn
            s1 += keep.sum(axis=0)
            c = (keep - form.mean_path).reshape(len(keep), -1)
            s2 += c.T @ c
            b = idx // bsize
            ok = b < n_batches
            for i in range(m):
                for kk in range(d):
                    vals = keep[:, i, kk]
                    bsum[:, i, kk] += np.bincount(b[ok], weights=vals[ok], minlength=n_batches)
                    pos = np.searchsorted(edges[kk], vals, side="right") - 1
                    pos = np.clip(pos, 0, bins - 1)
                    hist[i, kk] += np.bincount(pos, minlength=bins)
        done += k
        j += 1
    mean = s1 / n_keep
    cm = (mean - form.mean_path).reshape(-1)
    cov = s2 / n_keep - np.outer(cm, cm)
    bmeans = bsum / bsize
    se = bmeans.std(axis=0, ddof=1) / math.sqrt(n_batches)
    occ = OccupationStats(n_keep, mean, cov, se, hist, edges)
    record = LocalTimeRecord.concat(parts, m)
    windows = default_windows(m) if windows is None else windows
    profile = contact_profile_analysis(record, windows)
    return ChainResult(form, dt, T, burn_in, reflection, ReflectState(y, n_steps * dt), occ,
                       record, profile, np.concatenate(series) if stride else None)


def default_windows(m, k=3):
    """Partition of grid indices 0..m-1 into k contiguous windows."""
    return [list(w) for w in np.array_split(np.arange(m), k)]


def contact_profile_analysis(record, window_partition):
    """Classify contact steps by how many disjoint windows hold projected rows.

    Returns histograms of the number of simultaneously projected rows and of
    windows touched, and the fraction of local time carried by steps that
    touch two or more windows.
    """
    m = record.hits.shape[1]
    label = np.full(m, -1)
    for w, idx in enumerate(window_partition):
        for i in idx:
            if not 0 <= i < m:
                raise InputError(f"window index {i} out of range")
            if label[i] >= 0:
                raise InputError("windows must be disjoint")
            label[i] = w
    nw = len(window_partition)
    covered = label >= 0
    per_window = np.zeros((record.n_contacts, nw), bool)
    for w in range(nw):
        per_window[:, w] = record.hits[:, label == w].any(axis=1)
    n_touched = per_window.sum(axis=1)
    n_simul = (record.hits & covered).sum(axis=1)
    total = float(record.dA.sum())
    multi = float(record.dA[n_touched >= 2].sum())
    simul = {int(k): int(v) for k, v in zip(*np.unique(n_simul, return_counts=True))}
    touched = {int(k): int(v) for k, v in zip(*np.unique(n_touched, return_counts=True))}
    return ContactProfile(simul, touched, record.n_contacts,
                          multi / total if total > 0 else 0.0, total)


# -- rejection oracle --------------------------------------------------------------

@dataclass
class RejectionSample:
    samples: np.ndarray
    n_tried: int
    n_accepted: int

    @property
    def rate(self):
        return self.n_accepted / self.n_tried

    @property
    def rate_stderr(self):
        p = self.rate
        return math.sqrt(p * (1 - p) / (self.n_tried - 1))


def rejection_sample_constrained_bridge(domain, a, b, m, n_accept, grid=None, seed=0,
                                        correction=False, batch=65536, min_rate=1e-6,
                                        max_tries=10 ** 9):
    """Bridge configurations at t_i = i/(m+1) conditioned to stay in the closure.

    ``grid`` (default: exactly the m interior times plus endpoints) may be
    finer; it must contain the interior times. With ``correction=True`` a
    draw is additionally thinned by the bridge crossing probabilities between
    grid points, targeting the continuous-path law. Batches come from
    Philox stream ``(seed, 0x4E1, j)``.
    """
    form = build_discretization(domain, a, b, m)
    if grid is None:
        times = np.concatenate([[0.0], form.times, [1.0]]) if b is not None else \
            np.concatenate([[0.0], form.times])
        grid = TimeGrid(times, 1.0)
    pos = np.searchsorted(grid.times, form.times)
    if np.any(pos >= len(grid)) or not np.allclose(grid.times[np.minimum(pos, len(grid) - 1)],
                                                    form.times, rtol=0, atol=1e-14):
        raise InputError("grid must contain the interior times")
    out = []
    tried = accepted = 0
    j = 0
    while accepted < n_accept:
        g = stream(seed, 0x4E1, j)
        if b is None:
            pts = sample_bm_batch(form.a, grid, batch, g)
        else:
            pts = sample_bridge_batch(form.a, form.b, grid, batch, g)
        q = domain.signed_distance(pts[:, 1:])
        ok = np.all(q >= 0, axis=1)
        if correction:
            qq = domain.signed_distance(pts)
            win = np.zeros(grid.n_steps, np.int64)
            _, haz = kernels.window_hazard(qq, grid.dt, win, 1, np.array([0.0]))
            ok &= haz[:, 0, 0] < g.standard_exponential(batch)
        tried += batch
        sel = pts[ok][:, pos]
        out.append(sel)
        accepted += len(sel)
        j += 1
        if tried >= 10 ** 6 and accepted / tried < min_rate:
            raise NumericalError(f"acceptance starvation: {accepted} of {tried} accepted")
        if tried >= max_tries:
            raise NumericalError(f"gave up after {tried} tries with {accepted} accepted")
    return RejectionSample(np.concatenate(out)[:n_accept], tried, accepted)


def total_variation(p, q):
    """Half the L1 distance between two probability vectors (last axis)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return 0.5 * np.abs(p / p.sum(-1, keepdims=True) - q / q.sum(-1, keepdims=True)).sum(-1)
