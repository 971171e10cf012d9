"""Laws of the one-dimensional comparison processes.

``S`` is a standard Brownian motion and ``K >= 0`` a constant drift.

* ``eta = inf{t : K t + S_t <= -r}`` is defective for ``K > 0``: it is
  infinite with probability ``1 - exp(-2 K r)``.
* For the drifted motion ``r + K t + S_t`` in the strip ``[0, alpha)`` the
  Laplace transform of the exit time restricted to the upper edge is
  ``exp(K (alpha - r)) sinh(r s) / sinh(alpha s)``, ``s = sqrt(2 lambda + K^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate

from . import kernels, rng as rngmod
from .errors import InputError, NumericalError

QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class EtaLaw:
    """First time the drifted motion K t + S_t falls to -r.

    ``r = 0`` is the degenerate law eta = 0 almost surely.
    """

    r: float
    K: float = 0.0
    _table: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.r >= 0:
            raise InputError("EtaLaw needs r >= 0")
        if self.K < 0:
            raise InputError("EtaLaw needs K >= 0")


@dataclass(frozen=True)
class TwoSidedExit:
    r: float
    alpha: float
    K: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        if not 0 <= self.r < self.alpha:
            raise InputError("start offset must satisfy 0 <= r < alpha")
        if self.K < 0:
            raise InputError("K must be nonnegative")


def eta_density(t, law):
    """r / sqrt(2 pi t^3) exp(-(r + K t)^2 / (2 t)) for t > 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise InputError("eta_density needs t > 0")
    r, K = law.r, law.K
    res = r / np.sqrt(2.0 * np.pi * t ** 3) * np.exp(-(r + K * t) ** 2 / (2.0 * t))
    return float(res) if res.ndim == 0 else res


def eta_atom(law):
    """Mass at infinity, 1 - exp(-2 K r)."""
    return -math.expm1(-2.0 * law.K * law.r)


def _log_density_mass(lo, hi, law):
    """Integral of eta_density over (e^lo, e^hi) in the variable x = log t."""
    r, K = law.r, law.K

    def f(x):
        if x > 700.0:
            return 0.0
        t = math.exp(x)
        expo = -r * r / (2.0 * t) - r * K - 0.5 * K * K * t
        return r / math.sqrt(2.0 * math.pi * t) * math.exp(expo)

    val, err = integrate.quad(f, lo, hi, epsabs=QUAD_ABS_TOL * 1e-2, epsrel=1e-12, limit=400)
    if not np.isfinite(val) or err > QUAD_ABS_TOL:
        raise NumericalError(f"eta quadrature did not converge (err={err:.2e})")
    return val


def _breakpoints(law):
    pts = [math.log(law.r * law.r / 3.0)]
    if law.K > 0:
        pts.append(math.log(law.r / law.K))
    return sorted(pts)


def eta_mass(lo_t, hi_t, law):
    """Integral of eta_density over (lo_t, hi_t); hi_t may be inf."""
    if law.r == 0:
        return 0.0
    lo = math.log(lo_t) if lo_t > 0 else -math.inf
    hi = math.log(hi_t) if math.isfinite(hi_t) else math.inf
    if lo >= hi:
        return 0.0
    # below t = r^2 e^-8 the density is smaller than exp(-e^8 / 2)
    floor = math.log(law.r * law.r) - 8.0
    lo = max(lo, floor)
    if lo >= hi:
        return 0.0
    cuts = [lo] + [p + s for p in _breakpoints(law) for s in (-2.0, 0.0, 2.0) if lo < p + s < hi]
    cuts = sorted(set(cuts))
    total = 0.0
    for a, b in zip(cuts, cuts[1:] + [hi]):
        total += _log_density_mass(a, b, law)
    return total


def eta_tail(u, law):
    """P[eta > u]: adaptive quadrature of the density on (u, inf) plus the atom."""
    if not u > 0:
        raise InputError("eta_tail needs u > 0")
    return eta_mass(u, math.inf, law) + eta_atom(law)


def eta_tail_upper_bound(u, law):
    """sqrt(2/pi) r / sqrt(u) + 2 K r, an explicit bound on eta_tail."""
    if not u > 0:
        raise InputError("eta_tail_upper_bound needs u > 0")
    return math.sqrt(2.0 / math.pi) * law.r / math.sqrt(u) + 2.0 * law.K * law.r


def _normalized_density(t, law):
    # density of eta given eta < inf: inverse Gaussian with mean r/K, shape r^2
    r, K = law.r, law.K
    return r / np.sqrt(2.0 * np.pi * t ** 3) * np.exp(-(r - K * t) ** 2 / (2.0 * t))


def eta_table(law, n_points=4001):
    """Monotone (t, cdf) table of eta conditioned on being finite."""
    if "t" in law._table:
        return law._table["t"], law._table["cdf"]
    r, K = law.r, law.K
    lo = math.log(r * r) - 8.0
    hi = math.log(r * r) + 37.0  # K = 0 tail beyond this is below 1e-8
    if K > 0:
        mean, shape = r / K, r * r
        sd = math.sqrt(mean ** 3 / shape)
        hi = min(hi, math.log(mean + 60.0 * sd + 60.0 * mean))
        hi = max(hi, lo + 10.0)
    x = np.linspace(lo, hi, n_points)

    def g(s):
        t = math.exp(s)
        return t * float(_normalized_density(t, law))

    cells = np.empty(n_points - 1)
    for i in range(n_points - 1):
        val, err = integrate.quad(g, x[i], x[i + 1], epsabs=1e-14, epsrel=1e-12)
        if err > 1e-10:
            raise NumericalError("eta table quadrature failed")
        cells[i] = val
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    if not 0.999 < cdf[-1] <= 1.0 + 1e-8:
        raise NumericalError(f"eta table mass {cdf[-1]} is not ~1")
    t = np.exp(x)
    law._table.update(t=t, cdf=cdf)
    return t, cdf


def sample_eta(law, rng, size=None):
    """Draws of eta; INFINITY with probability eta_atom(law).

    Finite draws invert a PCHIP interpolant of log t against the tabulated
    conditional CDF.
    """
    atom = eta_atom(law)
    n = 1 if size is None else int(np.prod(size))
    if law.r == 0:
        return 0.0 if size is None else np.zeros(size)
    u_atom = rng.random(n)
    u = rng.random(n)
    out = np.full(n, np.inf)
    finite = u_atom >= atom
    if finite.any():
        t, cdf = eta_table(law)
        inv = law._table.get("inverse")
        if inv is None:
            # flat stretches of the table (increments below 1e-14) carry no
            # mass and would make the inverse slopes blow up
            keep = np.concatenate([[True], np.diff(cdf) > 1e-14])
            inv = interpolate.PchipInterpolator(cdf[keep], np.log(t[keep]))
            law._table["inverse"] = inv
        uu = np.clip(u[finite] * cdf[-1], inv.x[0], inv.x[-1])
        out[finite] = np.exp(inv(uu))
    if size is None:
        return float(out[0])
    return out.reshape(size)


def exit_upper_laplace(lam, exit):
    """E[exp(-lam rho); upper exit] for r + K t + S_t leaving [0, alpha).

    Computed in log space as exp(K (alpha - r)) sinh(r s) / sinh(alpha s).
    """
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    r, a, K = exit.r, exit.alpha, exit.K
    s = math.sqrt(2.0 * lam + K * K)
    if r == 0:
        return 0.0
    if s == 0:
        return r / a

    def log_sinh(x):
        # log sinh(x s), without forming a product that may underflow
        v = x * s
        if v < 1e-8:
            return math.log(x) + math.log(s)
        if v < 20.0:
            return math.log(math.sinh(v))
        return v + math.log1p(-math.exp(-2.0 * v)) - math.log(2.0)

    return math.exp(K * (a - r) + log_sinh(r) - log_sinh(a))


@dataclass
class StripExitSample:
    upper: np.ndarray
    exit_time: np.ndarray


def simulate_strip_exit(exit, n, dt, seed=0, chunk=256):
    """Euler paths of r + K t + S_t until they leave [0, alpha).

    Between grid points the path is a Brownian bridge, so crossings of each
    flat edge are thinned with the exact bridge crossing probability.
    """
    alpha, K = exit.alpha, exit.K
    upper = np.zeros(n, dtype=bool)
    times = np.zeros(n)
    for j, lo, hi in rngmod.blocks(n, 1 << 16):
        g = rngmod.stream(seed, 0x57A1, j)
        m = hi - lo
        x = np.full(m, float(exit.r))
        t = np.zeros(m)
        haz = np.zeros(m)
        thresh = g.standard_exponential(m)
        choose = g.random(m)
        status = np.zeros(m, dtype=np.int64)
        t_exit = np.full(m, np.inf)
        idx = np.arange(m)
        while idx.size:
            z = g.standard_normal((idx.size, chunk))
            xs, ts, hs = x[idx], t[idx], haz[idx]
            st, te = status[idx], t_exit[idx]
            kernels.strip_exit_chunk(xs, ts, hs, thresh[idx].copy(), choose[idx].copy(),
                                     st, te, alpha, K, dt, z)
            x[idx], t[idx], haz[idx], status[idx], t_exit[idx] = xs, ts, hs, st, te
            idx = idx[st == 0]
        upper[lo:hi] = status == 2
        times[lo:hi] = t_exit
    return StripExitSample(upper=upper, exit_time=times)


def euler_upper_laplace(lam, exit, n, dt, seed=0):
    """Monte Carlo mean and standard error of exp(-lam rho) 1{upper exit}."""
    res = simulate_strip_exit(exit, n, dt, seed)
    vals = np.where(res.upper, np.exp(-lam * res.exit_time), 0.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


@dataclass
class DominationReport:
    dim: int
    delta: float
    q_x: float
    dt: float
    tol: float
    n_paths: int
    n_stayed: int
    n_violations: int
    n_raw_violations: int

    @property
    def violation_rate(self):
        return self.n_violations / self.n_paths

    @property
    def raw_violation_rate(self):
        """Violations with zero tolerance, for diagnostics."""
        return self.n_raw_violations / self.n_paths

    def to_dict(self):
        return {"dim": self.dim, "delta": self.delta, "q_x": self.q_x, "dt": self.dt,
                "tol": self.tol, "n_paths": self.n_paths, "n_stayed": self.n_stayed,
                "violation_rate": self.violation_rate,
                "raw_violation_rate": self.raw_violation_rate}


def domination_tolerance(dt, c=3.0):
    return c * math.sqrt(dt) * math.log(1.0 / dt)


def bessel_domination_check(dim, delta, q_x, horizon, n_paths, dt, seed=0, c=3.0):
    """Pathwise check of R_t <= q_x + delta + K t + S_t while R stays >= delta.

    R_t = |omega_t - z| for d-dimensional BM started at distance q_x + delta
    from z, and S is the same noise projected on the radial direction.
    """
    if dim < 2:
        raise InputError("bessel_domination_check needs dim >= 2")
    if not dt > 0 or not horizon > 0:
        raise InputError("dt and horizon must be positive")
    K = (dim - 1) / (2.0 * delta)
    tol = domination_tolerance(dt, c)
    n_steps = int(round(horizon / dt))
    sq = math.sqrt(dt)
    n_stayed = n_viol = n_raw = 0
    for j, lo, hi in rngmod.blocks(n_paths, 1 << 14):
        g = rngmod.stream(seed, 0xBE55, j)
        m = hi - lo
        w = np.zeros((m, dim))
        w[:, 0] = q_x + delta
        R = np.linalg.norm(w, axis=1)
        S = np.zeros(m)
        stayed = R >= delta
        excess = np.full(m, -np.inf)
        for k in range(1, n_steps + 1):
            dw = sq * g.standard_normal((m, dim))
            S = S + np.einsum("ij,ij->i", w / R[:, None], dw)
            w = w + dw
            R = np.linalg.norm(w, axis=1)
            stayed &= R >= delta
            excess = np.maximum(excess, R - (q_x + delta + K * k * dt + S))
        n_stayed += int(stayed.sum())
        n_viol += int((stayed & (excess > tol)).sum())
        n_raw += int((stayed & (excess > 0)).sum())
    return DominationReport(dim, float(delta), float(q_x), float(dt), tol, int(n_paths),
                            n_stayed, n_viol, n_raw)
