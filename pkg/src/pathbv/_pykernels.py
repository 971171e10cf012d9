"""Pure-NumPy implementations of the hot loops.

These mirror ``_ckernels.pyx`` operation for operation; the compiled module
is preferred when it imports. Random inputs are always drawn by the caller
so both backends consume identical streams.
"""

import numpy as np

# 2 a b / dt above this contributes < 2e-22 to the hazard and is skipped
HAZARD_CUTOFF = 50.0

PROJ_NONE, PROJ_BALL, PROJ_HALFSPACE, PROJ_BOX = 0, 1, 2, 3


def bridge_paths(a, b, times, normals):
    """Sequential conditional-Gaussian bridge from a at times[0] to b at times[-1].

    ``normals`` has shape (n, N - 1, d) for a grid of N + 1 times; the last
    point is set to ``b`` exactly.
    """
    n, _, d = normals.shape
    N = len(times) - 1
    T = times[-1]
    out = np.empty((n, N + 1, d))
    x = np.broadcast_to(a, (n, d)).astype(float)
    out[:, 0] = x
    for i in range(N - 1):
        t, s = times[i], times[i + 1]
        w = (s - t) / (T - t)
        sd = np.sqrt((s - t) * (T - s) / (T - t))
        x = (x + w * (b - x)) + sd * normals[:, i]
        out[:, i + 1] = x
    out[:, N] = b
    return out


def window_hazard(q, dt, win, nwin, levels):
    """Skeleton minimum per window and cumulative crossing hazard per (window, level).

    Step i joins points i and i + 1 and belongs to window ``win[i]``. The
    hazard of a step at level l is ``-log(1 - exp(-2 (q_i - l)(q_{i+1} - l) / dt_i))``
    and is infinite when either endpoint is below the level.
    """
    n = q.shape[0]
    levels = np.asarray(levels, float)
    qmin = np.full((n, nwin), np.inf)
    hazard = np.zeros((n, nwin, len(levels)))
    q0, q1 = q[:, :-1], q[:, 1:]
    step_min = np.minimum(q0, q1)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for w in range(nwin):
            mask = win == w
            if not mask.any():
                continue
            qmin[:, w] = step_min[:, mask].min(axis=1)
            a0, a1, h = q0[:, mask], q1[:, mask], dt[mask]
            for k, lev in enumerate(levels):
                u, v = a0 - lev, a1 - lev
                arg = 2.0 * u * v / h
                contrib = np.where(arg > HAZARD_CUTOFF, 0.0, -np.log1p(-np.exp(-arg)))
                contrib = np.where((u < 0) | (v < 0), np.inf, contrib)
                acc = np.zeros(n)
                for j in range(contrib.shape[1]):
                    acc = acc + contrib[:, j]
                hazard[:, w, k] = acc
    return qmin, hazard


def _project(y, code, params):
    if code == PROJ_BALL:
        d = y.shape[-1]
        c, r = params[:d], params[d]
        v = y - c
        rho = np.sqrt((v * v).sum(axis=-1))
        out = rho > r
        scale = np.where(out, r / np.where(out, rho, 1.0), 1.0)
        return np.where(out[:, None], c + v * scale[:, None], y)
    if code == PROJ_HALFSPACE:
        d = y.shape[-1]
        nrm, off = params[:d], params[d]
        s = (y * nrm).sum(axis=-1) - off
        return y - np.minimum(s, 0.0)[:, None] * nrm
    if code == PROJ_BOX:
        d = y.shape[-1]
        return np.minimum(np.maximum(y, params[:d]), params[d:2 * d])
    raise ValueError(f"no fast projection for code {code}")


def _project_rows(y, code, params, project):
    return _project(y, code, params) if project is None else project(y)


def reflect_chunk(y0, mean, increments, dt, code, params, project=None, coupling=None,
                  max_sweeps=1000, tol=1e-13):
    """Projected Euler steps c' = c - (dt/2) c + inc, y = mean + c.

    With ``coupling=None`` every row of y is projected onto the closure on its
    own (Euclidean reflection). Otherwise the configuration is projected in
    the metric induced by the inverse covariance: ``coupling[j, i]`` is
    C_ji / C_ii, the single-row projections are exact in that metric and
    Dykstra's algorithm combines them.

    Returns post-projection states and corrections, each of shape (S, m, d),
    and a boolean (S, m) array marking rows that left the closure.
    """
    S, m, d = increments.shape
    traj = np.empty_like(increments)
    ell = np.empty_like(increments)
    hit = np.zeros((S, m), dtype=bool)
    c = y0 - mean
    half = -0.5 * dt
    for s in range(S):
        c = (c + half * c) + increments[s]
        y = mean + c
        yp = _project_rows(y, code, params, project)
        h = np.any(yp != y, axis=1)
        hit[s] = h
        if coupling is not None and h.any():
            yp = _dykstra(y, code, params, project, coupling, max_sweeps, tol)
        ell[s] = yp - y
        traj[s] = yp
        c = yp - mean
    return traj, ell, hit


def _dykstra(y, code, params, project, G, max_sweeps, tol):
    m, d = y.shape
    z = y.copy()
    delta = np.zeros((m, d))
    for _ in range(max_sweeps):
        change = 0.0
        for i in range(m):
            w = z - G[:, i][:, None] * delta[i]
            p = _project_rows(w[i:i + 1], code, params, project)[0]
            dn = p - w[i]
            change = max(change, float(np.max(np.abs(dn - delta[i]))))
            delta[i] = dn
            z = w + G[:, i][:, None] * dn
        if change <= tol:
            return _project_rows(z, code, params, project)
    raise FloatingPointError("metric projection did not converge")


def strip_exit_chunk(x, t, haz, thresh, choose, status, t_exit,
                     alpha, drift, dt, normals):
    """Advance drifted BM paths in the strip [0, alpha) by up to S Euler steps.

    Between grid points the path is a Brownian bridge; crossings of either
    flat edge are thinned by an exponential clock: path i exits once its
    accumulated crossing hazard exceeds ``thresh[i]``. ``choose[i]`` picks
    the edge on a hazard-triggered exit. ``status`` is 0 (running),
    1 (lower exit) or 2 (upper exit). Arrays are updated in place.
    """
    sq = np.sqrt(dt)
    S = normals.shape[1]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for s in range(S):
            act = status == 0
            if not act.any():
                break
            x0 = x[act]
            x1 = (x0 + drift * dt) + sq * normals[act, s]
            tm = t[act] + 0.5 * dt
            st = np.zeros(len(x0), dtype=status.dtype)
            st[x1 <= 0.0] = 1
            st[(x1 >= alpha) & (st == 0)] = 2
            inside = st == 0
            alo = 2.0 * x0 * x1 / dt
            ahi = 2.0 * (alpha - x0) * (alpha - x1) / dt
            hlo = np.where(alo > HAZARD_CUTOFF, 0.0, -np.log1p(-np.exp(-alo)))
            hhi = np.where(ahi > HAZARD_CUTOFF, 0.0, -np.log1p(-np.exp(-ahi)))
            hsum = hlo + hhi
            hnew = haz[act] + np.where(inside, hsum, 0.0)
            fire = inside & (hnew >= thresh[act])
            up = choose[act] * hsum < hhi
            st = np.where(fire, np.where(up, 2, 1), st)
            done = st != 0
            idx = np.flatnonzero(act)
            status[idx] = st
            t_exit[idx[done]] = tm[done]
            x[idx] = np.where(done, x0, x1)
            haz[idx] = hnew
            t[idx] = np.where(done, t[idx], t[idx] + dt)
    return status
