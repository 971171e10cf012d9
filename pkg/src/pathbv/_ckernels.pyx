# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; semantics match pathbv._pykernels exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, sqrt, INFINITY

cnp.import_array()

cdef double HAZARD_CUTOFF = 50.0
cdef int PROJ_BALL = 1, PROJ_HALFSPACE = 2, PROJ_BOX = 3


def bridge_paths(a, b, times, normals):
    cdef const double[:, :, ::1] z = np.ascontiguousarray(normals, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(np.broadcast_to(a, (z.shape[2],)), dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(np.broadcast_to(b, (z.shape[2],)), dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], d = z.shape[2], N = tt.shape[0] - 1
    out_arr = np.empty((n, N + 1, d))
    cdef double[:, :, ::1] out = out_arr
    cdef double T = tt[N], t, s, w, sd, x
    cdef Py_ssize_t p, i, k
    with nogil:
        for p in range(n):
            for k in range(d):
                x = av[k]
                out[p, 0, k] = x
                for i in range(N - 1):
                    t = tt[i]
                    s = tt[i + 1]
                    w = (s - t) / (T - t)
                    sd = sqrt((s - t) * (T - s) / (T - t))
                    x = (x + w * (bv[k] - x)) + sd * z[p, i, k]
                    out[p, i + 1, k] = x
                out[p, N, k] = bv[k]
    return out_arr


def window_hazard(q, dt, win, Py_ssize_t nwin, levels):
    cdef const double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(dt, dtype=np.float64)
    cdef long[::1] wv = np.ascontiguousarray(win, dtype=np.int64)
    cdef const double[::1] lv = np.ascontiguousarray(levels, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0], N = qv.shape[1] - 1, L = lv.shape[0]
    qmin_arr = np.full((n, nwin), np.inf)
    haz_arr = np.zeros((n, nwin, L))
    cdef double[:, ::1] qmin = qmin_arr
    cdef double[:, :, ::1] haz = haz_arr
    cdef Py_ssize_t p, i, k, w
    cdef double q0, q1, u, v, arg, m
    with nogil:
        for p in range(n):
            for i in range(N):
                w = wv[i]
                q0 = qv[p, i]
                q1 = qv[p, i + 1]
                m = q0 if q0 < q1 else q1
                if m < qmin[p, w]:
                    qmin[p, w] = m
                for k in range(L):
                    u = q0 - lv[k]
                    v = q1 - lv[k]
                    if u < 0 or v < 0:
                        haz[p, w, k] = INFINITY
                        continue
                    arg = 2.0 * u * v / h[i]
                    if arg > HAZARD_CUTOFF:
                        continue
                    haz[p, w, k] = haz[p, w, k] + (-log1p(-exp(-arg)))
    return qmin_arr, haz_arr


cdef inline void _project(double* y, Py_ssize_t d, int code, const double* prm) noexcept nogil:
    cdef Py_ssize_t k
    cdef double rho, s, lo, hi
    if code == PROJ_BALL:
        rho = 0.0
        for k in range(d):
            rho += (y[k] - prm[k]) * (y[k] - prm[k])
        rho = sqrt(rho)
        if rho > prm[d]:
            s = prm[d] / rho
            for k in range(d):
                y[k] = prm[k] + (y[k] - prm[k]) * s
    elif code == PROJ_HALFSPACE:
        s = 0.0
        for k in range(d):
            s += y[k] * prm[k]
        s = s - prm[d]
        if s < 0:
            for k in range(d):
                y[k] = y[k] - s * prm[k]
    elif code == PROJ_BOX:
        for k in range(d):
            lo = prm[k]
            hi = prm[d + k]
            if y[k] < lo:
                y[k] = lo
            if y[k] > hi:
                y[k] = hi


cdef inline bint _moved(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(d):
        if a[k] != b[k]:
            return True
    return False


def reflect_chunk(y0, mean, increments, double dt, int code, params, project=None,
                  coupling=None, int max_sweeps=1000, double tol=1e-13):
    if project is not None or code == 0:
        from pathbv._pykernels import reflect_chunk as py_reflect
        return py_reflect(y0, mean, increments, dt, code, params, project, coupling,
                          max_sweeps, tol)
    cdef const double[:, :, ::1] inc = np.ascontiguousarray(increments, dtype=np.float64)
    cdef const double[:, ::1] mu = np.ascontiguousarray(mean, dtype=np.float64)
    cdef const double[::1] prm = np.ascontiguousarray(params, dtype=np.float64)
    cdef Py_ssize_t S = inc.shape[0], m = inc.shape[1], d = inc.shape[2]
    cdef bint metric = coupling is not None
    G_arr = np.ascontiguousarray(coupling if metric else np.zeros((m, m)), dtype=np.float64)
    cdef const double[:, ::1] G = G_arr
    traj_arr = np.empty((S, m, d))
    ell_arr = np.empty((S, m, d))
    hit_arr = np.zeros((S, m), dtype=np.uint8)
    cdef double[:, :, ::1] traj = traj_arr
    cdef double[:, :, ::1] ell = ell_arr
    cdef unsigned char[:, ::1] hit = hit_arr
    c_arr = np.ascontiguousarray(np.asarray(y0, dtype=np.float64) - np.asarray(mean, dtype=np.float64))
    cdef double[:, ::1] c = c_arr
    y_arr = np.empty((m, d))
    z_arr = np.empty((m, d))
    w_arr = np.empty((m, d))
    delta_arr = np.empty((m, d))
    p_arr = np.empty(d)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] delta = delta_arr
    cdef double[::1] pv = p_arr
    cdef double half = -0.5 * dt, change, dn, diff
    cdef Py_ssize_t s, i, j, k, sweep
    cdef bint any_hit, failed = False
    with nogil:
        for s in range(S):
            any_hit = False
            for i in range(m):
                for k in range(d):
                    c[i, k] = (c[i, k] + half * c[i, k]) + inc[s, i, k]
                    y[i, k] = mu[i, k] + c[i, k]
                    z[i, k] = y[i, k]
                _project(&z[i, 0], d, code, &prm[0])
                if _moved(&z[i, 0], &y[i, 0], d):
                    hit[s, i] = 1
                    any_hit = True
            if metric and any_hit:
                for i in range(m):
                    for k in range(d):
                        z[i, k] = y[i, k]
                        delta[i, k] = 0.0
                for sweep in range(max_sweeps):
                    change = 0.0
                    for i in range(m):
                        for j in range(m):
                            for k in range(d):
                                w[j, k] = z[j, k] - G[j, i] * delta[i, k]
                        for k in range(d):
                            pv[k] = w[i, k]
                        _project(&pv[0], d, code, &prm[0])
                        for k in range(d):
                            dn = pv[k] - w[i, k]
                            diff = dn - delta[i, k]
                            if diff < 0:
                                diff = -diff
                            if diff > change:
                                change = diff
                            delta[i, k] = dn
                        for j in range(m):
                            for k in range(d):
                                z[j, k] = w[j, k] + G[j, i] * delta[i, k]
                    if change <= tol:
                        break
                else:
                    failed = True
                    break
                for i in range(m):
                    _project(&z[i, 0], d, code, &prm[0])
            for i in range(m):
                for k in range(d):
                    ell[s, i, k] = z[i, k] - y[i, k]
                    traj[s, i, k] = z[i, k]
                    c[i, k] = z[i, k] - mu[i, k]
    if failed:
        raise FloatingPointError("metric projection did not converge")
    return traj_arr, ell_arr, hit_arr.astype(bool)


def strip_exit_chunk(x_arr, t_arr, haz_arr, thresh_arr, choose_arr, status_arr, texit_arr,
                     double alpha, double drift, double dt, normals):
    cdef double[::1] x = x_arr
    cdef double[::1] t = t_arr
    cdef double[::1] haz = haz_arr
    cdef double[::1] thresh = thresh_arr
    cdef double[::1] choose = choose_arr
    cdef long[::1] status = status_arr
    cdef double[::1] texit = texit_arr
    cdef const double[:, ::1] z = np.ascontiguousarray(normals, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], S = z.shape[1], p, s
    cdef double sq = sqrt(dt), x0, x1, alo, ahi, hlo, hhi, hsum, hnew
    with nogil:
        for p in range(n):
            if status[p] != 0:
                continue
            for s in range(S):
                x0 = x[p]
                x1 = (x0 + drift * dt) + sq * z[p, s]
                if x1 <= 0.0:
                    status[p] = 1
                elif x1 >= alpha:
                    status[p] = 2
                else:
                    alo = 2.0 * x0 * x1 / dt
                    ahi = 2.0 * (alpha - x0) * (alpha - x1) / dt
                    hlo = 0.0 if alo > HAZARD_CUTOFF else -log1p(-exp(-alo))
                    hhi = 0.0 if ahi > HAZARD_CUTOFF else -log1p(-exp(-ahi))
                    hsum = hlo + hhi
                    hnew = haz[p] + hsum
                    haz[p] = hnew
                    if hnew >= thresh[p]:
                        status[p] = 2 if choose[p] * hsum < hhi else 1
                if status[p] != 0:
                    texit[p] = t[p] + 0.5 * dt
                    break
                x[p] = x1
                t[p] = t[p] + dt
    return status_arr
