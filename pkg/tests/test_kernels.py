"""The compiled and NumPy backends agree.

Kernels built from arithmetic alone agree bitwise. Kernels calling exp and
log1p agree to a few ulp, since NumPy and libm round those differently.
"""

import numpy as np
import pytest

from pathbv import _pykernels, kernels
from pathbv.gauss_path import TimeGrid

try:
    from pathbv import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python") is _pykernels
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_ext
def test_bridge_paths_parity():
    g = np.random.default_rng(0)
    times = TimeGrid.refined(TimeGrid.uniform(6), [1 / 3]).times
    z = g.standard_normal((50, len(times) - 2, 3))
    a, b = np.array([0.1, 0.2, 0.3]), np.array([-1.0, 0.0, 2.0])
    np.testing.assert_array_equal(_ckernels.bridge_paths(a, b, times, z),
                                  _pykernels.bridge_paths(a, b, times, z))


@needs_ext
def test_window_hazard_parity():
    g = np.random.default_rng(1)
    q = np.abs(g.normal(0.2, 0.3, (40, 65)))
    q[3, 10] = -0.1
    dt = np.full(64, 1 / 64)
    win = (np.arange(64) >= 30).astype(np.int64)
    levels = np.array([0.0, 0.05, 0.2])
    qc, hc = _ckernels.window_hazard(q, dt, win, 2, levels)
    qp, hp = _pykernels.window_hazard(q, dt, win, 2, levels)
    np.testing.assert_array_equal(qc, qp)
    np.testing.assert_array_equal(np.isinf(hc), np.isinf(hp))
    np.testing.assert_allclose(hc, hp, rtol=1e-13, atol=0)


@needs_ext
@pytest.mark.parametrize("code,params", [(kernels.PROJ_BOX, np.array([0.0, 1.0])),
                                         (kernels.PROJ_HALFSPACE, np.array([1.0, 0.0])),
                                         (kernels.PROJ_BALL, np.array([0.5, 0.5]))])
@pytest.mark.parametrize("metric", [False, True])
def test_reflect_chunk_parity(code, params, metric):
    m = 5
    t = np.arange(1, m + 1) / (m + 1)
    C = np.minimum.outer(t, t) - np.outer(t, t)
    G = C / np.diag(C)[None, :] if metric else None
    g = np.random.default_rng(2)
    inc = g.normal(0, 0.2, (300, m, 1))
    mean = np.full((m, 1), 0.5)
    y0 = mean.copy()
    c_out = _ckernels.reflect_chunk(y0, mean, inc, 1e-2, code, params, None, G)
    p_out = _pykernels.reflect_chunk(y0, mean, inc, 1e-2, code, params, None, G)
    for a, b in zip(c_out, p_out):
        np.testing.assert_array_equal(a, b)
    assert c_out[2].any()


@needs_ext
def test_strip_exit_parity():
    n, S = 64, 200
    g = np.random.default_rng(3)
    normals = g.standard_normal((n, S))
    thresh = g.standard_exponential(n)
    choose = g.random(n)
    outs = []
    for mod in (_ckernels, _pykernels):
        x = np.full(n, 0.4)
        t = np.zeros(n)
        haz = np.zeros(n)
        status = np.zeros(n, np.int64)
        t_exit = np.full(n, np.nan)
        mod.strip_exit_chunk(x, t, haz, thresh, choose, status, t_exit, 1.0, 0.5, 1e-3, normals)
        outs.append((x, haz, status, t_exit))
    for a, b in zip(*outs):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)
    np.testing.assert_array_equal(outs[0][2], outs[1][2])
