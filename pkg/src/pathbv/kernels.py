"""Backend selection for the hot loops.

The compiled extension ``pathbv._ckernels`` is used when it imports;
otherwise the NumPy fallback in ``pathbv._pykernels`` is used. Set
``PATHBV_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

HAZARD_CUTOFF = _pykernels.HAZARD_CUTOFF
PROJ_NONE = _pykernels.PROJ_NONE
PROJ_BALL = _pykernels.PROJ_BALL
PROJ_HALFSPACE = _pykernels.PROJ_HALFSPACE
PROJ_BOX = _pykernels.PROJ_BOX

_impl = _pykernels
BACKEND = "python"
if os.environ.get("PATHBV_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def bridge_paths(a, b, times, normals):
    return _impl.bridge_paths(a, b, times, normals)


def window_hazard(q, dt, win, nwin, levels):
    return _impl.window_hazard(q, dt, win, nwin, levels)


def reflect_chunk(y0, mean, increments, dt, code, params, project=None, coupling=None,
                  max_sweeps=1000, tol=1e-13):
    return _impl.reflect_chunk(y0, mean, increments, dt, code, params, project, coupling,
                               max_sweeps, tol)


def strip_exit_chunk(x, t, haz, thresh, choose, status, t_exit, alpha, drift, dt, normals):
    return _impl.strip_exit_chunk(x, t, haz, thresh, choose, status, t_exit,
                                  alpha, drift, dt, normals)
