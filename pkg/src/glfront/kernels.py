"""Hot numeric kernels: tridiagonal solves and Crank-Nicolson chunk stepping.

Each kernel has a numba @njit implementation and a pure numpy/scipy fallback.
The fallback is selected by setting the environment variable
GLFRONT_DISABLE_NUMBA=1 (or automatically when numba is unavailable).
`benchmarks/bench_kernels.py` compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.linalg

_DISABLED = os.environ.get("GLFRONT_DISABLE_NUMBA", "").strip() in ("1", "true", "yes")

if not _DISABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover
        numba = None
        _DISABLED = True
else:
    numba = None

USE_NUMBA = not _DISABLED


def _thomas_numpy(dl, d, du, b):
    ab = np.zeros((3, d.size), dtype=np.result_type(d, b))
    ab[0, 1:] = du[:-1]
    ab[1, :] = d
    ab[2, :-1] = dl[1:]
    return scipy.linalg.solve_banded((1, 1), ab, b)


def _tridiag_matvec_numpy(dl, d, du, u):
    out = d * u
    out[:-1] += du[:-1] * u[1:]
    out[1:] += dl[1:] * u[:-1]
    return out


def _cn_chunk_numpy(a_dl, a_d, a_du, b_dl, b_d, b_du, u, nsteps):
    for _ in range(nsteps):
        rhs = _tridiag_matvec_numpy(b_dl, b_d, b_du, u)
        u = _thomas_numpy(a_dl, a_d, a_du, rhs)
    return u


if USE_NUMBA:

    @numba.njit(cache=True)
    def _thomas_numba(dl, d, du, b):  # pragma: no cover - exercised via dispatch
        n = d.size
        cp = np.empty(n, dtype=d.dtype)
        xp = np.empty(n, dtype=b.dtype)
        cp[0] = du[0] / d[0]
        xp[0] = b[0] / d[0]
        for i in range(1, n):
            m = d[i] - dl[i] * cp[i - 1]
            cp[i] = du[i] / m
            xp[i] = (b[i] - dl[i] * xp[i - 1]) / m
        x = np.empty(n, dtype=b.dtype)
        x[n - 1] = xp[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = xp[i] - cp[i] * x[i + 1]
        return x

    @numba.njit(cache=True)
    def _cn_chunk_numba(a_dl, a_d, a_du, b_dl, b_d, b_du, u, nsteps):  # pragma: no cover
        n = u.size
        rhs = np.empty(n, dtype=u.dtype)
        for _ in range(nsteps):
            rhs[0] = b_d[0] * u[0] + b_du[0] * u[1]
            for i in range(1, n - 1):
                rhs[i] = b_dl[i] * u[i - 1] + b_d[i] * u[i] + b_du[i] * u[i + 1]
            rhs[n - 1] = b_dl[n - 1] * u[n - 2] + b_d[n - 1] * u[n - 1]
            u = _thomas_numba(a_dl, a_d, a_du, rhs)
        return u


def thomas_solve(dl: np.ndarray, d: np.ndarray, du: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the tridiagonal system with sub/main/super diagonals (dl, d, du).

    dl[0] and du[-1] are ignored. No pivoting on the numba path; callers pass
    diagonally dominant systems (Crank-Nicolson matrices, ghost-closed rows).
    """
    if USE_NUMBA:
        dt = np.result_type(d, b)
        return _thomas_numba(
            np.ascontiguousarray(dl, dtype=dt),
            np.ascontiguousarray(d, dtype=dt),
            np.ascontiguousarray(du, dtype=dt),
            np.ascontiguousarray(b, dtype=dt),
        )
    return _thomas_numpy(dl, d, du, b)


def tridiag_matvec(dl: np.ndarray, d: np.ndarray, du: np.ndarray, u: np.ndarray) -> np.ndarray:
    return _tridiag_matvec_numpy(dl, d, du, u)


def cn_chunk(a_bands, b_bands, u: np.ndarray, nsteps: int) -> np.ndarray:
    """Advance u by nsteps of u <- A^-1 (B u) with tridiagonal A, B."""
    a_dl, a_d, a_du = a_bands
    b_dl, b_d, b_du = b_bands
    if nsteps <= 0:
        return u.copy()
    if USE_NUMBA:
        dt = np.result_type(a_d, u)
        return _cn_chunk_numba(
            np.ascontiguousarray(a_dl, dtype=dt),
            np.ascontiguousarray(a_d, dtype=dt),
            np.ascontiguousarray(a_du, dtype=dt),
            np.ascontiguousarray(b_dl, dtype=dt),
            np.ascontiguousarray(b_d, dtype=dt),
            np.ascontiguousarray(b_du, dtype=dt),
            np.ascontiguousarray(u, dtype=dt),
            nsteps,
        )
    return _cn_chunk_numpy(a_dl, a_d, a_du, b_dl, b_d, b_du, u.copy(), nsteps)
