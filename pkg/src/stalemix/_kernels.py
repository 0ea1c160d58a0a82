"""Hot numeric kernels, numba-jitted with a pure-numpy fallback.

The backend is chosen once at import time from the STALEMIX_BACKEND
environment variable: "numba" (default when numba is importable) or
"numpy".  Both backends implement identical integer/float recurrences;
the numba path exists purely for speed.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _resolve_backend() -> str:
    env = os.environ.get("STALEMIX_BACKEND", "auto").strip().lower()
    if env in ("", "auto"):
        return "numba" if numba is not None else "numpy"
    if env == "numba":
        if numba is None:
            raise RuntimeError("STALEMIX_BACKEND=numba but numba is not importable")
        return "numba"
    if env == "numpy":
        return "numpy"
    raise RuntimeError(f"unknown STALEMIX_BACKEND value: {env!r}")


BACKEND = _resolve_backend()

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# pure-numpy implementations (vectorized)

def _finalize_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _fill_uniforms_np(key, out):
    n = out.shape[0]
    ctr = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN + key
    out[:] = (_finalize_np(ctr) >> _S11).astype(np.float64) * _TO_UNIT


def _fill_uniform_rows_np(base, out):
    rows, cols = out.shape
    keys = _finalize_np(np.arange(1, rows + 1, dtype=np.uint64) + base)
    ctr = keys[:, None] + np.arange(1, cols + 1, dtype=np.uint64) * _GOLDEN
    out[:] = (_finalize_np(ctr) >> _S11).astype(np.float64) * _TO_UNIT


def _fill_normals_np(key, out):
    n = out.shape[0]
    pairs = (n + 1) // 2
    ctr = np.arange(1, 2 * pairs + 1, dtype=np.uint64) * _GOLDEN + key
    # (0, 1] so the log is finite
    u = ((_finalize_np(ctr) >> _S11).astype(np.float64) + 1.0) * _TO_UNIT
    r = np.sqrt(-2.0 * np.log(u[:pairs]))
    th = _TWO_PI * u[pairs:]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(th)
    z[1::2] = r * np.sin(th)
    out[:] = z[:n]


def _add_scaled_normals_np(v, key, scale):
    out = np.empty(v.shape[0])
    _fill_normals_np(key, out)
    return v + scale * out


def _perceptron_epochs_impl(x, y, order, w, epochs):
    """Run perceptron passes over x[order] repeatedly; w is updated in place.

    Returns the number of mistake updates (y_j <w, x_j> <= 0 counts as a
    mistake, including exact ties).
    """
    k = 0
    for _ in range(epochs):
        for j in order:
            xj = x[j]
            if y[j] * np.dot(w, xj) <= 0.0:
                w += y[j] * xj
                k += 1
    return k


def _progress_norm_ok_impl(witness, init, w_out, k, margin, radius2):
    """Progress and norm-growth inequalities for one local run (tolerance
    1e-9 scaled by the magnitudes involved)."""
    lhs1 = np.dot(witness, w_out)
    rhs1 = np.dot(witness, init) + margin * k
    if lhs1 < rhs1 - 1e-9 * (1.0 + abs(lhs1) + abs(rhs1)):
        return False
    lhs2 = np.dot(w_out, w_out)
    rhs2 = np.dot(init, init) + radius2 * k
    return lhs2 <= rhs2 + 1e-9 * (1.0 + abs(lhs2) + abs(rhs2))


# ---------------------------------------------------------------------------
# numba implementations (scalar loops; identical integer math)

if numba is not None:

    @numba.njit(cache=True)
    def _finalize_nb(z):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)

    @numba.njit(cache=True)
    def _fill_uniforms_nb(key, out):
        for j in range(out.shape[0]):
            z = _finalize_nb(np.uint64(j + 1) * _GOLDEN + key)
            out[j] = np.float64(z >> _S11) * _TO_UNIT

    @numba.njit(cache=True)
    def _fill_uniform_rows_nb(base, out):
        for i in range(out.shape[0]):
            ki = _finalize_nb(np.uint64(i + 1) + base)
            for j in range(out.shape[1]):
                z = _finalize_nb(ki + np.uint64(j + 1) * _GOLDEN)
                out[i, j] = np.float64(z >> _S11) * _TO_UNIT

    @numba.njit(cache=True)
    def _fill_normals_nb(key, out):
        n = out.shape[0]
        pairs = (n + 1) // 2
        for p in range(pairs):
            z1 = _finalize_nb(np.uint64(p + 1) * _GOLDEN + key)
            z2 = _finalize_nb(np.uint64(pairs + p + 1) * _GOLDEN + key)
            u1 = (np.float64(z1 >> _S11) + 1.0) * _TO_UNIT
            u2 = (np.float64(z2 >> _S11) + 1.0) * _TO_UNIT
            r = math.sqrt(-2.0 * math.log(u1))
            th = _TWO_PI * u2
            out[2 * p] = r * math.cos(th)
            if 2 * p + 1 < n:
                out[2 * p + 1] = r * math.sin(th)

    @numba.njit(cache=True)
    def _add_scaled_normals_nb(v, key, scale):
        out = np.empty(v.shape[0])
        _fill_normals_nb(key, out)
        for i in range(out.shape[0]):
            out[i] = v[i] + scale * out[i]
        return out

    _perceptron_epochs_nb = numba.njit(cache=True)(_perceptron_epochs_impl)
    _progress_norm_ok_nb = numba.njit(cache=True)(_progress_norm_ok_impl)


if BACKEND == "numba":
    fill_uniforms = _fill_uniforms_nb
    fill_uniform_rows = _fill_uniform_rows_nb
    fill_normals = _fill_normals_nb
    add_scaled_normals = _add_scaled_normals_nb
    perceptron_epochs = _perceptron_epochs_nb
    progress_norm_ok = _progress_norm_ok_nb
else:
    fill_uniforms = _fill_uniforms_np
    fill_uniform_rows = _fill_uniform_rows_np
    fill_normals = _fill_normals_np
    add_scaled_normals = _add_scaled_normals_np
    perceptron_epochs = _perceptron_epochs_impl
    progress_norm_ok = _progress_norm_ok_impl
