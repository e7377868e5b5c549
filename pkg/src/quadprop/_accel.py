"""Hot loops for integral-operator application.

Every kernel in this package has the form ``A * exp(i * Q(x, y))`` with a real
quadratic ``Q``. After the separable factors are pulled out, applying it to a
gridded function reduces to the bilinear exponential sum

    out[j] = sum_k exp(i * q * x[j] * y[k]) * g[k]

which is the O(n^2) inner loop. Two evaluations are provided:

* :func:`bilinear_sum` evaluates the sum term by term, with a numba kernel
  and a chunked numpy fallback (selected by ``QUADPROP_BACKEND``).
* :func:`chirp_sum` evaluates the *same* sum on a shared uniform grid in
  O(n log n) by writing ``x*y = (x^2 + y^2 - (x - y)^2) / 2`` and doing the
  remaining Toeplitz product as an FFT convolution.
"""
import numpy as np
from scipy import fft

from . import _backend

if _backend.HAVE_NUMBA:
    from numba import njit, prange

    @njit(parallel=True, cache=True, fastmath=False)
    def _bilinear_sum_numba(x, y, q, g_re, g_im):
        n = x.size
        m = y.size
        out_re = np.empty(n)
        out_im = np.empty(n)
        for j in prange(n):
            qx = q * x[j]
            acc_re = 0.0
            acc_im = 0.0
            for k in range(m):
                ph = qx * y[k]
                c = np.cos(ph)
                s = np.sin(ph)
                acc_re += c * g_re[k] - s * g_im[k]
                acc_im += c * g_im[k] + s * g_re[k]
            out_re[j] = acc_re
            out_im[j] = acc_im
        return out_re, out_im

    @njit(cache=True)
    def _simpson_abs_sum_numba(values, weights):
        acc = 0.0
        for k in range(values.size):
            acc += weights[k] * abs(values[k])
        return acc


# keep the materialised exponential block below ~64 MB
_CHUNK_ELEMS = 1 << 22


def bilinear_sum_numpy(x, y, q, g):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=complex)
    out = np.empty(x.size, dtype=complex)
    rows = max(1, _CHUNK_ELEMS // max(y.size, 1))
    for start in range(0, x.size, rows):
        xb = x[start:start + rows]
        out[start:start + rows] = np.exp(1j * q * np.multiply.outer(xb, y)) @ g
    return out


def bilinear_sum_numba(x, y, q, g):
    if not _backend.HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    g = np.asarray(g, dtype=complex)
    re, im = _bilinear_sum_numba(np.ascontiguousarray(x, dtype=float),
                                 np.ascontiguousarray(y, dtype=float),
                                 float(q),
                                 np.ascontiguousarray(g.real),
                                 np.ascontiguousarray(g.imag))
    return re + 1j * im


def bilinear_sum(x, y, q, g):
    """``sum_k exp(i q x_j y_k) g_k`` for every ``j``, on the active backend."""
    if _backend.get_backend() == "numba":
        return bilinear_sum_numba(x, y, q, g)
    return bilinear_sum_numpy(x, y, q, g)


def chirp_sum(x0, h, q, g):
    """Same sum as :func:`bilinear_sum` for ``x = y = x0 + h*arange(n)``.

    Exact up to FFT rounding; cost O(n log n).
    """
    g = np.asarray(g, dtype=complex)
    n = g.size
    x = x0 + h * np.arange(n)
    half_sq = 0.5 * q * x * x
    m = h * np.arange(-(n - 1), n)
    chirp = np.exp(-0.5j * q * m * m)
    d = g * np.exp(1j * half_sq)
    size = fft.next_fast_len(2 * n - 1)
    conv = fft.ifft(fft.fft(chirp, size) * fft.fft(d, size))[n - 1:2 * n - 1]
    return np.exp(1j * half_sq) * conv


def simpson_abs_sum(values, weights):
    """``sum_k w_k |v_k|`` (the discrete L1 norm)."""
    if _backend.get_backend() == "numba":
        return float(_simpson_abs_sum_numba(np.ascontiguousarray(values, dtype=complex),
                                            np.ascontiguousarray(weights, dtype=float)))
    return float(np.dot(weights, np.abs(values)))
