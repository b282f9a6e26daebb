"""Modified Bessel functions of the first kind for integer order and complex argument.

Small and nearly real arguments use the power series; everything else uses
Miller's backward recurrence normalised by ``I_0 + 2 sum_k I_k = e^z``.
The scaled variant multiplies by ``exp(-|Re z|)`` and never overflows.
"""
import math

import numpy as np

from .errors import RangeError

MAX_ARG = 100.0
SERIES_MAX = 30.0
SERIES_CANCEL = 5.0


def _series(nmax, z, shift):
    """``exp(-shift) I_k(z)`` for ``k = 0..nmax`` from the power series."""
    out = np.zeros(nmax + 1, dtype=complex)
    half = 0.5 * z
    q = half * half
    logh = np.log(half)
    for n in range(nmax + 1):
        term = np.exp(n * logh - math.lgamma(n + 1) - shift)
        total = term
        k = 0
        while True:
            k += 1
            term = term * q / (k * (n + k))
            total += term
            if abs(term) <= 1e-17 * abs(total):
                break
        out[n] = total
    return out


def _miller(nmax, z, shift):
    """``exp(-shift) I_k(z)`` for ``k = 0..nmax`` by backward recurrence, ``Re z >= 0``."""
    start = int(max(nmax, abs(z))) + 40 + int(6 * math.sqrt(max(nmax, abs(z)) + 1))
    vals = np.zeros(start + 2, dtype=complex)
    vals[start] = 1e-300
    two_over_z = 2.0 / z
    for k in range(start, 0, -1):
        vals[k - 1] = k * two_over_z * vals[k] + vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            vals[k - 1:] *= 1e-250
    norm = vals[0] + 2 * vals[1:].sum()
    return vals[:nmax + 1] * (np.exp(z - shift) / norm)


def _orders(nmax, z, scaled):
    z = complex(z)
    if not np.isfinite(z):
        raise RangeError(f"Bessel argument {z} is not finite")
    if abs(z) > MAX_ARG:
        raise RangeError(f"|z| = {abs(z):.4g} exceeds the supported range {MAX_ARG}")
    if z == 0:
        out = np.zeros(nmax + 1, dtype=complex)
        out[0] = 1
        return out
    sign = 1
    if z.real < 0:
        z, sign = -z, -1
    shift = z.real if scaled else 0.0
    if abs(z) <= SERIES_MAX and abs(z) - z.real <= SERIES_CANCEL:
        out = _series(nmax, z, shift)
    else:
        out = _miller(nmax, z, shift)
    if sign < 0:
        out[1::2] *= -1
    return out


def _evaluate(n, z, scaled):
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if np.any(n != np.round(n)):
            raise ValueError("Bessel order must be an integer")
        n = n.astype(int)
    order = np.abs(n)
    zarr = np.asarray(z, dtype=complex)
    n_b, z_b = np.broadcast_arrays(order, zarr)
    out = np.empty(n_b.shape, dtype=complex)
    nmax = int(n_b.max()) if n_b.size else 0
    for zv in np.unique(z_b):
        mask = z_b == zv
        out[mask] = _orders(nmax, zv, scaled)[n_b[mask]]
    return out[()] if out.ndim == 0 else out


def bessel_i(n, z):
    """``I_n(z)``; ``n`` integer (negative allowed), ``|z| <= 100``. Broadcasts."""
    return _evaluate(n, z, scaled=False)


def bessel_i_scaled(n, z):
    """``exp(-|Re z|) I_n(z)``."""
    return _evaluate(n, z, scaled=True)
