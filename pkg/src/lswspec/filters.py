"""Fast application of nondecimated wavelet filters.

A filter with taps ``psi[0..L-1]`` is split into runs of equal taps.  A run
``[a, b)`` with value ``v`` contributes ``v * (C[k-a+1] - C[k-b+1])`` where
``C`` is the cumulative sum of the input.  After merging coincident run
edges a Haar filter costs three shifted passes regardless of ``L``.  Any
other filter still works, with one edge per change of tap value.
"""
from functools import lru_cache

import numpy as np

from .wavelets import haar_wavelet


@lru_cache(maxsize=None)
def runs(j):
    """``(start, stop, value)`` runs of constant taps of the scale-``j`` wavelet."""
    psi = haar_wavelet(j)
    out = []
    start = 0
    for n in range(1, len(psi) + 1):
        if n == len(psi) or psi[n] != psi[start]:
            out.append((start, n, float(psi[start])))
            start = n
    return tuple(out)


@lru_cache(maxsize=None)
def edges(j):
    """Merged ``(shift, weight)`` pairs: ``psi`` as a sum of weighted step functions."""
    coef = {}
    for a, b, v in runs(j):
        coef[a] = coef.get(a, 0.0) + v
        coef[b] = coef.get(b, 0.0) - v
    return tuple(sorted((s, w) for s, w in coef.items() if w != 0.0))


def _cumsum0(x, axis):
    x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
    c = np.empty((x.shape[0] + 1,) + x.shape[1:])
    c[0] = 0.0
    np.cumsum(x, axis=0, out=c[1:])
    return c


def analysis(x, j, axis=0):
    """Nondecimated wavelet coefficients ``d[k] = sum_t x[t] psi_{jk}(t)``.

    ``x`` is taken as zero outside ``0..T-1`` along ``axis`` (no padding or
    reflection), and ``k`` runs over ``0..T-1``.
    """
    c = _cumsum0(x, axis)
    n = c.shape[0] - 1
    out = np.zeros((n,) + c.shape[1:])
    buf = np.empty_like(out)
    for s, w in edges(j):
        # out[k] += w * C[k - s + 1], with C[i] = 0 for i <= 0
        if s >= n:
            continue
        part = buf[:n - s]
        np.multiply(c[1:n - s + 1], w, out=part)
        out[s:] += part
    return np.moveaxis(out, 0, axis)


def synthesis(y, j, axis=0):
    """Adjoint of :func:`analysis`: ``out[t] = sum_k y[k] psi_{jk}(t)``."""
    c = _cumsum0(y, axis)
    n = c.shape[0] - 1
    out = np.zeros((n,) + c.shape[1:])
    buf = np.empty_like(out)
    for s, w in edges(j):
        # out[t] -= w * C[min(t + s, n)]
        m = min(n, max(n - s + 1, 0))
        part = buf[:m]
        np.multiply(c[s:s + m], w, out=part)
        out[:m] -= part
        out[m:] -= w * c[n]
    return np.moveaxis(out, 0, axis)
