"""Simulation and exact second-order structure of LSW processes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .filters import analysis, synthesis
from .spectrum import SpectrumSpec

__all__ = ["SeriesSample", "MAX_DENSE_T", "max_scales", "simulate", "covariance_matrix",
           "autocovariance_discrepancy"]

MIN_T = 16
MAX_DENSE_T = 4096


def max_scales(T):
    """Deepest usable scale count ``floor(log2 T)``."""
    return int(math.floor(math.log2(T)))


@dataclass(frozen=True, eq=False)
class SeriesSample:
    values: np.ndarray = field(repr=False)
    seed: int
    spec: SpectrumSpec = field(repr=False)

    @property
    def T(self):
        return self.values.size


def _check_T(T):
    T = int(T)
    if T < MIN_T:
        raise ValueError(f"T must be >= {MIN_T}, got {T}")
    return T


def simulate(spec, T, seed):
    """Draw one path of length ``T`` with Gaussian increments.

    ``X_t = sum_j sum_{k=0}^{T-1} sqrt(S_j(k/T)) psi_{jk}(t) xi_{jk}`` over
    ``j = -1..-min(J, floor(log2 T))``.  The innovations ``xi_{jk}`` come
    from a stream keyed by ``(seed, j)``.
    """
    T = _check_T(T)
    J = min(spec.J, max_scales(T))
    x = np.zeros(T)
    for j in spec.active_scales():
        if j < -J:
            continue
        w = spec.amplitudes(j, T)
        if not np.any(w):
            continue
        xi = rng.normals(seed, rng.INNOVATIONS, j, T)
        x += synthesis(w * xi, j)
    return SeriesSample(x, int(seed), spec)


def covariance_matrix(spec, T):
    """Exact ``T x T`` covariance ``Sigma_T`` of the simulated process.

    ``sigma_{st} = sum_j sum_k S_j(k/T) psi_{jk}(s) psi_{jk}(t)`` with the
    same scale truncation as :func:`simulate` and ``w = 0`` for ``k``
    outside ``0..T-1``.
    """
    T = _check_T(T)
    if T > MAX_DENSE_T:
        raise MemoryError(f"dense covariance limited to T <= {MAX_DENSE_T}")
    J = min(spec.J, max_scales(T))
    sigma = np.zeros((T, T))
    eye = np.eye(T)
    for j in spec.active_scales():
        if j < -J:
            continue
        s = spec.sampled(j, T)
        if not np.any(s):
            continue
        B = analysis(eye, j, axis=0)          # B[k, t] = psi_{jk}(t)
        sigma += synthesis(s[:, None] * B, j, axis=0)
    return 0.5 * (sigma + sigma.T)


def autocovariance_discrepancy(spec, T, tau_max, sigma=None):
    """``sum_{|tau| <= tau_max} T^{-1} sum_t |sigma_{t,t+tau} - c(t/T, tau)|``.

    Points with ``t = 0`` or ``t + tau`` outside the sample are skipped.
    """
    if sigma is None:
        sigma = covariance_matrix(spec, T)
    total = 0.0
    t = np.arange(1, T)
    for tau in range(-tau_max, tau_max + 1):
        ok = (t + tau >= 0) & (t + tau < T)
        tt = t[ok]
        c = spec.local_autocovariance(tt / T, tau)
        total += np.sum(np.abs(sigma[tt, tt + tau] - c)) / T
    return float(total)
