"""Raw and corrected wavelet periodograms, interval averages and their
variances.

The quadratic part of an interval average is ``X' U X``.  Its variance
under a covariance ``Sigma`` is ``2 tr(U Sigma U Sigma)``, which is
evaluated here through the covariances of the wavelet coefficients::

    2 tr(U S U S) = 2 / n^2 * sum_{k,k' in R} sum_{l,m} a_l a_m G_lm[k,k']^2

with ``G_lm = B_l S B_m'`` and ``a = (A^{-1})_{j.}``.  Summing the inner
term once into a ``T x T`` table and taking a summed-area table of it makes
every interval query O(1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng
from .filters import analysis
from .process import MAX_DENSE_T, max_scales
from .wavelets import AutocorrSystem, gram_matrix, scale_position, support_length

__all__ = [
    "PeriodogramGrid",
    "TimeInterval",
    "AveragedEstimate",
    "raw_periodogram",
    "corrected_periodogram",
    "periodogram",
    "regularization_noise",
    "averaged_estimator",
    "u_matrix",
    "VarianceTable",
    "bandwidth",
    "exact_variance",
    "interval_quadratic",
    "window_bounds",
    "plugin_covariance_matrix",
    "plugin_covariance",
    "plugin_variance",
]


@dataclass(frozen=True)
class TimeInterval:
    """Observed-time interval ``[lo, hi)``; rescaled ``[lo/T, hi/T)``."""

    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"invalid interval [{self.lo}, {self.hi})")

    @property
    def count(self):
        return self.hi - self.lo

    def contains(self, k):
        return self.lo <= k < self.hi

    def rescaled(self, T):
        return self.lo / T, self.hi / T

    def __len__(self):
        return self.count


@dataclass(frozen=True, eq=False)
class PeriodogramGrid:
    """Wavelet periodograms on ``J`` scales; row ``i`` is scale ``-(i+1)``."""

    T: int
    J: int
    raw: np.ndarray = field(repr=False)
    corrected: np.ndarray | None = field(default=None, repr=False)

    def row(self, j, corrected=True):
        data = self.corrected if corrected else self.raw
        if data is None:
            raise ValueError("corrected periodogram has not been computed")
        return data[scale_position(j)]


@dataclass(frozen=True)
class AveragedEstimate:
    j: int
    interval: TimeInterval
    q: float
    sigma2: float | None = None
    sigma_source: str | None = None


def raw_periodogram(x, J=None):
    """Squared nondecimated Haar coefficients ``I_{j;T}(k/T)``, ``j = -1..-J``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    T = x.size
    Jmax = max_scales(T) if T >= 2 else 0
    J = Jmax if J is None else int(J)
    if not 1 <= J <= Jmax:
        raise ValueError(f"J must be in 1..{Jmax} for T = {T}, got {J}")
    raw = np.vstack([analysis(x, -i) ** 2 for i in range(1, J + 1)])
    raw.setflags(write=False)
    return PeriodogramGrid(T, J, raw)


def corrected_periodogram(grid, gram=None):
    """``L = A_J^{-1} I`` applied across scales at every time point."""
    gram = gram or gram_matrix(grid.J)
    if gram.J != grid.J:
        raise ValueError(f"Gram matrix has J = {gram.J}, periodogram has J = {grid.J}")
    corrected = gram.a_inv @ grid.raw
    corrected.setflags(write=False)
    return PeriodogramGrid(grid.T, grid.J, grid.raw, corrected)


def periodogram(x, J=None):
    """Raw and corrected periodogram in one call."""
    return corrected_periodogram(raw_periodogram(x, J))


def regularization_noise(j, T, c2, seed):
    """``z_{j,k;T}``, ``k = 0..T-1``: i.i.d. ``N(0, c2 * 2^j)`` keyed by ``(seed, j)``."""
    if c2 < 0:
        raise ValueError("c2 must be non-negative")
    if c2 == 0:
        return np.zeros(T)
    return np.sqrt(c2 * 2.0 ** j) * rng.normals(seed, rng.REGULARIZATION, j, T)


def _interval(R):
    return R if isinstance(R, TimeInterval) else TimeInterval(*R)


def averaged_estimator(grid, j, R, c2, seed, variance=None):
    """``Q_{j,R;T}``: mean of ``L_j(k/T) + z_{j,k;T}`` over ``k`` in ``R``.

    ``variance`` is an optional :class:`VarianceTable` for scale ``j``; when
    given, ``sigma2`` and ``sigma_source`` are filled in.
    """
    R = _interval(R)
    if R.hi > grid.T:
        raise ValueError("interval exceeds the sample")
    vals = grid.row(j)[R.lo:R.hi] + regularization_noise(j, grid.T, c2, seed)[R.lo:R.hi]
    q = float(np.mean(vals))
    if variance is None:
        return AveragedEstimate(j, R, q)
    if variance.j != j:
        raise ValueError("variance table is for a different scale")
    return AveragedEstimate(j, R, q, float(variance.sigma2(R.lo, R.hi)), variance.source)


_CACHE_T = 1024


@lru_cache(maxsize=32)
def _cached_analysis_matrix(T, j):
    W = analysis(np.eye(T), j, axis=0)
    W.setflags(write=False)
    return W


def _analysis_matrix(T, j):
    """``W`` with ``W[k, t] = psi_{jk}(t)``; cached for ``T <= 1024``."""
    if T <= _CACHE_T:
        return _cached_analysis_matrix(T, j)
    return analysis(np.eye(T), j, axis=0)


def u_matrix(j, R, T, gram=None):
    """Dense ``U_{j,R;T}`` with ``X' U X`` equal to the corrected-periodogram mean over ``R``."""
    R = _interval(R)
    if T > MAX_DENSE_T:
        raise MemoryError(f"dense U limited to T <= {MAX_DENSE_T}")
    gram = gram or gram_matrix(max_scales(T))
    weights = gram.inv_row(j)
    U = np.zeros((T, T))
    for i, a in enumerate(weights, start=1):
        W = _analysis_matrix(T, -i)[R.lo:R.hi]
        U += a * (W.T @ W)
    U /= R.count
    return 0.5 * (U + U.T)


def _summed_area(h):
    s = np.zeros((h.shape[0] + 1, h.shape[1] + 1))
    np.cumsum(np.cumsum(h, axis=0), axis=1, out=s[1:, 1:])
    return s


def bandwidth(cov):
    """Largest ``|s - t|`` with a nonzero ``cov[s, t]``."""
    cov = np.asarray(cov)
    for u in range(cov.shape[0] - 1, 0, -1):
        if np.any(np.diagonal(cov, u)) or np.any(np.diagonal(cov, -u)):
            return u
    return 0


class VarianceTable:
    """Variances of ``Q_{j,R;T}`` for every interval ``R`` under a given covariance.

    Parameters
    ----------
    cov : (T, T) array
        Covariance of the series: the exact ``Sigma_T`` or a plug-in estimate.
    gram : GramMatrix
        Correction matrix; its ``J`` fixes the scales entering ``U``.
    j : int
        Target scale.
    c2 : float
        Regularization constant ``C^2``.
    source : str
        ``"exact-oracle"`` or ``"plugin"``, carried onto estimates.
    weight_tol : float
        Scale pairs with ``|a_l a_m| < weight_tol * max_l a_l^2`` are
        skipped.  ``0`` (the default) keeps every pair and is exact.
    band : int, optional
        Bandwidth of ``cov``; detected when omitted.  A narrow band lets
        fine-scale pairs be computed block by block near the diagonal.
    """

    def __init__(self, cov, gram, j, c2, source="plugin", weight_tol=0.0, band=None):
        cov = np.asarray(cov, dtype=float)
        T = cov.shape[0]
        if cov.shape != (T, T):
            raise ValueError("covariance must be square")
        if weight_tol < 0:
            raise ValueError("weight_tol must be non-negative")
        self.T = T
        self.j = int(j)
        self.c2 = float(c2)
        self.source = source
        weights = gram.inv_row(j)
        J = gram.J
        M = bandwidth(cov) if band is None else int(band)
        floor = weight_tol * float(np.max(weights ** 2))
        self.pairs = 0
        h = np.zeros((T, T))
        dense = {}
        # G_lm = B_l cov B_m'; G_ml = G_lm'
        for m in range(1, J + 1):
            for ell in range(1, m + 1):
                coef = weights[ell - 1] * weights[m - 1]
                if abs(coef) < floor or coef == 0.0:
                    continue
                self.pairs += 1
                width = support_length(-ell) + support_length(-m) + 2 * M
                if 4 * width >= T:
                    if m not in dense:
                        dense = {m: analysis(cov, -m, axis=1)}
                    g = analysis(dense[m], -ell, axis=0)
                    g *= g
                    g *= coef
                    h += g
                    if ell != m:
                        h += g.T
                else:
                    _banded_pair(h, cov, ell, m, M, coef, block=max(64, width))
        self._sat = _summed_area(h)

    def quadratic(self, lo, hi):
        """``2 tr(U Sigma U Sigma)`` for ``R = [lo, hi)``; vectorised over arrays."""
        s = self._sat
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        block = s[hi, hi] - s[lo, hi] - s[hi, lo] + s[lo, lo]
        n = (hi - lo).astype(float)
        return 2.0 * block / n ** 2

    def sigma2(self, lo, hi):
        """Quadratic part (clipped at zero) plus the floor ``C^2 2^j / |RT|``."""
        n = (np.asarray(hi) - np.asarray(lo)).astype(float)
        quad = np.maximum(self.quadratic(lo, hi), 0.0)
        return quad + self.c2 * 2.0 ** self.j / n


def _banded_pair(h, cov, ell, m, M, coef, block):
    """Add ``coef * G_lm**2`` (and its transpose) to ``h`` for a banded ``cov``."""
    T = cov.shape[0]
    Ll, Lm = support_length(-ell), support_length(-m)
    for k0 in range(0, T, block):
        k1 = min(T, k0 + block)
        ta = max(0, k0 - Ll + 1)
        c0 = max(0, k0 - Ll + 1 - M)
        c1 = min(T, k1 + Lm - 1 + M)
        sa = max(0, c0 - Lm + 1)
        w = analysis(cov[ta:k1, sa:c1], -m, axis=1)[:, c0 - sa:]
        g = analysis(w, -ell, axis=0)[k0 - ta:]
        g *= g
        g *= coef
        h[k0:k1, c0:c1] += g
        if ell != m:
            h[c0:c1, k0:k1] += g.T


def interval_quadratic(cov, gram, j, R):
    """``2 tr((U_{j,R;T} Sigma)^2)`` for a single interval without building a table.

    With ``B_l = W_l[R] Sigma`` (rows of the scale-``l`` analysis matrix in
    ``R``) the trace is ``sum_{l,m} a_l a_m ||B_l W_m[R]'||_F^2 / |RT|^2``.
    """
    R = _interval(R)
    cov = np.asarray(cov, dtype=float)
    weights = gram.inv_row(j)
    rows = [analysis(cov, -i, axis=0)[R.lo:R.hi] for i in range(1, gram.J + 1)]
    total = 0.0
    for ell, a in enumerate(weights, start=1):
        for m, b in enumerate(weights[ell - 1:], start=ell):
            g = analysis(rows[ell - 1], -m, axis=1)[:, R.lo:R.hi]
            total += (1.0 if ell == m else 2.0) * a * b * float(np.sum(g * g))
    return 2.0 * total / R.count ** 2


def exact_variance(spec, j, R, T, c2, gram=None, cov=None):
    """``Var Q_{j,R;T} = 2 tr((U Sigma_T)^2) + C^2 2^j / |RT|`` from the true spectrum."""
    from .process import covariance_matrix

    R = _interval(R)
    gram = gram or gram_matrix(max_scales(T))
    cov = covariance_matrix(spec, T) if cov is None else cov
    return interval_quadratic(cov, gram, j, R) + c2 * 2.0 ** j / R.count


def window_bounds(s, T, length):
    """``R_T(s)``: ``length`` points centred on ``s``, shifted to stay inside ``[0, T)``."""
    length = min(int(length), T)
    lo = int(s) - (length - 1) // 2
    lo = min(max(lo, 0), T - length)
    return lo, lo + length


def _window_means(row, T, length):
    s = np.arange(T)
    half = (min(length, T) - 1) // 2
    lo = np.clip(s - half, 0, T - min(length, T))
    hi = lo + min(length, T)
    c = np.concatenate(([0.0], np.cumsum(row)))
    return (c[hi] - c[lo]) / (hi - lo)


def _local_q(grid, c2, seed, window):
    """``Q_{l,R_T(s);T}`` for every scale ``l`` (rows) and time ``s`` (columns)."""
    out = np.empty((grid.J, grid.T))
    for i in range(1, grid.J + 1):
        row = grid.row(-i) + regularization_noise(-i, grid.T, c2, seed)
        out[i - 1] = _window_means(row, grid.T, window)
    return out


def plugin_covariance_matrix(grid, mt=2, window=9, c2=0.0, seed=0):
    """Banded plug-in covariance ``Sigma~_T`` (stored dense, symmetrised).

    ``sigma~_{s,s+u} = sum_l Q_{l,R_T(s);T} Psi_l(u)`` for ``|u| <= mt``.
    """
    T = grid.T
    if T > MAX_DENSE_T:
        raise MemoryError(f"dense covariance limited to T <= {MAX_DENSE_T}")
    if mt < 0 or window < 1:
        raise ValueError("mt must be >= 0 and window >= 1")
    local = _local_q(grid, c2, seed, window)
    psi = AutocorrSystem.build(grid.J).matrix(np.arange(0, mt + 1))   # J x (mt+1)
    band = psi.T @ local                                                # (mt+1) x T
    cov = np.zeros((T, T))
    idx = np.arange(T)
    cov[idx, idx] = band[0]
    for u in range(1, min(mt, T - 1) + 1):
        s = idx[:-u]
        cov[s, s + u] = band[u, :-u]
        cov[s + u, s] = band[u, u:]
    return 0.5 * (cov + cov.T)


def plugin_covariance(grid, s, u, mt=2, window=9, c2=0.0, seed=0):
    """Single entry ``sigma~_{s,s+u}`` of the plug-in covariance (before symmetrising)."""
    if abs(u) > mt:
        return 0.0
    lo, hi = window_bounds(s, grid.T, window)
    system = AutocorrSystem.build(grid.J)
    total = 0.0
    for i in range(1, grid.J + 1):
        z = regularization_noise(-i, grid.T, c2, seed)[lo:hi]
        q = float(np.mean(grid.row(-i)[lo:hi] + z))
        total += q * system.psi(-i, u)
    return total


def plugin_variance(grid, j, R, mt=2, window=9, c2=0.0, seed=0, gram=None):
    """``sigma~^2_{j,R;T}``: the variance formula evaluated at the plug-in covariance."""
    R = _interval(R)
    gram = gram or gram_matrix(grid.J)
    cov = plugin_covariance_matrix(grid, mt, window, c2, seed)
    quad = max(interval_quadratic(cov, gram, j, R), 0.0)
    return quad + c2 * 2.0 ** j / R.count


def support_margin(J):
    """Widest wavelet support among ``J`` scales."""
    return support_length(-J)
