"""Nuisance quantities for the adaptive estimator: a smoothed corrected
periodogram, the autocovariance norm ``||c||_{1,inf}``, per-scale total
variation and the regularization constant ``C^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .periodogram import _window_means, u_matrix
from .wavelets import AutocorrSystem, gram_matrix, support_length

__all__ = [
    "NuisanceEstimates",
    "default_bandwidth",
    "smoothed_periodogram",
    "local_autocovariance_estimate",
    "c_norm_estimate",
    "zigzag_variation",
    "block_means",
    "tv_estimate",
    "k2_squared",
    "measured_k2_squared",
    "regularization_constant",
    "estimate_nuisance",
]


@dataclass(frozen=True, eq=False)
class NuisanceEstimates:
    """Estimated ``cNorm``, ``TV(S_j)`` per scale and the derived ``C^2``."""

    c_norm: float
    tv: dict = field(default_factory=dict)
    c2: float = 0.0
    bandwidth: int = 1
    smooth: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.c_norm < 0 or self.c2 < 0 or any(v < 0 for v in self.tv.values()):
            raise ValueError("nuisance estimates must be non-negative")


def default_bandwidth(T):
    """Running-mean bandwidth ``round(sqrt(T) / 2)``, at least 1."""
    return max(1, int(round(math.sqrt(T) / 2.0)))


def smoothed_periodogram(grid, bandwidth):
    """``L*``: centred running mean of every corrected row, clipped at zero."""
    if bandwidth < 1:
        raise ValueError("bandwidth must be >= 1")
    out = np.vstack([_window_means(grid.row(-i), grid.T, bandwidth) for i in range(1, grid.J + 1)])
    return np.maximum(out, 0.0)


def local_autocovariance_estimate(grid, bandwidth, taus):
    """``c^(s, u) = sum_j Lbar_j(s) Psi_j(u)`` for every time ``s`` (columns).

    ``Lbar`` is the unclipped running mean: the sum over scales cancels
    most of the noise of the individual rows, which clipping would destroy.
    """
    rows = np.vstack([_window_means(grid.row(-i), grid.T, bandwidth) for i in range(1, grid.J + 1)])
    return AutocorrSystem.build(grid.J).matrix(taus).T @ rows


def c_norm_estimate(grid, bandwidth, u_max=None, lag_threshold=3.0):
    """``sup_s sum_{|u| <= u_max} |c^(s, u)|`` with noisy lags dropped.

    A lag ``u != 0`` only counts at time ``s`` when ``|c^(s, u)|`` exceeds
    ``lag_threshold`` times ``|c^(s, 0)| sqrt(2 / bandwidth)``, the noise
    level of a local product average over ``bandwidth`` points.
    """
    if u_max is None:
        u_max = 2 * support_length(-grid.J)
    u_max = min(int(u_max), grid.T - 1)
    taus = np.arange(-u_max, u_max + 1)
    c = local_autocovariance_estimate(grid, bandwidth, taus)
    se = np.abs(c[u_max]) * math.sqrt(2.0 / bandwidth)
    keep = (np.abs(c) > lag_threshold * se) | (taus[:, None] == 0)
    return float(np.max(np.sum(np.abs(c) * keep, axis=0)))


def zigzag_variation(values, threshold, shrink=0.0):
    """Total variation of ``values`` counted over swings larger than ``threshold``.

    Alternating extrema are tracked with hysteresis: a new extremum is only
    registered once the path has moved ``threshold`` away from the previous
    one, so smaller wiggles are ignored.  Every confirmed swing is reduced
    by ``shrink`` (floored at zero), which offsets the overshoot of noisy
    extrema.  ``threshold = shrink = 0`` gives the plain total variation.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    swings = []
    anchor = hi = lo = v[0]
    direction = 0
    for x in v[1:]:
        if direction >= 0:
            hi = max(hi, x)
        if direction <= 0:
            lo = min(lo, x)
        if direction == 0:
            if hi - anchor > threshold:
                direction = 1
            elif anchor - lo > threshold:
                direction = -1
        elif direction == 1 and hi - x > threshold:
            swings.append(hi - anchor)
            anchor, lo, direction = hi, x, -1
        elif direction == -1 and x - lo > threshold:
            swings.append(anchor - lo)
            anchor, hi, direction = lo, x, 1
    # last, unconfirmed leg
    if direction == 1 and hi - anchor > threshold:
        swings.append(hi - anchor)
    elif direction == -1 and anchor - lo > threshold:
        swings.append(anchor - lo)
    return float(sum(max(w - shrink, 0.0) for w in swings))


def block_means(row, block):
    """Means over consecutive non-overlapping blocks (a short last block is dropped)."""
    n = max(1, len(row) // block)
    block = min(block, len(row))
    return np.asarray(row[:n * block], dtype=float).reshape(n, block).mean(axis=1)


def tv_estimate(row, block, threshold=2.0, shrink=1.0):
    """Total variation of a scale from block means of its corrected periodogram.

    Block means are clipped at zero; their noise level ``s`` is the robust
    spread of successive differences (pairs of exact zeros excluded).  Swings
    smaller than ``threshold * s`` are ignored and each counted swing is
    reduced by ``shrink * s``.
    """
    m = np.maximum(block_means(row, block), 0.0)
    d = np.diff(m)
    d = d[(m[1:] != 0) | (m[:-1] != 0)]
    if d.size == 0:
        return 0.0
    s = float(np.median(np.abs(d)) / 0.6745 / math.sqrt(2.0))
    return zigzag_variation(m, threshold * s, shrink * s)


def k2_squared(j, J):
    """``2^{-j} (A^{-1})_{jj}``: ``T |R|^2 ||U||^2 / 2^j`` for the full-length interval."""
    return 2.0 ** (-j) * float(gram_matrix(J).a_inv[-j - 1, -j - 1])


def measured_k2_squared(j, T, intervals, gram=None):
    """Largest ``||U_{j,R;T}||_F^2 |RT|^2 / (T 2^j)`` over the given intervals."""
    best = 0.0
    for lo, hi in intervals:
        U = u_matrix(j, (lo, hi), T, gram)
        best = max(best, float(np.sum(U * U)) * (hi - lo) ** 2 / (T * 2.0 ** j))
    return best


def regularization_constant(c_norm, J, scale=1.0):
    """``C^2 = scale * 2 K_2^2 cNorm^2`` with ``K_2^2`` taken at the finest scale."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    return float(scale * 2.0 * k2_squared(-1, J) * c_norm ** 2)


def estimate_nuisance(grid, bandwidth=None, norm_bandwidth=None, tv_block=None, u_max=None,
                      c2_scale=1.0):
    """Estimate ``cNorm``, ``TV(S_j)`` for every scale and ``C^2``.

    Parameters
    ----------
    grid : PeriodogramGrid
        Must carry the corrected periodogram.
    bandwidth : int, optional
        Running-mean length for ``L*``; ``round(sqrt(T)/2)`` by default.
    norm_bandwidth : int, optional
        Running-mean length behind the autocovariance norm; ``round(T/4)``
        by default.  The supremum over time is strongly inflated by noise
        at shorter lengths.
    tv_block : int, optional
        Block length for the total-variation estimate; ``round(3 sqrt(T))``.
    u_max : int, optional
        Lag cutoff for the autocovariance norm (``2 L_J`` by default).
    c2_scale : float
        Multiplier on ``2 K_2^2 cNorm^2`` giving ``C^2``.
    """
    T = grid.T
    bw = default_bandwidth(T) if bandwidth is None else int(bandwidth)
    nbw = max(1, int(round(T / 4))) if norm_bandwidth is None else int(norm_bandwidth)
    block = max(1, int(round(3 * math.sqrt(T)))) if tv_block is None else int(tv_block)
    if min(bw, nbw, block) < 1:
        raise ValueError("bandwidths must be >= 1")
    cn = c_norm_estimate(grid, nbw, u_max)
    tv = {-i: tv_estimate(grid.row(-i), block) for i in range(1, grid.J + 1)}
    return NuisanceEstimates(cn, tv, regularization_constant(cn, grid.J, c2_scale), bw,
                             smoothed_periodogram(grid, bw))
