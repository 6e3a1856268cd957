"""Pointwise adaptive interval selection.

For a target time ``z0`` the candidate intervals are built from geometric
cut points around ``k0 = floor(z0 T)``.  An interval ``R`` is rejected as
soon as one sub-interval ``U`` disagrees with it::

    |Q_R - Q_U| > 2 eta (sigma_R + sigma_U) k_T

and the estimate at ``z0`` is the average over the longest interval that
survives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .periodogram import (TimeInterval, VarianceTable, plugin_covariance_matrix,
                          regularization_noise)
from .wavelets import gram_matrix

__all__ = [
    "AdaptiveConfig",
    "CandidateGrids",
    "TestRecord",
    "AdaptiveEstimate",
    "EstimateGrid",
    "ScaleContext",
    "build_grids",
    "homogeneity_reject",
    "interval_rejected",
    "select_interval",
    "estimate_spectrum",
    "default_z0",
]

VARIANCE_MODES = ("plugin", "exact-oracle")
SELECTIONS = ("exhaustive", "sequential")


@dataclass(frozen=True)
class AdaptiveConfig:
    """Tuning of the adaptive estimator.

    ``eta`` and ``kt`` left as ``None`` resolve to
    ``eta_scale * 2^{-j/2} * 5 (2 alpha + p)`` and ``log2 T``.
    """

    kt: float | None = None
    eta: float | None = None
    eta_scale: float = 0.004
    alpha: float = 0.5
    p: float = 2.0
    delta_points: int = 32
    grid_ratio: float = 1.4
    c2: float | None = None
    c2_scale: float = 1e-4
    mt: int = 2
    window: int = 9
    variance_mode: str = "plugin"
    selection: str = "exhaustive"
    weight_tol: float = 1e-6

    def __post_init__(self):
        if self.kt is not None and not self.kt > 0:
            raise ValueError("kt must be positive")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.eta_scale > 0:
            raise ValueError("eta_scale must be positive")
        if not self.grid_ratio > 1:
            raise ValueError("grid_ratio must exceed 1")
        if self.delta_points < 1:
            raise ValueError("delta_points must be >= 1")
        if self.c2 is not None and self.c2 < 0:
            raise ValueError("c2 must be non-negative")
        if self.c2_scale < 0:
            raise ValueError("c2_scale must be non-negative")
        if self.mt < 0 or self.window < 1:
            raise ValueError("mt must be >= 0 and window >= 1")
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")

    def eta_for(self, j):
        if self.eta is not None:
            return float(self.eta)
        return self.eta_scale * 2.0 ** (-j / 2.0) * 5.0 * (2.0 * self.alpha + self.p)

    def kt_for(self, T):
        return float(self.kt) if self.kt is not None else math.log2(T)

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


@dataclass(frozen=True, eq=False)
class CandidateGrids:
    """Cut points and candidate sets around ``k0``.

    ``cuts`` are sorted interval endpoints (positions between samples);
    ``left``/``right`` are the offsets of the lower and upper cuts from
    ``k0`` and ``k0 + 1``.  ``lam`` lists ``Lambda`` as index pairs into
    ``cuts``; ``test_sets(R)`` gives the sub-intervals tested against ``R``.
    """

    z0: float
    T: int
    k0: int
    delta: int
    left: tuple
    right: tuple
    cuts: np.ndarray = field(repr=False)
    lam: tuple = field(repr=False)

    def interval(self, pair):
        a, b = pair
        return TimeInterval(int(self.cuts[a]), int(self.cuts[b]))

    @property
    def intervals(self):
        return [self.interval(p) for p in self.lam]

    def test_sets(self, pair):
        """Index pairs of ``U`` in ``P(R)``: proper sub-intervals with cut endpoints, length >= delta."""
        a, b = pair
        out = []
        for u in range(a, b):
            for v in range(u + 1, b + 1):
                if (u, v) != (a, b) and self.cuts[v] - self.cuts[u] >= self.delta:
                    out.append((u, v))
        return out


def _offsets(delta, ratio, limit):
    out = [0]
    i = 0
    while True:
        d = int(math.ceil(delta * ratio ** i))
        if d > out[-1]:
            if d >= limit:
                out.append(limit)
                break
            out.append(d)
        i += 1
    return out


def build_grids(z0, T, cfg=None):
    """Geometric candidate grids around ``k0 = floor(z0 T)``.

    Lower cuts sit at ``k0 - d`` and upper cuts at ``k0 + 1 + d`` for
    ``d in {0} U {ceil(delta * ratio^i)}``, clipped to ``[0, T]``.
    ``Lambda`` holds every ``[lo, hi)`` with a lower and an upper cut and at
    least ``delta`` points; when no candidate is that long the widest one
    is kept alone.
    """
    cfg = cfg or AdaptiveConfig()
    if not 0.0 < z0 < 1.0:
        raise ValueError(f"z0 must lie in (0, 1), got {z0}")
    T = int(T)
    k0 = min(int(math.floor(z0 * T)), T - 1)
    delta = int(cfg.delta_points)
    left = _offsets(delta, cfg.grid_ratio, k0)
    right = _offsets(delta, cfg.grid_ratio, T - 1 - k0)
    lows = sorted({k0 - d for d in left})
    highs = sorted({k0 + 1 + d for d in right})
    cuts = np.array(sorted(set(lows) | set(highs)), dtype=np.int64)
    index = {int(c): i for i, c in enumerate(cuts)}
    lam = [(index[lo], index[hi]) for lo in lows for hi in highs if hi - lo >= delta]
    if not lam:
        lam = [(index[lows[0]], index[highs[-1]])]
    return CandidateGrids(float(z0), T, k0, delta, tuple(left), tuple(right), cuts, tuple(lam))


@dataclass(frozen=True)
class TestRecord:
    R: TimeInterval
    U: TimeInterval
    statistic: float
    threshold: float
    rejected: bool


def homogeneity_reject(qR, qU, eta, kt):
    """Pairwise test of ``R`` against a sub-interval ``U``; returns a :class:`TestRecord`."""
    if qR.j != qU.j:
        raise ValueError("estimates are at different scales")
    if qR.sigma2 is None or qU.sigma2 is None or qR.sigma2 <= 0 or qU.sigma2 <= 0:
        raise ArithmeticError("variances must be positive")
    stat = abs(qR.q - qU.q)
    thr = 2.0 * eta * (math.sqrt(qR.sigma2) + math.sqrt(qU.sigma2)) * kt
    return TestRecord(qR.interval, qU.interval, stat, thr, bool(stat > thr))


@dataclass(frozen=True, eq=False)
class AdaptiveEstimate:
    j: int
    z0: float
    selected: TimeInterval
    value: float
    sigma2: float
    trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class ScaleContext:
    """Per-scale quantities shared by every ``z0``: regularized row and variances."""

    j: int
    T: int
    values: np.ndarray = field(repr=False)      # L_j + z_j
    variance: VarianceTable = field(repr=False)
    c2: float = 0.0

    @classmethod
    def build(cls, grid, j, c2, seed, cfg=None, cov=None, gram=None):
        """Regularized row and variance table for scale ``j``.

        ``cov`` is required in ``exact-oracle`` mode; in plugin mode it is
        built from the grid unless given.
        """
        cfg = cfg or AdaptiveConfig()
        gram = gram or gram_matrix(grid.J)
        if cov is None:
            if cfg.variance_mode == "exact-oracle":
                raise ValueError("exact-oracle variances need the true covariance")
            cov = plugin_covariance_matrix(grid, cfg.mt, cfg.window, c2, seed)
            band = min(cfg.mt, grid.T - 1)
        else:
            band = None
        source = "exact-oracle" if cfg.variance_mode == "exact-oracle" else "plugin"
        table = VarianceTable(cov, gram, j, c2, source=source, weight_tol=cfg.weight_tol, band=band)
        values = grid.row(j) + regularization_noise(j, grid.T, c2, seed)
        return cls(j, grid.T, values, table, c2)

    def stats(self, cuts):
        """``Q`` and ``sigma`` for every pair of cuts (``nan`` where ``lo >= hi``)."""
        c = np.concatenate(([0.0], np.cumsum(self.values)))
        lo = cuts[:, None]
        hi = cuts[None, :]
        ok = hi > lo
        n = np.where(ok, hi - lo, 1)
        q = np.where(ok, (c[hi] - c[lo]) / n, np.nan)
        s2 = np.where(ok, self.variance.sigma2(np.where(ok, lo, 0), np.where(ok, hi, 1)), np.nan)
        return q, np.sqrt(s2)


def _tie_key(grids, pair):
    lo, hi = int(grids.cuts[pair[0]]), int(grids.cuts[pair[1]])
    return (-(hi - lo), abs((hi - 1 - grids.k0) - (grids.k0 - lo)), lo)


def _test_pair(grids, q, sigma, pair, eta, kt, trace=None):
    a, b = pair
    lengths = grids.cuts[None, :] - grids.cuts[:, None]
    sub = np.zeros_like(lengths, dtype=bool)
    sub[a:b + 1, a:b + 1] = True
    sub &= lengths >= grids.delta
    sub[a, b] = False
    if not sub.any():
        return False
    stat = np.abs(q[a, b] - q[sub])
    thr = 2.0 * eta * (sigma[a, b] + sigma[sub]) * kt
    rej = stat > thr
    if trace is not None:
        R = grids.interval(pair)
        us, vs = np.nonzero(sub)
        for u, v, s, t, r in zip(us, vs, stat, thr, rej):
            trace.append(TestRecord(R, grids.interval((u, v)), float(s), float(t), bool(r)))
    return bool(rej.any())


def interval_rejected(context, grids, pair, cfg=None):
    """Whether the candidate ``pair`` of ``grids`` fails the homogeneity test.

    ``R`` is tested against every sub-interval in ``grids.test_sets(pair)``.
    """
    cfg = cfg or AdaptiveConfig()
    if pair not in grids.lam:
        raise ValueError(f"{pair} is not a candidate interval")
    q, sigma = context.stats(grids.cuts)
    return _test_pair(grids, q, sigma, pair, cfg.eta_for(context.j), cfg.kt_for(context.T))


def select_interval(context, z0, cfg=None, keep_trace=True, grids=None):
    """Largest homogeneous interval around ``z0`` at the scale of ``context``.

    Parameters
    ----------
    context : ScaleContext
        Regularized periodogram row and variance table of the scale.
    z0 : float
        Target rescaled time in ``(0, 1)``.
    cfg : AdaptiveConfig
        ``selection="exhaustive"`` returns the longest non-rejected element
        of ``Lambda``; ``"sequential"`` grows through ``Lambda`` by length
        and stops at the first rejection.  When every candidate is rejected
        the shortest one is returned: homogeneity there is assumed.
    keep_trace : bool
        Record every pairwise test in ``trace``.
    """
    cfg = cfg or AdaptiveConfig()
    T = context.T
    grids = grids or build_grids(z0, T, cfg)
    if not grids.lam:
        raise ValueError("empty candidate set")
    q, sigma = context.stats(grids.cuts)
    eta = cfg.eta_for(context.j)
    kt = cfg.kt_for(T)
    keys = {pair: _tie_key(grids, pair) for pair in grids.lam}
    order = sorted(grids.lam, key=keys.get)          # longest first, ties broken
    by_length = sorted(grids.lam, key=lambda p: (-keys[p][0],) + keys[p][1:])
    trace = [] if keep_trace else None

    def rejected(pair):
        return _test_pair(grids, q, sigma, pair, eta, kt, trace)

    if cfg.selection == "exhaustive":
        chosen = None
        for pair in order:
            if not rejected(pair):
                chosen = pair
                break
        if chosen is None:
            chosen = by_length[0]
    else:
        chosen = by_length[0]
        for pair in by_length[1:]:
            if rejected(pair):
                break
            if keys[pair][0] < keys[chosen][0]:     # strictly longer; equal length keeps the
                chosen = pair                       # first, i.e. the most symmetric
    a, b = chosen
    return AdaptiveEstimate(context.j, float(z0), grids.interval(chosen), float(q[a, b]),
                            float(sigma[a, b] ** 2), tuple(trace or ()))


def default_z0(n=39):
    """``n`` equispaced interior points ``i / (n + 1)``."""
    return [i / (n + 1) for i in range(1, n + 1)]


@dataclass(frozen=True, eq=False)
class EstimateGrid:
    """Adaptive estimates per ``(scale, z0)``, in scale-major order."""

    scale: np.ndarray
    z0: np.ndarray
    shat: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    sigma2: np.ndarray
    c2: float = 0.0

    def __len__(self):
        return int(self.scale.size)

    def rows(self):
        for i in range(len(self)):
            yield (int(self.scale[i]), float(self.z0[i]), float(self.shat[i]),
                   int(self.lo[i]), int(self.hi[i]), float(self.sigma2[i]))

    def values(self, j):
        mask = self.scale == j
        return self.z0[mask], self.shat[mask]

    @classmethod
    def from_estimates(cls, estimates, c2=0.0):
        est = list(estimates)
        return cls(np.array([e.j for e in est], dtype=np.int64),
                   np.array([e.z0 for e in est], dtype=float),
                   np.array([e.value for e in est], dtype=float),
                   np.array([e.selected.lo for e in est], dtype=np.int64),
                   np.array([e.selected.hi for e in est], dtype=np.int64),
                   np.array([e.sigma2 for e in est], dtype=float),
                   float(c2))


def estimate_spectrum(grid, scales, z0s, c2, seed, cfg=None, cov=None):
    """Run :func:`select_interval` for every ``(scale, z0)``.

    ``cov`` is the true covariance for ``exact-oracle`` mode.  Traces are
    not kept.
    """
    cfg = cfg or AdaptiveConfig()
    z0s = [float(z) for z in z0s]
    for z in z0s:
        if not 0.0 < z < 1.0:
            raise ValueError(f"z0 must lie in (0, 1), got {z}")
    out = []
    if z0s:
        grids = [build_grids(z, grid.T, cfg) for z in z0s]
        for j in scales:
            ctx = ScaleContext.build(grid, j, c2, seed, cfg, cov)
            out.extend(select_interval(ctx, z, cfg, keep_trace=False, grids=g)
                       for z, g in zip(z0s, grids))
    return EstimateGrid.from_estimates(out, c2)
