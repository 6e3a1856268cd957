"""Monte Carlo evaluation of the adaptive estimator against a known spectrum.

Replication ``r`` uses seed ``seed + r`` for both the simulated path and the
regularization noise, so any subset of a run can be reproduced on its own.
Replications may run on several threads; results are always reduced in
replication order, which keeps the output bit-stable.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adaptive import AdaptiveConfig, default_z0, estimate_spectrum
from .estimator import check_z0, resolve_c2
from .periodogram import _window_means, periodogram
from .process import covariance_matrix, simulate

__all__ = ["Replication", "MetricsReport", "baseline_window", "running_mean_baseline",
           "run_replication", "summarize", "run_montecarlo"]


def baseline_window(T):
    """Window of the naive running-mean baseline, ``round(sqrt(T) / 2)``."""
    return max(1, int(round(math.sqrt(T) / 2.0)))


def running_mean_baseline(grid, j, z0, window=None):
    """Centred running mean of the corrected row ``j`` evaluated at ``floor(z0 T)``."""
    T = grid.T
    window = baseline_window(T) if window is None else int(window)
    means = _window_means(grid.row(j), T, window)
    k = np.minimum(np.floor(np.asarray(z0) * T).astype(np.int64), T - 1)
    return means[k]


@dataclass(frozen=True, eq=False)
class Replication:
    index: int
    seed: int
    adaptive: np.ndarray = field(repr=False)
    baseline: np.ndarray = field(repr=False)
    c2: float = 0.0


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Aggregate errors over replications and per-point quantile bands.

    ``mse``/``mad`` refer to the adaptive estimator; ``baseline_mse`` and
    ``baseline_mad`` to the running mean.  ``q05``/``q95`` are the lower and
    upper order statistics bracketing 5% and 95%, so with two replications
    they are the minimum and maximum.
    """

    mse: float
    mad: float
    z0: np.ndarray = field(repr=False)
    median: np.ndarray = field(repr=False)
    q05: np.ndarray = field(repr=False)
    q95: np.ndarray = field(repr=False)
    runtime: float = 0.0
    baseline_mse: float = float("nan")
    baseline_mad: float = float("nan")
    replications: int = 0

    def __post_init__(self):
        if self.mse < 0 or self.mad < 0:
            raise ValueError("error metrics must be non-negative")
        if np.any(self.q05 > self.median) or np.any(self.median > self.q95):
            raise ValueError("quantiles out of order")

    def per_point(self):
        return list(zip(self.z0.tolist(), self.median.tolist(), self.q05.tolist(),
                        self.q95.tolist()))


def run_replication(spec, T, seed, r, j, z0, cfg, cov=None):
    """Simulate one path with seed ``seed + r`` and estimate scale ``j`` on ``z0``."""
    s = int(seed) + int(r)
    x = simulate(spec, T, s).values
    grid = periodogram(x)
    c2, _ = resolve_c2(grid, cfg)
    est = estimate_spectrum(grid, [j], z0, c2, s, cfg, cov)
    return Replication(int(r), s, est.shat.copy(), running_mean_baseline(grid, j, z0), c2)


def summarize(replications, truth, z0, runtime=0.0):
    """Reduce replications (sorted by index) into a :class:`MetricsReport`."""
    reps = sorted(replications, key=lambda rep: rep.index)
    if len(reps) < 1:
        raise ValueError("no replications")
    est = np.vstack([rep.adaptive for rep in reps])
    base = np.vstack([rep.baseline for rep in reps])
    err = est - truth
    berr = base - truth
    return MetricsReport(
        mse=float(np.mean(err ** 2)), mad=float(np.mean(np.abs(err))), z0=np.asarray(z0, float),
        median=np.median(est, axis=0),
        q05=np.quantile(est, 0.05, axis=0, method="lower"),
        q95=np.quantile(est, 0.95, axis=0, method="higher"),
        runtime=float(runtime), baseline_mse=float(np.mean(berr ** 2)),
        baseline_mad=float(np.mean(np.abs(berr))), replications=len(reps))


def run_montecarlo(spec, T, reps, seed=0, j=-1, z0=None, cfg=None, threads=1):
    """Run ``reps`` replications of simulate + estimate and aggregate them.

    Parameters
    ----------
    spec : SpectrumSpec
        True spectrum; also provides the oracle covariance when
        ``cfg.variance_mode == "exact-oracle"``.
    T, reps, seed : int
        Series length, number of replications (at least 2) and base seed.
    j : int
        Scale to evaluate.
    z0 : array-like, optional
        Estimation points; 39 equispaced points by default.
    cfg : AdaptiveConfig, optional
    threads : int
        Worker threads; the result does not depend on it.
    """
    cfg = cfg or AdaptiveConfig()
    if int(reps) < 2:
        raise ValueError("montecarlo needs at least 2 replications")
    if int(threads) < 1:
        raise ValueError("threads must be >= 1")
    z0 = check_z0(default_z0() if z0 is None else z0)
    cov = covariance_matrix(spec, T) if cfg.variance_mode == "exact-oracle" else None
    truth = spec.evaluate(j, z0)
    start = time.perf_counter()

    def one(r):
        return run_replication(spec, T, seed, r, j, z0, cfg, cov)

    if threads == 1:
        results = [one(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(one, range(reps)))
    return summarize(results, truth, z0, time.perf_counter() - start)
