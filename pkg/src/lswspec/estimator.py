"""Scikit-learn style front end for the adaptive spectrum estimator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .adaptive import AdaptiveConfig, ScaleContext, default_z0, estimate_spectrum, select_interval
from .nuisance import estimate_nuisance
from .periodogram import periodogram
from .process import MIN_T, max_scales

__all__ = ["LSWSpectrumEstimator", "check_series", "check_z0", "resolve_c2"]


def check_series(X):
    """Validate a univariate series given as ``(T,)`` or ``(T, 1)``; returns ``(T,)``."""
    arr = check_array(X, ensure_2d=False, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single series, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if arr.size < MIN_T:
        raise ValueError(f"series must have at least {MIN_T} points, got {arr.size}")
    return arr


def check_z0(z0):
    z = np.atleast_1d(np.asarray(z0, dtype=np.float64)).ravel()
    if not np.all(np.isfinite(z)) or np.any((z <= 0.0) | (z >= 1.0)):
        raise ValueError("rescaled times must lie in (0, 1)")
    return z


def resolve_c2(grid, cfg):
    """``cfg.c2`` if set, otherwise the data-driven constant from the nuisance estimates."""
    if cfg.c2 is not None:
        return float(cfg.c2), None
    nuisance = estimate_nuisance(grid, c2_scale=cfg.c2_scale)
    return nuisance.c2, nuisance


class LSWSpectrumEstimator(BaseEstimator):
    """Pointwise adaptive estimate of the evolutionary wavelet spectrum.

    ``fit`` takes one series and computes the corrected periodogram,
    nuisance estimates, and the adaptive estimates on ``z0`` for every
    scale in ``scales``.  ``predict`` evaluates the estimate at new
    rescaled times; ``transform`` returns the fitted table as an array of
    shape ``(len(z0), len(scales))``.

    Parameters
    ----------
    scales : tuple of int
        Negative scales to estimate.
    z0 : array-like, optional
        Rescaled estimation times; 39 equispaced points by default.
    seed : int
        Key of the regularization noise.
    eta_scale, kt, delta_points, grid_ratio, mt, window, c2, c2_scale,
    variance_mode, selection :
        See :class:`lswspec.adaptive.AdaptiveConfig`.
    """

    def __init__(self, scales=(-1, -2, -3, -4), z0=None, seed=0, eta_scale=0.004, kt=None,
                 delta_points=32, grid_ratio=1.4, mt=2, window=9, c2=None, c2_scale=1e-4,
                 variance_mode="plugin", selection="exhaustive"):
        self.scales = scales
        self.z0 = z0
        self.seed = seed
        self.eta_scale = eta_scale
        self.kt = kt
        self.delta_points = delta_points
        self.grid_ratio = grid_ratio
        self.mt = mt
        self.window = window
        self.c2 = c2
        self.c2_scale = c2_scale
        self.variance_mode = variance_mode
        self.selection = selection

    def _config(self):
        return AdaptiveConfig(kt=self.kt, eta_scale=self.eta_scale, delta_points=self.delta_points,
                              grid_ratio=self.grid_ratio, c2=self.c2, c2_scale=self.c2_scale,
                              mt=self.mt, window=self.window, variance_mode=self.variance_mode,
                              selection=self.selection)

    def fit(self, X, y=None, cov=None):
        """Estimate the spectrum of the series ``X``.

        ``cov`` is the true covariance, needed only with
        ``variance_mode="exact-oracle"``.
        """
        x = check_series(X)
        cfg = self._config()
        scales = [int(j) for j in self.scales]
        J = max_scales(x.size)
        for j in scales:
            if not -J <= j <= -1:
                raise ValueError(f"scale {j} outside -1..-{J} for T = {x.size}")
        z0 = check_z0(default_z0() if self.z0 is None else self.z0)
        self.config_ = cfg
        self.periodogram_ = periodogram(x)
        self.c2_, self.nuisance_ = resolve_c2(self.periodogram_, cfg)
        self.cov_ = cov
        self.estimates_ = estimate_spectrum(self.periodogram_, scales, z0, self.c2_, self.seed,
                                            cfg, cov)
        self.n_samples_ = x.size
        self._contexts = {}
        return self

    def _context(self, j):
        if j not in self._contexts:
            self._contexts[j] = ScaleContext.build(self.periodogram_, j, self.c2_, self.seed,
                                                   self.config_, self.cov_)
        return self._contexts[j]

    def predict(self, z0):
        """Adaptive estimates at ``z0``; shape ``(len(z0), len(scales))``."""
        check_is_fitted(self, "estimates_")
        z = check_z0(z0)
        out = np.empty((z.size, len(self.scales)))
        for c, j in enumerate(self.scales):
            ctx = self._context(int(j))
            for r, zz in enumerate(z):
                out[r, c] = select_interval(ctx, float(zz), self.config_, keep_trace=False).value
        return out

    def transform(self, X=None):
        """Fitted estimates on the ``z0`` grid; shape ``(len(z0), len(scales))``."""
        check_is_fitted(self, "estimates_")
        cols = [self.estimates_.values(int(j))[1] for j in self.scales]
        return np.column_stack(cols)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform()
