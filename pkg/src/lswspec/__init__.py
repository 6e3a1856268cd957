"""Locally stationary wavelet processes: simulation and adaptive spectrum estimation.

The main entry points are

* :class:`~lswspec.spectrum.SpectrumSpec` and :mod:`lswspec.specfile` to
  declare an evolutionary wavelet spectrum,
* :func:`~lswspec.process.simulate` to draw a path,
* :func:`~lswspec.periodogram.periodogram` for the corrected wavelet
  periodogram,
* :class:`~lswspec.estimator.LSWSpectrumEstimator` for the pointwise
  adaptive estimate.
"""
from .adaptive import AdaptiveConfig, estimate_spectrum, select_interval
from .estimator import LSWSpectrumEstimator
from .montecarlo import run_montecarlo
from .periodogram import averaged_estimator, exact_variance, periodogram, plugin_variance
from .process import covariance_matrix, simulate
from .spectrum import SpectrumSpec
from .wavelets import AutocorrSystem, gram_matrix

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "AutocorrSystem",
    "LSWSpectrumEstimator",
    "SpectrumSpec",
    "averaged_estimator",
    "covariance_matrix",
    "estimate_spectrum",
    "exact_variance",
    "gram_matrix",
    "periodogram",
    "plugin_variance",
    "run_montecarlo",
    "select_interval",
    "simulate",
]
