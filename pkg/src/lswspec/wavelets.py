"""Discrete nondecimated Haar wavelets, autocorrelation wavelets and the
Gram matrix of the autocorrelation system.

Scales follow the negative numbering convention: ``j = -1`` is the finest
detail scale, ``j = -2`` the next coarser one and so on.  Internally scale
``j`` is stored at zero-based position ``-j - 1``; use :func:`scale_position`
rather than doing the arithmetic inline.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "GramInversionError",
    "GramMatrix",
    "AutocorrSystem",
    "support_length",
    "scale_position",
    "haar_wavelet",
    "autocorrelation_wavelet",
    "autocorrelation_table",
    "gram_matrix",
    "check_delta_identity",
    "check_inverse_rowsum",
    "check_symmetry",
]

GRAM_RESIDUAL_TOL = 1e-8


class GramInversionError(ArithmeticError):
    """Raised when the numerical inverse of the Gram matrix is not accurate."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number


def _check_scale(j):
    j = int(j)
    if j >= 0:
        raise ValueError(f"scale must be a negative integer, got {j}")
    return j


def scale_position(j):
    """Zero-based storage position of scale ``j`` (``-1 -> 0``)."""
    return -_check_scale(j) - 1


def support_length(j):
    """Length of the support of the Haar wavelet at scale ``j``: ``2**-j``."""
    return 2 ** (-_check_scale(j))


@lru_cache(maxsize=None)
def _haar(j):
    n = support_length(j)
    values = np.full(n, 2.0 ** (j / 2.0))
    values[n // 2:] *= -1.0
    values.setflags(write=False)
    return values


def haar_wavelet(j):
    """Values of the Haar wavelet ``psi_{j0}`` at offsets ``0..L_j-1``.

    The shifted wavelets are obtained by index offset,
    ``psi_{jk}(t) = psi_{j0}[k - t]``.

    >>> haar_wavelet(-2)
    array([ 0.5,  0.5, -0.5, -0.5])
    """
    return _haar(_check_scale(j)).copy()


@lru_cache(maxsize=None)
def _autocorr(j):
    # Haar taps are +-2^{j/2}, so every product is exactly +-2^j: correlate the
    # integer sign pattern and scale once, which keeps the table exact.
    signs = np.sign(_haar(j)).astype(np.int64)
    table = np.correlate(signs, signs, mode="full") * 2.0 ** j
    table.setflags(write=False)
    return table


def autocorrelation_table(j):
    """``Psi_j(tau)`` for ``tau = -(L_j-1) .. L_j-1`` (centre at index ``L_j-1``)."""
    return _autocorr(_check_scale(j)).copy()


def autocorrelation_wavelet(j, tau):
    """Autocorrelation wavelet ``Psi_j(tau) = sum_k psi_{jk}(0) psi_{jk}(tau)``.

    Accepts scalar or array ``tau``; zero outside the support.
    """
    table = _autocorr(_check_scale(j))
    half = support_length(j) - 1
    tau = np.asarray(tau)
    idx = tau.astype(np.int64) + half
    inside = np.abs(tau) <= half
    out = np.where(inside, table[np.clip(idx, 0, 2 * half)], 0.0)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class AutocorrSystem:
    """Precomputed autocorrelation wavelet tables for scales ``-1..-J``.

    ``tables[i]`` holds scale ``-(i+1)`` centred at index ``L - 1``.
    """

    J: int
    tables: tuple = field(repr=False)

    @classmethod
    def build(cls, J):
        if J < 1:
            raise ValueError("J must be >= 1")
        return cls(J, tuple(_autocorr(-i) for i in range(1, J + 1)))

    def psi(self, j, tau):
        table = self.tables[scale_position(j)]
        half = (len(table) - 1) // 2
        tau = np.asarray(tau)
        inside = np.abs(tau) <= half
        out = np.where(inside, table[np.clip(tau.astype(np.int64) + half, 0, 2 * half)], 0.0)
        return float(out) if out.ndim == 0 else out

    def matrix(self, taus):
        """``J x len(taus)`` array with entries ``Psi_j(tau)``."""
        taus = np.asarray(taus)
        return np.vstack([self.psi(-i, taus) for i in range(1, self.J + 1)])


def _inner(t1, t2):
    # both tables are symmetric and centred; align on tau = 0
    h1, h2 = (len(t1) - 1) // 2, (len(t2) - 1) // 2
    h = min(h1, h2)
    return float(np.dot(t1[h1 - h:h1 + h + 1], t2[h2 - h:h2 + h + 1]))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Gram matrix ``A_{jl} = <Psi_j, Psi_l>`` for scales ``-1..-J`` and its inverse."""

    J: int
    a: np.ndarray = field(repr=False)
    a_inv: np.ndarray = field(repr=False)
    condition_number: float

    def inv_row(self, j):
        """Row of ``A^{-1}`` for scale ``j`` (the correction weights)."""
        return self.a_inv[scale_position(j)].copy()


@lru_cache(maxsize=32)
def _gram(J, system):
    tables = system.tables if system is not None else AutocorrSystem.build(J).tables
    a = np.empty((J, J))
    for p in range(J):
        for q in range(p, J):
            a[p, q] = a[q, p] = _inner(tables[p], tables[q])
    cond = float(np.linalg.cond(a))
    # LAPACK gesv: LU with partial pivoting
    try:
        a_inv = np.linalg.solve(a, np.eye(J))
    except np.linalg.LinAlgError:
        raise GramInversionError(f"Gram matrix is singular (condition number {cond:.3e})",
                                 cond) from None
    residual = float(np.max(np.abs(a @ a_inv - np.eye(J))))
    if not np.isfinite(residual) or residual > GRAM_RESIDUAL_TOL:
        raise GramInversionError(
            f"Gram matrix inverse residual {residual:.3e} exceeds {GRAM_RESIDUAL_TOL:g} "
            f"(condition number {cond:.3e})",
            cond,
        )
    a.setflags(write=False)
    a_inv.setflags(write=False)
    return GramMatrix(J, a, a_inv, cond)


def gram_matrix(J, system=None):
    """Build the Gram matrix of the autocorrelation wavelets for ``J`` scales.

    Parameters
    ----------
    J : int
        Number of scales, ``J >= 1``.
    system : AutocorrSystem, optional
        Tables to use instead of the cached Haar ones.  Mainly useful for
        fault-injection tests.

    Raises
    ------
    GramInversionError
        If ``max |A A^{-1} - I| > 1e-8``.
    """
    J = int(J)
    if J < 1:
        raise ValueError("J must be >= 1")
    if system is not None and system.J < J:
        raise ValueError("autocorrelation system has fewer scales than requested")
    return _gram(J, system)


def check_delta_identity(J, tau_max, system=None):
    """Max over ``|tau| <= tau_max`` of ``|sum_{j=-J}^{-1} 2^j Psi_j(tau) - delta_0(tau)|``."""
    system = system or AutocorrSystem.build(J)
    taus = np.arange(-tau_max, tau_max + 1)
    weights = 2.0 ** -np.arange(1, J + 1)
    partial = weights @ system.matrix(taus)[:J]
    delta = (taus == 0).astype(float)
    return float(np.max(np.abs(partial - delta)))


def check_inverse_rowsum(J):
    """Per-scale deviation ``|sum_l (A^{-1})_{jl} - 2^j|`` for ``j = -1..-J``."""
    g = gram_matrix(J)
    return np.abs(g.a_inv.sum(axis=1) - 2.0 ** -np.arange(1, J + 1))


def check_symmetry(system):
    """Max of ``|Psi_j(tau) - Psi_j(-tau)|`` over all scales in ``system``."""
    return max(float(np.max(np.abs(t - t[::-1]))) for t in system.tables)
