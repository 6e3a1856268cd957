"""Evolutionary wavelet spectra: declaration, evaluation, total variation
and interval averages."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .wavelets import AutocorrSystem

__all__ = ["Piece", "Table", "SpectrumSpec"]


@dataclass(frozen=True)
class Piece:
    """``amp * sin^2(omega*pi*z + phase) + offset`` on ``[a, b)`` (or ``[a, b]``).

    A constant piece is stored with ``amp = 0``.
    """

    a: float
    b: float
    offset: float
    amp: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    closed: bool = False

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"piece interval [{self.a}, {self.b}) is not inside [0, 1]")
        if self.amp < 0 or self.offset < 0:
            raise ValueError("piece coefficients must be non-negative")

    @classmethod
    def constant(cls, a, b, c, closed=False):
        return cls(a, b, float(c), closed=closed)

    @property
    def is_constant(self):
        return self.amp == 0.0 or self.omega == 0.0

    def formula(self, z):
        z = np.asarray(z, dtype=float)
        if self.amp == 0.0:
            return np.full(z.shape, self.offset)
        return self.amp * np.sin(self.omega * math.pi * z + self.phase) ** 2 + self.offset

    def contains(self, z):
        z = np.asarray(z, dtype=float)
        upper = z <= self.b if self.closed else z < self.b
        return (z >= self.a) & upper

    def antiderivative(self, z):
        if self.is_constant:
            return (self.amp * math.sin(self.phase) ** 2 + self.offset) * z
        theta = self.omega * math.pi * z + self.phase
        return self.amp * (z / 2.0 - math.sin(2.0 * theta) / (4.0 * self.omega * math.pi)) + self.offset * z

    def integral(self, lo, hi):
        lo, hi = max(lo, self.a), min(hi, self.b)
        if hi <= lo:
            return 0.0
        return self.antiderivative(hi) - self.antiderivative(lo)

    def critical_points(self):
        """Interior extrema: where ``omega*pi*z + phase`` is a multiple of ``pi/2``."""
        if self.is_constant:
            return []
        t0 = self.omega * math.pi * self.a + self.phase
        t1 = self.omega * math.pi * self.b + self.phase
        lo, hi = sorted((t0, t1))
        m0 = math.floor(lo / (math.pi / 2)) + 1
        pts = []
        m = m0
        while m * math.pi / 2 < hi:
            pts.append((m * math.pi / 2 - self.phase) / (self.omega * math.pi))
            m += 1
        return sorted(p for p in pts if self.a < p < self.b)

    def variation(self):
        """Exact total variation of the formula over the piece."""
        pts = [self.a] + self.critical_points() + [self.b]
        vals = self.formula(np.array(pts))
        return float(np.sum(np.abs(np.diff(vals))))

    def to_text(self):
        close = "]" if self.closed else ")"
        head = f"[{self.a!r}, {self.b!r}{close}"
        if self.amp == 0.0:
            return f"{head}, const {self.offset!r}"
        return (f"{head}, sin2 amp={self.amp!r} omega={self.omega!r} "
                f"phase={self.phase!r} offset={self.offset!r}")


@dataclass(frozen=True, eq=False)
class Table:
    """Piecewise-constant spectrum tabulated on ``n`` equal cells of ``[0, 1)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("table must be a non-empty vector")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("table values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, z):
        n = self.values.size
        idx = np.clip(np.floor(np.asarray(z, dtype=float) * n).astype(np.int64), 0, n - 1)
        return self.values[idx]

    def integral(self, lo, hi):
        n = self.values.size
        edges = np.linspace(0.0, 1.0, n + 1)
        widths = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        return float(widths @ self.values)

    def variation(self):
        return float(np.sum(np.abs(np.diff(self.values))))

    def to_text(self):
        return " ".join(repr(float(v)) for v in self.values)


@dataclass(frozen=True, eq=False)
class SpectrumSpec:
    """Per-scale spectrum ``S_j(z)`` for scales ``-1..-J``.

    ``scales`` maps a negative scale to either a tuple of :class:`Piece`
    or a :class:`Table`.  Scales that are absent are identically zero.
    """

    J: int
    scales: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")
        scales = {}
        for j, entry in self.scales.items():
            j = int(j)
            if not (-self.J <= j <= -1):
                raise ValueError(f"scale {j} outside -1..-{self.J}")
            if isinstance(entry, Table):
                scales[j] = entry
                continue
            pieces = sorted(entry, key=lambda p: p.a)
            for p, q in zip(pieces, pieces[1:]):
                if q.a < p.b or (q.a == p.b and p.closed):
                    raise ValueError(f"overlapping pieces at scale {j}")
            if pieces:
                scales[j] = tuple(pieces)
        object.__setattr__(self, "scales", scales)

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, J=1):
        return cls(J, {})

    @classmethod
    def constant(cls, levels):
        """Stationary spectrum; ``levels[i]`` is ``S_{-(i+1)}``."""
        levels = [float(v) for v in levels]
        return cls(len(levels), {-(i + 1): (Piece.constant(0.0, 1.0, v, closed=True),)
                                 for i, v in enumerate(levels) if v != 0.0})

    @classmethod
    def white_noise(cls, J):
        """``S_j = 2^j``: unit white noise up to the truncation at ``J`` scales."""
        return cls.constant([2.0 ** -i for i in range(1, J + 1)])

    @classmethod
    def breaks_example(cls):
        """Built-in four-scale spectrum with breaks (``paper_s5.spec``)."""
        from .specfile import load_builtin
        return load_builtin("paper_s5.spec")

    # evaluation -------------------------------------------------------
    def _values(self, j, z):
        z = np.asarray(z, dtype=float)
        entry = self.scales.get(j)
        if entry is None:
            return np.zeros(z.shape)
        if isinstance(entry, Table):
            return entry(z)
        out = np.zeros(z.shape)
        for p in entry:
            mask = p.contains(z)
            out = np.where(mask, p.formula(z), out)
        return out

    def evaluate(self, j, z):
        """``S_j(z)`` for ``z`` in the open interval ``(0, 1)``."""
        za = np.asarray(z, dtype=float)
        if np.any((za <= 0.0) | (za >= 1.0)):
            raise ValueError("rescaled time must lie in (0, 1)")
        out = self._values(j, za)
        return float(out) if out.ndim == 0 else out

    def sampled(self, j, T):
        """``S_j(k/T)`` for ``k = 0..T-1`` (``k = 0`` is allowed here)."""
        return self._values(j, np.arange(T) / T)

    def amplitudes(self, j, T):
        """Nonnegative amplitudes ``w_{jk;T} = sqrt(S_j(k/T))``."""
        return np.sqrt(self.sampled(j, T))

    def is_tabulated(self, j):
        return isinstance(self.scales.get(j), Table)

    def active_scales(self):
        return sorted(self.scales, reverse=True)

    def total_variation(self, j):
        """Total variation of ``S_j`` on ``(0, 1)``.

        Exact for piecewise specs.  For tabulated scales this is the
        variation of the grid values, which is a lower bound.
        """
        entry = self.scales.get(j)
        if entry is None:
            return 0.0
        if isinstance(entry, Table):
            return entry.variation()
        tv = sum(p.variation() for p in entry)
        # jumps at piece boundaries that fall inside (0, 1)
        edges = {}
        for p in entry:
            if 0.0 < p.a < 1.0:
                edges.setdefault(p.a, [0.0, 0.0])[1] = float(p.formula(p.a))
            if 0.0 < p.b < 1.0:
                edges.setdefault(p.b, [0.0, 0.0])[0] = float(p.formula(p.b))
        tv += sum(abs(right - left) for left, right in edges.values())
        return float(tv)

    def interval_mean(self, j, lo, hi):
        """``|R|^{-1} int_R S_j(z) dz`` for ``R = [lo, hi)`` in rescaled time."""
        if not hi > lo:
            raise ValueError("empty interval")
        entry = self.scales.get(j)
        if entry is None:
            return 0.0
        if isinstance(entry, Table):
            return entry.integral(lo, hi) / (hi - lo)
        return sum(p.integral(lo, hi) for p in entry) / (hi - lo)

    def sup(self, j, n=10_000):
        z = (np.arange(n) + 0.5) / n
        return float(np.max(self._values(j, z))) if j in self.scales else 0.0

    def local_autocovariance(self, z, tau):
        """``c(z, tau) = sum_j S_j(z) Psi_j(tau)``."""
        system = AutocorrSystem.build(self.J)
        za = np.asarray(z, dtype=float)
        if np.any((za <= 0.0) | (za >= 1.0)):
            raise ValueError("rescaled time must lie in (0, 1)")
        total = 0.0
        for j in self.scales:
            total = total + self._values(j, za) * system.psi(j, tau)
        return total if np.ndim(total) else float(total)

    def c_norm(self, n=2000):
        """``sum_tau sup_z |c(z, tau)|`` evaluated on an ``n``-point grid in z."""
        system = AutocorrSystem.build(self.J)
        z = (np.arange(n) + 0.5) / n
        S = np.vstack([self._values(-i, z) for i in range(1, self.J + 1)])
        half = 2 ** self.J - 1
        taus = np.arange(-half, half + 1)
        c = system.matrix(taus).T @ S
        return float(np.sum(np.max(np.abs(c), axis=1)))

    def to_text(self):
        from .specfile import dumps
        return dumps(self)
