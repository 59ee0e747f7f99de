"""Core data carriers: grid description, spectral fields, states, sources.

Everything downstream works on truncated Fourier representations of real
2pi-periodic functions on the 3-torus.  Coefficients are stored in numpy's
``fftn`` layout (per-axis wavenumbers ``0..n/2-1, -n/2..-1``) normalised so
that ``coeffs[0,0,0]`` is the spatial mean.  Fields are immutable values:
operations return new instances and never mutate in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class DimensionError(ValueError):
    """Array shape or wavevector incompatible with the grid."""


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class CorruptFieldError(ValueError):
    """Conjugate symmetry of a coefficient array is broken."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedParameterError(ValueError):
    """Parameter regime the closed-form solvers do not cover."""


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid on [0, 2pi)^3 plus the two model parameters.

    ``kappa`` must lie in (0, 1): the per-mode closed forms all assume the
    underdamped regime ``|k|^2 > kappa^2`` for every nonzero wavevector.
    """

    n_per_dim: int
    sobolev_order_m: float = 3.0
    kappa: float = 0.5

    def __post_init__(self) -> None:
        if self.n_per_dim < 4 or self.n_per_dim % 2 != 0:
            raise DimensionError(f"n_per_dim must be even and >= 4, got {self.n_per_dim}")
        if not 0.0 < self.kappa < 1.0:
            raise UnsupportedParameterError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.sobolev_order_m < 0:
            raise DomainError(f"sobolev_order_m must be >= 0, got {self.sobolev_order_m}")

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers per axis in fftn order."""
        n = self.n_per_dim
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def k_squared(self) -> np.ndarray:
        """Exact integer |k|^2 on the full coefficient cube."""
        k = self.axis_wavenumbers
        return (k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_per_dim) / self.n_per_dim

    @cached_property
    def meshgrid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.axis_coordinates
        return tuple(np.meshgrid(x, x, x, indexing="ij"))

    def sobolev_weight(self, m: float) -> np.ndarray:
        """|k|^{2m} with the k=0 entry set to zero (mean handled separately)."""
        key = ("_sobw", float(m))
        cache = self.__dict__.setdefault("_weight_cache", {})
        if key not in cache:
            ksq = self.k_squared.astype(np.float64)
            w = np.zeros_like(ksq)
            nz = ksq > 0
            w[nz] = ksq[nz] ** float(m)
            cache[key] = w
        return cache[key]

    def mode_index(self, k: Sequence[int]) -> tuple[int, int, int]:
        n = self.n_per_dim
        idx = []
        for ki in k:
            if not -n // 2 <= ki <= n // 2 - 1:
                raise DimensionError(f"wavevector component {ki} outside band for n={n}")
            idx.append(ki % n)
        return tuple(idx)


def _conj_flip(coeffs: np.ndarray) -> np.ndarray:
    """Coefficient array of the complex conjugate field: c[-k] for each k."""
    out = coeffs[::-1, ::-1, ::-1]
    return np.conj(np.roll(out, 1, axis=(0, 1, 2)))


@dataclass(frozen=True)
class SpectralField:
    """Truncated Fourier representation of a real function on the 3-torus."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n_per_dim
        if self.coeffs.shape != (n, n, n):
            raise DimensionError(f"coefficient array shape {self.coeffs.shape} != {(n, n, n)}")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, grid: GridSpec) -> "SpectralField":
        n = grid.n_per_dim
        return cls(grid, np.zeros((n, n, n), dtype=np.complex128))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "SpectralField":
        f = cls.zero(grid)
        f.coeffs[0, 0, 0] = value
        return f

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: Iterable[tuple[Sequence[int], complex]]) -> "SpectralField":
        """Build a field from ``(wavevector, coefficient)`` pairs.

        The conjugate mode at ``-k`` is filled in automatically, so only one
        representative per +-k pair needs to be supplied.  Self-conjugate
        modes (k = 0 or Nyquist planes) must carry real coefficients.
        """
        f = cls.zero(grid)
        n = grid.n_per_dim
        for k, c in modes:
            c = complex(c)
            idx = grid.mode_index(k)
            neg = tuple((-ki) % n for ki in idx)
            if idx == neg:
                if abs(c.imag) > 1e-14 * max(1.0, abs(c)):
                    raise CorruptFieldError(f"self-conjugate mode {tuple(k)} needs a real coefficient")
                f.coeffs[idx] = c.real
            else:
                f.coeffs[idx] = c
                f.coeffs[neg] = np.conj(c)
        return f

    # -- accessors ----------------------------------------------------

    def coeff(self, k: Sequence[int]) -> complex:
        return complex(self.coeffs[self.grid.mode_index(k)])

    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0].real)

    def symmetry_defect(self) -> float:
        """Max-magnitude violation of conj(u_{-k}) = u_k, relative to scale."""
        defect = np.max(np.abs(self.coeffs - _conj_flip(self.coeffs)))
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return float(defect) / scale

    @cached_property
    def active_modes(self) -> tuple[np.ndarray, np.ndarray]:
        """(wavevectors (M,3), coefficients (M,)) of all nonzero entries."""
        nz = np.nonzero(self.coeffs)
        k = self.grid.axis_wavenumbers
        kvecs = np.stack([k[nz[0]], k[nz[1]], k[nz[2]]], axis=1)
        return kvecs, self.coeffs[nz]

    def eval_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the trigonometric polynomial at arbitrary points (P,3)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        kvecs, amps = self.active_modes
        if kvecs.shape[0] == 0:
            return np.zeros(pts.shape[0])
        phase = pts @ kvecs.T.astype(np.float64)
        vals = np.exp(1j * phase) @ amps
        return np.real(vals)

    # -- arithmetic (same-grid, coefficient-wise) -----------------------

    def _check(self, other: "SpectralField") -> None:
        if self.grid != other.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


@dataclass(frozen=True)
class WaveState:
    """Cauchy data / evolution snapshot: (u, du/dt) at a time stamp."""

    time: float
    u: SpectralField
    u_t: SpectralField

    def __post_init__(self) -> None:
        if self.u.grid != self.u_t.grid:
            raise GridMismatchError("u and u_t must share one grid")
        if self.time < 0:
            raise DomainError(f"time must be >= 0, got {self.time}")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


# -- time-dependent source coefficient --------------------------------


def _envelope_fn(envelope: tuple) -> Callable[[float], float]:
    kind = envelope[0]
    if kind == "const":
        c = float(envelope[1])
        return lambda t: c
    if kind == "exp":
        c, rate = float(envelope[1]), float(envelope[2])
        return lambda t: c * math.exp(rate * t)
    if kind == "poly":
        coeffs = tuple(float(c) for c in envelope[1])
        return lambda t: float(sum(c * t**i for i, c in enumerate(coeffs)))
    raise DomainError(f"unknown envelope kind {kind!r}")


@dataclass(frozen=True)
class SourceSpec:
    """Analytic description of the source coefficient a(t, x).

    Separable form sigma(t) * A(x): ``envelope`` is one of
    ``("const", c)``, ``("exp", c, rate)`` for c*exp(rate*t), or
    ``("poly", (c0, c1, ...))``; ``modes`` lists A's Fourier coefficients
    as (wavevector, coefficient) pairs with the conjugate partner implied.
    """

    envelope: tuple = ("const", 1.0)
    modes: tuple = (((0, 0, 0), 1.0),)

    @classmethod
    def constant(cls, a0: float) -> "SourceSpec":
        return cls(("const", float(a0)), (((0, 0, 0), 1.0),))

    @classmethod
    def zero(cls) -> "SourceSpec":
        return cls(("const", 0.0), (((0, 0, 0), 1.0),))

    @classmethod
    def separable(cls, envelope: tuple, modes: Iterable[tuple[Sequence[int], complex]]) -> "SourceSpec":
        return cls(tuple(envelope), tuple((tuple(k), complex(c)) for k, c in modes))

    def sigma(self, t: float) -> float:
        return _envelope_fn(self.envelope)(t)

    @cached_property
    def _mode_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Conjugate-closed (wavevectors, coefficients) of the spatial part."""
        table: dict[tuple[int, int, int], complex] = {}
        for k, c in self.modes:
            k = tuple(int(ki) for ki in k)
            c = complex(c)
            neg = tuple(-ki for ki in k)
            if k == neg:
                if abs(c.imag) > 1e-14 * max(1.0, abs(c)):
                    raise CorruptFieldError("zero mode of a source must be real")
                table[k] = complex(c.real)
            else:
                table[k] = c
                table.setdefault(neg, np.conj(c))
                if not np.isclose(table[neg], np.conj(c)):
                    raise CorruptFieldError(f"source modes break conjugate symmetry at {k}")
        kvecs = np.array(sorted(table), dtype=np.int64).reshape(-1, 3)
        amps = np.array([table[tuple(k)] for k in kvecs], dtype=np.complex128)
        return kvecs, amps

    @property
    def max_wavenumber(self) -> int:
        kvecs, _ = self._mode_table
        return int(np.max(np.abs(kvecs))) if kvecs.size else 0

    @property
    def is_zero(self) -> bool:
        kind = self.envelope[0]
        if kind == "const" and self.envelope[1] == 0.0:
            return True
        _, amps = self._mode_table
        return bool(np.all(amps == 0))

    @property
    def constant_value(self) -> float | None:
        """a0 if a(t,x) is a constant in both t and x, else None."""
        if self.envelope[0] != "const":
            return None
        kvecs, amps = self._mode_table
        nonzero = np.abs(amps) > 0
        if np.any(nonzero & np.any(kvecs != 0, axis=1)):
            return None
        mean = float(np.sum(amps[np.all(kvecs == 0, axis=1)]).real) if kvecs.size else 0.0
        return float(self.envelope[1]) * mean

    def spatial_values(self, n: int) -> np.ndarray:
        """A(x) sampled on an n^3 collocation grid (cached per n)."""
        cache = self.__dict__.setdefault("_grid_cache", {})
        if n not in cache:
            kvecs, amps = self._mode_table
            coeffs = np.zeros((n, n, n), dtype=np.complex128)
            for k, c in zip(kvecs, amps):
                if np.any(np.abs(k) > n // 2 - 1) and np.any(k != 0):
                    raise DimensionError(f"source mode {tuple(k)} does not fit an n={n} grid")
                coeffs[tuple(ki % n for ki in k)] = c
            vals = np.fft.ifftn(coeffs) * n**3
            cache[n] = np.ascontiguousarray(vals.real)
        return cache[n]

    def values_on_grid(self, t: float, n: int) -> np.ndarray:
        return self.sigma(t) * self.spatial_values(n)

    def eval_at(self, t: float, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        kvecs, amps = self._mode_table
        phase = pts @ kvecs.T.astype(np.float64)
        vals = np.real(np.exp(1j * phase) @ amps)
        return self.sigma(t) * vals

    def field_at(self, t: float, grid: GridSpec) -> SpectralField:
        kvecs, amps = self._mode_table
        f = SpectralField.zero(grid)
        s = self.sigma(t)
        for k, c in zip(kvecs, amps):
            f.coeffs[grid.mode_index(k)] = s * c
        return f


# -- time-sampled trajectories -----------------------------------------


def cubic_time_weights(times: np.ndarray, t: float) -> tuple[int, np.ndarray]:
    """Base index and 4 Lagrange weights for cubic interpolation in time.

    Falls back to the full available stencil when fewer than 4 samples
    exist.  ``times`` must be strictly increasing.
    """
    nt = len(times)
    if nt == 1:
        return 0, np.array([1.0])
    j = int(np.searchsorted(times, t, side="right") - 1)
    j = min(max(j, 0), nt - 2)
    width = min(4, nt)
    base = min(max(j - 1, 0), nt - width)
    pts = times[base : base + width]
    w = np.ones(width)
    for i in range(width):
        for l in range(width):
            if l != i:
                w[i] *= (t - pts[l]) / (pts[i] - pts[l])
    return base, w


@dataclass
class Trajectory:
    """Time-sampled solution: coefficient stacks for u and du/dt.

    ``u`` and ``u_t`` have shape (n_times, n, n, n).  A truncated run keeps
    the samples up to the last valid time and sets ``blowup_suspected``.
    """

    grid: GridSpec
    times: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    a_spec: SourceSpec | None = None
    blowup_suspected: bool = False
    last_valid_time: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.times) != self.u.shape[0] or len(self.times) != self.u_t.shape[0]:
            raise DimensionError("trajectory arrays disagree on the number of samples")

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def u_field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.u[i])

    def ut_field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.u_t[i])

    def state(self, i: int) -> WaveState:
        return WaveState(float(self.times[i]), self.u_field(i), self.ut_field(i))

    def u_coeffs_at(self, t: float) -> np.ndarray:
        """Cubic-in-time interpolation of the u coefficient stack."""
        base, w = cubic_time_weights(self.times, t)
        return np.tensordot(w, self.u[base : base + len(w)], axes=(0, 0))

    def u_field_at(self, t: float) -> SpectralField:
        return SpectralField(self.grid, self.u_coeffs_at(t))
