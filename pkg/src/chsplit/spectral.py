"""Periodic grid, Fourier transforms and the dealiased cube on [-pi, pi].

Public transforms use the integral convention

    f_hat(k) = int_{-pi}^{pi} f(x) exp(-i k x) dx,
    f(x)     = (1 / 2 pi) sum_k f_hat(k) exp(i k x),

so that a unit-amplitude ``cos x`` has ``f_hat(+-1) = pi``.

Propagators do not go through these wrappers on their hot path. They work on
*amplitude coefficients*, ``numpy.fft.rfft(values, norm="forward")``, which are
relative to node index rather than to ``x`` and need no phase factor. Helpers
prefixed ``hat_`` operate on that representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from chsplit.errors import MalformedSpectrumError

LENGTH = 2.0 * np.pi

# relative tolerance for discarding imaginary residue / symmetry defects
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-pi, pi) with ``n_points`` nodes.

    Node ``j`` sits at ``x_j = -pi + 2 pi j / n_points``. ``wavenumbers`` follow
    FFT ordering, with the Nyquist entry reported as ``+n_points/2`` so the
    band is ``-n/2+1 .. n/2``.
    """

    n_points: int = 256

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError("n_points must be an integer")
        if n < 8 or n % 2:
            raise ValueError(f"n_points must be even and >= 8, got {n}")

    @cached_property
    def x(self) -> np.ndarray:
        return -np.pi + LENGTH * np.arange(self.n_points) / self.n_points

    @property
    def dx(self) -> float:
        return LENGTH / self.n_points

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n_points, 1.0 / self.n_points)
        k[self.n_points // 2] = self.n_points // 2
        return k

    @cached_property
    def kr(self) -> np.ndarray:
        """Non-negative wavenumbers of the real-FFT layout, ``0 .. n/2``."""
        return np.arange(self.n_points // 2 + 1, dtype=float)

    @property
    def k_max(self) -> int:
        return self.n_points // 2

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i k x_0) with x_0 = -pi
        return np.where(self.wavenumbers.astype(np.int64) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class RealField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "RealField":
        return cls(grid, func(grid.x))

    @classmethod
    def zeros(cls, grid: Grid) -> "RealField":
        return cls(grid, np.zeros(grid.n_points))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __add__(self, other):
        return RealField(self.grid, self.values + _values(other))

    def __sub__(self, other):
        return RealField(self.grid, self.values - _values(other))

    def __mul__(self, scalar):
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)


def _values(f):
    return f.values if isinstance(f, RealField) else f


@dataclass(frozen=True)
class SpectralField:
    """Coefficients ``f_hat(k)`` in FFT order, aligned with ``grid.wavenumbers``."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} coefficients, got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[int(k) % self.grid.n_points])


def to_spectral(f: RealField) -> SpectralField:
    g = f.grid
    coeffs = np.fft.fft(f.values) * (LENGTH / g.n_points) * g._phase
    return SpectralField(g, coeffs)


def to_real(F: SpectralField) -> RealField:
    g = F.grid
    c = F.coeffs
    n = g.n_points
    scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
    mirrored = np.conj(c[(-np.arange(n)) % n])
    defect = float(np.max(np.abs(c - mirrored)))
    if defect > SYMMETRY_RTOL * scale:
        raise MalformedSpectrumError(
            f"coefficients are not conjugate-symmetric (defect {defect:.3e})"
        )
    values = np.fft.ifft(c * g._phase) * (n / LENGTH)
    return RealField(g, values.real)


def spectral_derivative(F: SpectralField, order: int) -> SpectralField:
    """Multiply ``f_hat(k)`` by ``(ik)^order``; the Nyquist mode is dropped for odd orders."""
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    order = int(order)
    g = F.grid
    mult = (1j * g.wavenumbers) ** order
    if order % 2:
        mult[g.n_points // 2] = 0.0
    return SpectralField(g, F.coeffs * mult)


def project_mean_zero(f: RealField) -> RealField:
    ah = hat(f.values)
    ah[0] = 0.0
    return RealField(f.grid, unhat(ah, f.grid.n_points))


def dealiased_cube(f: RealField) -> RealField:
    """Pointwise cube with aliasing removed by 2x zero padding, truncated to the grid band."""
    ah = hat(f.values)
    return RealField(f.grid, unhat(hat_cube(ah, f.grid.n_points), f.grid.n_points))


# --- amplitude-coefficient helpers used by the propagators -------------------


def hat(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft(values, norm="forward")


def unhat(ah: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(ah, n=n, norm="forward")


def hat_pad(ah: np.ndarray, n: int) -> np.ndarray:
    """Physical values of the trigonometric interpolant on the 2n-point grid."""
    padded = np.zeros(n + 1, dtype=complex)
    m = n // 2
    padded[: m + 1] = ah
    # the Nyquist mode is shared between +-n/2 once it becomes interior
    padded[m] *= 0.5
    return np.fft.irfft(padded, n=2 * n, norm="forward")


def hat_cube_from_fine(fine: np.ndarray, n: int) -> np.ndarray:
    c = np.fft.rfft(fine * fine * fine, norm="forward")[: n // 2 + 1]
    c[n // 2] = 0.0
    return c


def hat_cube(ah: np.ndarray, n: int) -> np.ndarray:
    return hat_cube_from_fine(hat_pad(ah, n), n)


def l2_norm(values: np.ndarray) -> float:
    """Trapezoidal L2 norm on the periodic grid."""
    h = LENGTH / values.shape[-1]
    return float(np.sqrt(h * np.dot(values, values)))


def lp_norm(values: np.ndarray, p: float) -> float:
    if np.isinf(p):
        return float(np.max(np.abs(values)))
    h = LENGTH / values.shape[-1]
    return float((h * np.sum(np.abs(values) ** p)) ** (1.0 / p))
