"""Scalar functionals of a field and the semigroup-kernel scaling analyzer.

Norms use the trapezoidal rule on the grid (spectrally exact for resolved
trigonometric polynomials). Homogeneous Sobolev parts are evaluated from the
integral-convention coefficients, ``(1/2pi) sum |k|^(2s) |f_hat(k)|^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from chsplit.errors import FitError, ResolutionError
from chsplit.spectral import LENGTH, Grid, RealField, hat, hat_cube, l2_norm, lp_norm, unhat


@dataclass(frozen=True)
class DiagnosticsRecord:
    mass: float
    l2: float
    l4: float
    h1: float
    energy: float
    residual: float
    linf: float
    hs: Mapping[float, float] = field(default_factory=dict)

    COLUMNS = ("mass", "l2", "l4", "h1", "energy", "residual", "linf")

    def is_finite(self) -> bool:
        vals = [getattr(self, c) for c in self.COLUMNS] + list(self.hs.values())
        return all(math.isfinite(v) for v in vals)

    def as_dict(self) -> dict:
        out = {c: getattr(self, c) for c in self.COLUMNS}
        for s, v in self.hs.items():
            out[f"h{s:g}"] = v
        return out


# --- amplitude-space kernels (shared with the time loop) ---------------------


def _mode_weights(n: int) -> np.ndarray:
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def homogeneous_sq_hat(ah: np.ndarray, grid: Grid, s: float) -> float:
    """``(1/2pi) sum_k |k|^(2s) |f_hat(k)|^2`` from amplitude coefficients."""
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    mult = grid.kr ** (2.0 * s)  # 0**0 == 1 keeps the mean in the s = 0 case
    return float(LENGTH * np.sum(_mode_weights(grid.n_points) * mult * np.abs(ah) ** 2))


def energy_hat(ah: np.ndarray, values: np.ndarray, grid: Grid, nu: float) -> float:
    ux = unhat(1j * grid.kr * _no_nyquist(ah), grid.n_points)
    density = 0.5 * nu * ux * ux + 0.25 * (values * values - 1.0) ** 2
    return float(grid.dx * np.sum(density))


def residual_hat(ah: np.ndarray, grid: Grid, nu: float) -> float:
    k2 = grid.kr * grid.kr
    cube = hat_cube(ah, grid.n_points)
    r = (1.0 - nu * k2) * ah - cube
    r[0] = ah[0]  # the cube's mean is removed
    return l2_norm(unhat(r, grid.n_points))


def _no_nyquist(ah):
    out = ah.copy()
    out[-1] = 0.0
    return out


def diagnose_hat(ah: np.ndarray, values: np.ndarray, grid: Grid, nu: float,
                 hs_orders: Iterable[float] = ()) -> DiagnosticsRecord:
    l2 = l2_norm(values)
    h1 = math.sqrt(l2 * l2 + homogeneous_sq_hat(ah, grid, 1.0))
    hs = {float(s): math.sqrt(l2 * l2 + homogeneous_sq_hat(ah, grid, float(s))) for s in hs_orders}
    return DiagnosticsRecord(
        mass=float(np.mean(values)),
        l2=l2,
        l4=lp_norm(values, 4),
        h1=h1,
        energy=energy_hat(ah, values, grid, nu),
        residual=residual_hat(ah, grid, nu),
        linf=float(np.max(np.abs(values))),
        hs=hs,
    )


# --- public functionals ----------------------------------------------------------


def diagnose(u: RealField, nu: float, hs_orders: Iterable[float] = ()) -> DiagnosticsRecord:
    return diagnose_hat(hat(u.values), u.values, u.grid, nu, hs_orders)


def energy(u: RealField, nu: float) -> float:
    """Ginzburg-Landau energy ``int (nu/2 u_x^2 + (u^2 - 1)^2 / 4) dx``."""
    return energy_hat(hat(u.values), u.values, u.grid, nu)


def sobolev_norm(u: RealField, s: float) -> float:
    """``sqrt(||u||_2^2 + ||u||_{H^s-dot}^2)``; fractional ``s`` allowed."""
    l2 = l2_norm(u.values)
    return math.sqrt(l2 * l2 + homogeneous_sq_hat(hat(u.values), u.grid, s))


def residual(u: RealField, nu: float) -> float:
    """L2 norm of ``nu u_xx - u^3 + mean(u^3) + u`` with the dealiased cube."""
    return residual_hat(hat(u.values), u.grid, nu)


def l2(u: RealField) -> float:
    return l2_norm(u.values)


def lp(u: RealField, p: float) -> float:
    return lp_norm(u.values, p)


# --- semigroup kernels -------------------------------------------------------------


class KernelVariant(enum.Enum):
    PLAIN = "K"  # F^-1 exp(-beta (nu k^4 - k^2))
    SECOND_DERIV = "K2"  # F^-1 beta k^2 exp(-beta (nu k^4 - k^2))


KERNEL_TAIL_TOL = 1e-14
KERNEL_MIN_POINTS = 8192
KERNEL_MAX_POINTS = 1 << 22


def kernel_multiplier(k: np.ndarray, beta: float, nu: float, variant: KernelVariant) -> np.ndarray:
    k2 = k * k
    m = np.exp(-beta * (nu * k2 * k2 - k2))
    if variant is KernelVariant.SECOND_DERIV:
        m = beta * k2 * m
    return m


def _tail(beta, nu, variant, n):
    # past the symbol's peak the multiplier decreases monotonically
    k_peak = math.sqrt(1.0 / (2.0 * nu)) + 1.0
    kc = n // 2
    if kc <= k_peak:
        return np.inf
    return float(kernel_multiplier(np.array([float(kc)]), beta, nu, variant)[0])


def kernel_points(beta: float, nu: float, variant: KernelVariant,
                  n_points: int = KERNEL_MIN_POINTS, max_points: int = KERNEL_MAX_POINTS) -> int:
    """Smallest power-of-two doubling of ``n_points`` that resolves the multiplier tail."""
    n = n_points
    while _tail(beta, nu, variant, n) >= KERNEL_TAIL_TOL:
        if 2 * n > max_points:
            raise ResolutionError(
                f"kernel (beta={beta}, nu={nu}, {variant.value}) unresolved at {n} points",
                suggested_n_points=2 * n,
            )
        n *= 2
    return n


def kernel_field(beta: float, nu: float, variant=KernelVariant.PLAIN,
                 n_points: int = KERNEL_MIN_POINTS, max_points: int = KERNEL_MAX_POINTS) -> RealField:
    """The periodic kernel sampled on the grid, built from its Fourier series."""
    variant = KernelVariant(variant)
    if not beta > 0 or not nu > 0:
        raise ValueError("beta and nu must be positive")
    n = kernel_points(beta, nu, variant, n_points, max_points)
    g = Grid(n)
    m = kernel_multiplier(g.kr, beta, nu, variant)
    parity = np.where(np.arange(g.kr.size) % 2 == 0, 1.0, -1.0)
    return RealField(g, unhat(m * parity / LENGTH, n))


def kernel_norms(beta: float, nu: float, p: float, variant=KernelVariant.PLAIN,
                 n_points: int = KERNEL_MIN_POINTS, max_points: int = KERNEL_MAX_POINTS) -> float:
    if not (p >= 1):
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return lp_norm(kernel_field(beta, nu, variant, n_points, max_points).values, p)


def fit_scaling_exponent(samples: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(norm)`` against ``log(1/beta)``."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3 or arr.shape[1] != 2:
        raise FitError("need at least 3 (beta, norm) samples")
    beta, norm = arr[:, 0], arr[:, 1]
    if np.any(beta <= 0) or np.any(norm <= 0):
        raise FitError("beta and norm must be positive")
    if np.unique(beta).size != beta.size:
        raise FitError("beta values must be distinct")
    if math.log10(beta.max() / beta.min()) < 2.0 - 1e-9:
        raise FitError("beta samples must span at least two decades")
    return float(np.polyfit(np.log(1.0 / beta), np.log(norm), 1)[0])


def expected_kernel_slope(variant, p: float) -> float:
    """Slope of ``log ||kernel||_p`` against ``log(1/beta)`` as ``beta -> 0``.

    The plain kernel grows like ``beta^-(1/4 - 1/(4p))``. The second-derivative
    kernel is ``beta^(1/4) g(x beta^(-1/4))`` to leading order, so its norm
    decays like ``beta^(1/4 + 1/(4p))`` (5/16 at p = 4).
    """
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if KernelVariant(variant) is KernelVariant.PLAIN:
        return 0.25 - 0.25 * inv_p
    return -(0.25 + 0.25 * inv_p)
