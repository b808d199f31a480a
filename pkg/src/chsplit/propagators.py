"""Sub-propagators for the splitting schemes.

``linear_step`` is the exact Fourier multiplier exp(-tau (nu d^4 + d^2)) (or its
biharmonic-only variant). ``nonlinear_subflow`` integrates the degenerate
diffusion ``w_t = (w^3)_xx`` (optionally ``(w^3 - w)_xx``) with substepped
explicit RK4 on dealiased cubes. ``one_step_nonlinear`` and ``imex_step`` are the
single-solve updates used by the first-order scheme and as a comparator.

Every function here has an ``*_hat`` twin working on real-FFT amplitude
coefficients; the time loop stays in that representation so the zero mode is
never touched by a transform round trip.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from chsplit.errors import DivergenceError, StepFailure
from chsplit.spectral import Grid, RealField, hat, hat_cube, unhat

# extent of the RK4 stability region along the negative real axis
RK4_REAL_EXTENT = 2.785


class LinearKind(enum.Enum):
    FULL = "full"
    BIHARMONIC_ONLY = "biharmonic_only"


class SubflowKind(enum.Enum):
    CUBIC_ONLY = "cubic_only"
    CUBIC_MINUS_LINEAR = "cubic_minus_linear"


class InnerOrder(enum.Enum):
    RK4 = "rk4"


@dataclass(frozen=True)
class SubstepControl:
    safety: float = 0.5
    max_substeps: int = 1_000_000
    inner_order: InnerOrder = InnerOrder.RK4

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if int(self.max_substeps) != self.max_substeps or self.max_substeps < 1:
            raise ValueError(f"max_substeps must be a positive integer, got {self.max_substeps}")
        if not isinstance(self.inner_order, InnerOrder):
            object.__setattr__(self, "inner_order", InnerOrder(self.inner_order))


DEFAULT_CONTROL = SubstepControl()


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value}")


# --- linear multiplier ------------------------------------------------------


def linear_symbol(k: np.ndarray, nu: float, kind: LinearKind = LinearKind.FULL) -> np.ndarray:
    """Decay rate of each mode: ``nu k^4 - k^2`` (FULL) or ``nu k^4``."""
    k2 = k * k
    if kind is LinearKind.FULL:
        return nu * k2 * k2 - k2
    return nu * k2 * k2


def linear_step_hat(ah: np.ndarray, tau: float, nu: float, kr: np.ndarray,
                    kind: LinearKind = LinearKind.FULL) -> np.ndarray:
    return ah * np.exp(-tau * linear_symbol(kr, nu, kind))


def linear_step(a: RealField, tau: float, nu: float,
                kind: LinearKind = LinearKind.FULL) -> RealField:
    """Exact linear propagator; low modes with ``nu k^2 < 1`` are amplified."""
    _check_positive("tau", tau)
    _check_positive("nu", nu)
    g = a.grid
    return RealField(g, unhat(linear_step_hat(hat(a.values), tau, nu, g.kr, kind), g.n_points))


# --- nonlinear subflow ------------------------------------------------------


def _make_rhs(grid, kind):
    """Right side in amplitude space; ``with_rate`` also returns the effective diffusivity."""
    n = grid.n_points
    m = n // 2
    k2 = grid.kr * grid.kr
    padded = np.zeros(n + 1, dtype=complex)
    irfft, rfft = np.fft.irfft, np.fft.rfft

    def rhs(ah, with_rate=False):
        padded[: m + 1] = ah
        # the Nyquist mode is shared between +-n/2 once it becomes interior
        padded[m] *= 0.5
        fine = irfft(padded, 2 * n, norm="forward")
        sq = fine * fine
        cube = rfft(sq * fine, norm="forward")[: m + 1]
        cube[m] = 0.0
        if kind is SubflowKind.CUBIC_MINUS_LINEAR:
            cube -= ah
        out = -k2 * cube
        if not with_rate:
            return out
        if kind is SubflowKind.CUBIC_ONLY:
            return out, 3.0 * float(sq.max())
        # backward-diffusive where 3 w^2 < 1
        return out, max(abs(3.0 * float(sq.max()) - 1.0), abs(3.0 * float(sq.min()) - 1.0))

    return rhs


def _stable_substep(diffusivity, k_max, safety):
    lam = diffusivity * k_max * k_max
    if lam == 0.0:
        return np.inf
    return safety * RK4_REAL_EXTENT / lam


def iter_subflow_hat(ah: np.ndarray, tau: float, grid: Grid,
                     kind: SubflowKind = SubflowKind.CUBIC_ONLY,
                     ctl: SubstepControl = DEFAULT_CONTROL) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, w_hat)`` after every RK4 substep until ``t == tau``.

    The substep is re-derived from the current state: ``delta`` keeps
    ``delta * D * k_max^2`` inside the RK4 real-axis stability interval, with
    ``D`` the frozen effective diffusivity ``3 max w^2``.
    """
    rhs = _make_rhs(grid, kind)
    w = np.array(ah, dtype=complex)
    t = 0.0
    steps = 0
    while t < tau:
        k1, diff = rhs(w, with_rate=True)
        remaining = tau - t
        delta = min(remaining, _stable_substep(diff, grid.k_max, ctl.safety))
        if steps >= ctl.max_substeps or (
            delta < remaining and steps + remaining / delta > ctl.max_substeps
        ):
            raise StepFailure(
                f"subflow needs more than {ctl.max_substeps} substeps "
                f"(delta={delta:.3e}, remaining={remaining:.3e})",
                delta,
            )
        h = 0.5 * delta
        s2 = rhs(w + h * k1)
        s3 = rhs(w + h * s2)
        s4 = rhs(w + delta * s3)
        w = w + (delta / 6.0) * (k1 + 2.0 * (s2 + s3) + s4)
        if not np.all(np.isfinite(w)):
            raise DivergenceError(f"non-finite state in subflow at t={t + delta:.6g}")
        steps += 1
        # land exactly on tau; avoids a spurious sliver step from rounding
        t = tau if delta == remaining else t + delta
        yield t, w


def nonlinear_subflow_hat(ah: np.ndarray, tau: float, grid: Grid,
                          kind: SubflowKind = SubflowKind.CUBIC_ONLY,
                          ctl: SubstepControl = DEFAULT_CONTROL,
                          observer: Optional[Callable[[float, np.ndarray], None]] = None) -> np.ndarray:
    w = ah
    for t, w in iter_subflow_hat(ah, tau, grid, kind, ctl):
        if observer is not None:
            observer(t, w)
    return w


def nonlinear_subflow(a: RealField, tau: float,
                      kind: SubflowKind = SubflowKind.CUBIC_ONLY,
                      ctl: SubstepControl = DEFAULT_CONTROL,
                      observer: Optional[Callable[[float, RealField], None]] = None) -> RealField:
    """Approximate the time-``tau`` flow of ``w_t = (w^3)_xx`` (or ``(w^3 - w)_xx``).

    ``observer(t, w)`` is called after every substep. Raises ``StepFailure`` when
    the substep budget is exhausted and ``DivergenceError`` on NaN/Inf.
    """
    _check_positive("tau", tau)
    g = a.grid
    wrapped = None
    if observer is not None:
        def wrapped(t, wh):
            observer(t, RealField(g, unhat(wh, g.n_points)))
    out = nonlinear_subflow_hat(hat(a.values), tau, g, kind, ctl, wrapped)
    return RealField(g, unhat(out, g.n_points))


# --- single-solve updates ---------------------------------------------------


def one_step_nonlinear_hat(ah: np.ndarray, tau: float, grid: Grid) -> np.ndarray:
    k2 = grid.kr * grid.kr
    return ah - tau * k2 * (hat_cube(ah, grid.n_points) - ah)


def one_step_nonlinear(a: RealField, tau: float) -> RealField:
    """Forward-Euler update ``a + tau (a^3 - a)_xx``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    g = a.grid
    return RealField(g, unhat(one_step_nonlinear_hat(hat(a.values), tau, g), g.n_points))


def imex_step_hat(ah: np.ndarray, tau: float, nu: float, grid: Grid) -> np.ndarray:
    if tau >= 4.0 * nu:
        raise ValueError(f"imex_step requires tau < 4 nu (tau={tau}, nu={nu})")
    k2 = grid.kr * grid.kr
    denom = 1.0 + tau * linear_symbol(grid.kr, nu)
    return (ah - tau * k2 * hat_cube(ah, grid.n_points)) / denom


def imex_step(a: RealField, tau: float, nu: float) -> RealField:
    """Linear part implicit, cubic explicit: ``(1 + tau(nu d^4 + d^2)) w = a + tau (a^3)_xx``."""
    _check_positive("tau", tau)
    _check_positive("nu", nu)
    g = a.grid
    return RealField(g, unhat(imex_step_hat(hat(a.values), tau, nu, g), g.n_points))
