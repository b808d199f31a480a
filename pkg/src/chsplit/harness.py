"""Reference solutions and order/dissipation studies.

The reference solution is the Strang scheme itself at a step small enough
that halving it moves the result by less than ``tol`` in L2; the returned
field is the Richardson combination of the last two levels. Because that
shares code with the scheme under test, ``strang_expansion`` provides an
independent check: the second-order Taylor expansion of one Strang step,
evaluated with plain products on a 4x oversampled grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from chsplit.diagnostics import energy_hat, residual_hat, sobolev_norm
from chsplit.errors import ReferenceSolveError, SolverError
from chsplit.propagators import DEFAULT_CONTROL, SubstepControl, imex_step
from chsplit.schemes import Scheme, SchemeConfig, iterate, strang_step
from chsplit.spectral import Grid, RealField, hat, l2_norm, unhat

log = logging.getLogger(__name__)

# --- initial data --------------------------------------------------------------


@dataclass(frozen=True)
class SingleMode:
    amplitude: float
    wavenumber: int

    def field(self, grid: Grid) -> RealField:
        if self.wavenumber < 1:
            raise ValueError("wavenumber must be >= 1 so the data has zero mean")
        return RealField(grid, self.amplitude * np.cos(self.wavenumber * grid.x))


@dataclass(frozen=True)
class TrigPoly:
    """``sum_k c_k cos(kx) + s_k sin(kx)`` from ``(k, c_k, s_k)`` triples, ``k >= 1``."""

    coefficients: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        coeffs = tuple((int(k), float(c), float(s)) for k, c, s in self.coefficients)
        if any(k < 1 for k, _, _ in coeffs):
            raise ValueError("wavenumbers must be >= 1 so the data has zero mean")
        object.__setattr__(self, "coefficients", coeffs)

    def field(self, grid: Grid) -> RealField:
        x = grid.x
        if any(k >= grid.k_max for k, _, _ in self.coefficients):
            raise ValueError(f"wavenumber exceeds the grid band (k_max={grid.k_max})")
        u = np.zeros_like(x)
        for k, c, s in self.coefficients:
            u += c * np.cos(k * x) + s * np.sin(k * x)
        return RealField(grid, u)


@dataclass(frozen=True)
class RandomBandlimited:
    """Cosine and sine coefficients uniform in ``[-amplitude, amplitude]`` for ``1 <= k <= band``."""

    seed: int
    band: int
    amplitude: float

    def materialize(self) -> TrigPoly:
        rng = np.random.default_rng(self.seed)
        draws = rng.uniform(-self.amplitude, self.amplitude, size=(self.band, 2))
        return TrigPoly(tuple((k + 1, float(c), float(s)) for k, (c, s) in enumerate(draws)))

    def field(self, grid: Grid) -> RealField:
        return self.materialize().field(grid)


InitialData = Union[SingleMode, TrigPoly, RandomBandlimited]


@dataclass(frozen=True)
class ExperimentSpec:
    initial_data: InitialData
    nu: float
    horizon: float = 1.0
    scheme: Scheme = Scheme.STRANG
    tolerance_band: tuple[float, float] = (1.85, 2.15)
    grid_points: int = 256
    substep: SubstepControl = DEFAULT_CONTROL

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_points)

    def initial_field(self) -> RealField:
        return self.initial_data.field(self.grid)

    def config(self, tau: float, n_steps: int, scheme: Optional[Scheme] = None) -> SchemeConfig:
        return SchemeConfig(nu=self.nu, tau=tau, scheme=scheme or self.scheme, n_steps=n_steps,
                            grid_points=self.grid_points, substep=self.substep)


# --- reports ---------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    taus: list[float]
    errors: list[float]
    fitted_order: float
    pairwise_orders: list[float]
    passed: bool
    band: tuple[float, float]
    failed: dict[float, str] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "taus": self.taus,
            "errors": self.errors,
            "fitted_order": self.fitted_order,
            "pairwise_orders": self.pairwise_orders,
            "pass": self.passed,
            "band": list(self.band),
            "failed": {repr(t): msg for t, msg in self.failed.items()},
            **self.notes,
        }


def fit_order(taus: Sequence[float], errors: Sequence[float]) -> tuple[float, list[float]]:
    """Least-squares slope of ``log e`` against ``log tau`` and the consecutive-pair orders."""
    t = np.asarray(taus, dtype=float)
    e = np.asarray(errors, dtype=float)
    if t.size < 2 or np.any(e <= 0):
        return math.nan, []
    slope = float(np.polyfit(np.log(t), np.log(e), 1)[0]) if t.size >= 3 else math.nan
    pairs = [float(np.log(e[i] / e[i + 1]) / np.log(t[i] / t[i + 1])) for i in range(t.size - 1)]
    return slope, pairs


def _report(taus, errors, failed, band, notes=None, min_points=3) -> ConvergenceReport:
    ok_t = [t for t, e in zip(taus, errors) if e is not None]
    ok_e = [e for e in errors if e is not None]
    if len(ok_t) < min_points:
        raise SolverError(f"only {len(ok_t)} ladder rungs survived; need {min_points}")
    order, pairs = fit_order(ok_t, ok_e)
    passed = bool(band[0] <= order <= band[1])
    return ConvergenceReport(list(ok_t), list(ok_e), order, pairs, passed, tuple(band),
                             failed, notes or {})


def _validate_ladder(taus):
    taus = [float(t) for t in taus]
    if any(t <= 0 for t in taus):
        raise ValueError("step sizes must be positive")
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("step sizes must be strictly decreasing")
    return taus


def steps_for(horizon: float, tau: float) -> int:
    n = round(horizon / tau)
    if n < 1 or abs(n * tau - horizon) > 1e-12 * max(1.0, horizon):
        raise ValueError(f"tau={tau} does not divide the horizon {horizon}")
    return n


# --- reference solution -----------------------------------------------------------------


@dataclass
class ReferenceSolution:
    field: RealField
    tau_ref: float
    change: float
    trace: list[tuple[float, float]]


def _advance(u0: RealField, cfg: SchemeConfig) -> np.ndarray:
    uh = None
    for _, uh in iterate(u0, cfg):
        pass
    return unhat(uh, u0.grid.n_points)


def reference_solve(u0: RealField, nu: float, horizon: float, *, tau_start: Optional[float] = None,
                    tol: float = 1e-10, max_levels: int = 10,
                    substep: SubstepControl = DEFAULT_CONTROL) -> ReferenceSolution:
    """Self-converged Strang solution at ``horizon``.

    Starting from ``tau_start`` (default ``horizon/64``) the step is halved until
    successive levels differ by less than ``tol`` in L2. ``trace`` lists
    ``(tau, change)`` per halving; ``ReferenceSolveError`` carries it when the
    budget of ``max_levels`` halvings runs out.
    """
    g = u0.grid
    if horizon == 0:
        return ReferenceSolution(u0, 0.0, 0.0, [])
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    n = max(1, math.ceil(horizon / tau_start)) if tau_start else 64
    cfg = SchemeConfig(nu=nu, tau=horizon / n, n_steps=n, grid_points=g.n_points, substep=substep)
    prev = _advance(u0, cfg)
    trace = []
    for _ in range(max_levels):
        n *= 2
        cfg = SchemeConfig(nu=nu, tau=horizon / n, n_steps=n, grid_points=g.n_points, substep=substep)
        cur = _advance(u0, cfg)
        change = l2_norm(cur - prev)
        trace.append((cfg.tau, change))
        log.debug("reference tau=%.3e change=%.3e", cfg.tau, change)
        if change < tol:
            # the splitting error is even in tau; drop its leading term
            return ReferenceSolution(RealField(g, (4.0 * cur - prev) / 3.0), cfg.tau, change, trace)
        prev = cur
    raise ReferenceSolveError(
        f"reference did not self-converge to {tol:g} within {max_levels} halvings", trace
    )


# --- studies ---------------------------------------------------------------------------


def convergence_study(spec: ExperimentSpec, taus: Sequence[float],
                      reference: Optional[Union[RealField, ReferenceSolution]] = None,
                      ref_tol: float = 1e-10) -> ConvergenceReport:
    """Global L2 error at ``spec.horizon`` for each step size, with a fitted order."""
    taus = _validate_ladder(taus)
    steps = [steps_for(spec.horizon, t) for t in taus]
    u0 = spec.initial_field()
    notes = {}
    if reference is None:
        reference = reference_solve(u0, spec.nu, spec.horizon, tau_start=taus[-1] / 2,
                                    tol=ref_tol, substep=spec.substep)
    if isinstance(reference, ReferenceSolution):
        notes["reference"] = {"tau_ref": reference.tau_ref, "change": reference.change,
                              "trace": reference.trace}
        reference = reference.field
    errors, failed = [], {}
    for tau, n in zip(taus, steps):
        try:
            u = _advance(u0, spec.config(tau, n))
        except SolverError as exc:
            failed[tau] = str(exc)
            errors.append(None)
            continue
        errors.append(l2_norm(u - reference.values))
    return _report(taus, errors, failed, spec.tolerance_band, notes)


def strang_expansion(a: RealField, nu: float, tau: float, oversample: int = 4) -> RealField:
    """``S_L(tau) a + tau (a^3)_xx + tau^2/2 (L(a^3) + 3a^2 (La + (a^3)_xx))_xx``, ``L = -nu d^4 - d^2``.

    Products are taken pointwise on an oversampled grid with full complex FFTs,
    so nothing here goes through the solver's dealiasing path.
    """
    n = a.grid.n_points
    m = oversample * n
    coarse = np.fft.fft(a.values) / n
    fine_hat = np.zeros(m, dtype=complex)
    half = n // 2
    fine_hat[:half] = coarse[:half]
    fine_hat[-half + 1:] = coarse[-half + 1:]
    k = np.fft.fftfreq(m, 1.0 / m)

    def phys(fh):
        return np.fft.ifft(fh).real * m

    def spec_(f):
        return np.fft.fft(f) / m

    ell = -nu * k**4 + k**2
    dxx = -(k**2)
    af = phys(fine_hat)
    cube_h = spec_(af**3)
    la = phys(ell * fine_hat)
    cube_xx = phys(dxx * cube_h)
    inner = ell * cube_h + spec_(3.0 * af**2 * (la + cube_xx))
    total = np.exp(tau * ell) * fine_hat + tau * dxx * cube_h + 0.5 * tau**2 * dxx * inner
    out = np.zeros(n, dtype=complex)
    out[:half] = total[:half]
    out[-half + 1:] = total[-half + 1:]
    return RealField(a.grid, np.fft.ifft(out).real * n)


def consistency_study(a: RealField, nu: float, taus: Sequence[float],
                      band: tuple[float, float] = (2.8, 3.2),
                      substep: SubstepControl = DEFAULT_CONTROL) -> ConvergenceReport:
    """One Strang step against its second-order expansion; the remainder should be O(tau^3)."""
    taus = _validate_ladder(taus)
    errors, failed = [], {}
    for tau in taus:
        cfg = SchemeConfig(nu=nu, tau=tau, grid_points=a.grid.n_points, substep=substep)
        try:
            u = strang_step(a, cfg)
        except SolverError as exc:
            failed[tau] = str(exc)
            errors.append(None)
            continue
        errors.append(l2_norm(u.values - strang_expansion(a, nu, tau).values))
    if all(e == 0.0 for e in errors if e is not None):
        return ConvergenceReport(taus, errors, math.nan, [], False, band, failed,
                                 {"identically_zero": True})
    return _report(taus, errors, failed, band)


def imex_comparison(a: RealField, nu: float, taus: Sequence[float],
                    band: tuple[float, float] = (1.8, 2.3),
                    substep: SubstepControl = DEFAULT_CONTROL) -> ConvergenceReport:
    """H1 distance between one Strang step and one IMEX step over a step ladder."""
    taus = _validate_ladder(taus)
    errors, failed = [], {}
    for tau in taus:
        cfg = SchemeConfig(nu=nu, tau=tau, grid_points=a.grid.n_points, substep=substep)
        try:
            diff = strang_step(a, cfg) - imex_step(a, tau, nu)
        except SolverError as exc:
            failed[tau] = str(exc)
            errors.append(None)
            continue
        errors.append(sobolev_norm(diff, 1.0))
    if all(e == 0.0 for e in errors if e is not None):
        return ConvergenceReport(taus, errors, math.nan, [], False, band, failed,
                                 {"identically_zero": True})
    return _report(taus, errors, failed, band)


# --- energy dissipation ------------------------------------------------------------------


@dataclass(frozen=True)
class DissipationRow:
    step: int
    energy: float
    residual: float
    flagged: bool
    strict_decrease: Optional[bool]


@dataclass
class DissipationResult:
    rows: list[DissipationRow]
    tau: float
    tail_start: int
    tail_energy_max: Optional[float]
    failed_at: Optional[int] = None
    error: Optional[str] = None

    @property
    def flagged_rows(self) -> list[DissipationRow]:
        return [r for r in self.rows if r.flagged and r.strict_decrease is not None]

    @property
    def verdict(self) -> bool:
        """Every flagged step with a successor strictly lowered the energy."""
        return self.failed_at is None and all(r.strict_decrease for r in self.flagged_rows)


def dissipation_experiment(spec: ExperimentSpec, tau: float,
                           residual_threshold: float = 1.0) -> DissipationResult:
    """Track energy across steps, flagging those that start with residual >= threshold."""
    n_steps = steps_for(spec.horizon, tau)
    u0 = spec.initial_field()
    g = u0.grid
    cfg = spec.config(tau, n_steps)
    energies, residuals = [], []
    failed_at, error = None, None
    it = iterate(u0, cfg)
    n = 0
    while True:
        try:
            n, uh = next(it)
        except StopIteration:
            break
        except SolverError as exc:
            failed_at, error = n + 1, str(exc)
            break
        values = unhat(uh, g.n_points)
        if not np.all(np.isfinite(values)):
            failed_at, error = n, "non-finite field"
            break
        energies.append(energy_hat(uh, values, g, spec.nu))
        residuals.append(residual_hat(uh, g, spec.nu))
    rows = []
    for i, (e, r) in enumerate(zip(energies, residuals)):
        nxt = energies[i + 1] if i + 1 < len(energies) else None
        rows.append(DissipationRow(i, e, r, r >= residual_threshold,
                                   None if nxt is None else bool(nxt < e)))
    tail_start = math.ceil(1.0 / tau)
    tail = energies[tail_start:]
    return DissipationResult(rows, tau, tail_start, max(tail) if tail else None, failed_at, error)


def largest_dissipative_tau(spec: ExperimentSpec, taus: Sequence[float]) -> Optional[float]:
    """Largest step in ``taus`` whose dissipation verdict holds (scanned from the largest down)."""
    for tau in sorted(taus, reverse=True):
        try:
            if dissipation_experiment(spec, tau).verdict:
                return tau
        except ValueError:
            continue
    return None


def bracket_stable_tau(spec: ExperimentSpec, taus: Sequence[float], growth_limit: float = 10.0) -> Optional[float]:
    """Largest step in ``taus`` whose run to ``spec.horizon`` stays finite with bounded L2.

    A run counts as stable when no step fails and ``||u^n||_2`` never exceeds
    ``growth_limit`` times its initial value.
    """
    u0 = spec.initial_field()
    l2_0 = max(l2_norm(u0.values), 1e-300)
    for tau in sorted(taus, reverse=True):
        try:
            cfg = spec.config(tau, steps_for(spec.horizon, tau))
            ok = True
            for _, uh in iterate(u0, cfg):
                v = unhat(uh, u0.grid.n_points)
                if not np.all(np.isfinite(v)) or l2_norm(v) > growth_limit * l2_0:
                    ok = False
                    break
        except (SolverError, ValueError):
            continue
        if ok:
            return tau
    return None
