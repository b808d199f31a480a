"""Time-marching schemes built from the sub-propagators, and the time loop."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chsplit.diagnostics import DiagnosticsRecord, diagnose_hat
from chsplit.errors import DivergenceError, SolverError
from chsplit.propagators import (
    DEFAULT_CONTROL,
    LinearKind,
    SubflowKind,
    SubstepControl,
    imex_step_hat,
    linear_step_hat,
    nonlinear_subflow_hat,
    one_step_nonlinear_hat,
)
from chsplit.spectral import Grid, RealField, hat, unhat

log = logging.getLogger(__name__)


class Scheme(enum.Enum):
    STRANG = "strang"  # S_L(tau/2) S_N(tau) S_L(tau/2)
    STRANG_SHIFTED = "strang_shifted"  # S_N(tau) S_L(tau/2)
    LIE = "lie"  # S_L^(1)(tau) S_N^(2)(tau)
    IMEX = "imex"


@dataclass(frozen=True)
class SchemeConfig:
    nu: float
    tau: float
    scheme: Scheme = Scheme.STRANG
    n_steps: int = 1
    grid_points: int = 256
    substep: SubstepControl = DEFAULT_CONTROL

    def __post_init__(self):
        if not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps}")
        if self.scheme is Scheme.IMEX and self.tau >= 4.0 * self.nu:
            raise ValueError(f"IMEX requires tau < 4 nu (tau={self.tau}, nu={self.nu})")
        Grid(self.grid_points)

    @property
    def horizon(self) -> float:
        return self.n_steps * self.tau

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_points)


# --- one step in amplitude space ---------------------------------------------


def strang_compose(uh, half_linear, nonlinear):
    """Linear-nonlinear-linear composition; half steps are never fused across calls."""
    return half_linear(nonlinear(half_linear(uh)))


def _parts(cfg: SchemeConfig, grid: Grid):
    def half_linear(vh):
        return linear_step_hat(vh, 0.5 * cfg.tau, cfg.nu, grid.kr)

    def nonlinear(vh):
        return nonlinear_subflow_hat(vh, cfg.tau, grid, SubflowKind.CUBIC_ONLY, cfg.substep)

    return half_linear, nonlinear


def shifted_step_hat(vh, cfg: SchemeConfig, grid: Grid):
    half_linear, nonlinear = _parts(cfg, grid)
    return nonlinear(half_linear(vh))


def strang_step_hat(uh, cfg: SchemeConfig, grid: Grid):
    return strang_compose(uh, *_parts(cfg, grid))


def lie_step_hat(uh, cfg: SchemeConfig, grid: Grid):
    return linear_step_hat(one_step_nonlinear_hat(uh, cfg.tau, grid), cfg.tau, cfg.nu,
                           grid.kr, LinearKind.BIHARMONIC_ONLY)


def imex_scheme_step_hat(uh, cfg: SchemeConfig, grid: Grid):
    return imex_step_hat(uh, cfg.tau, cfg.nu, grid)


_STEPPERS = {
    Scheme.STRANG: strang_step_hat,
    Scheme.STRANG_SHIFTED: shifted_step_hat,
    Scheme.LIE: lie_step_hat,
    Scheme.IMEX: imex_scheme_step_hat,
}


def stepper(scheme: Scheme):
    return _STEPPERS[Scheme(scheme)]


def _check_grid(u: RealField, cfg: SchemeConfig):
    if u.grid.n_points != cfg.grid_points:
        raise ValueError(
            f"field has {u.grid.n_points} points but config asks for {cfg.grid_points}"
        )


def _check_mean_zero(u: RealField):
    scale = max(1.0, float(np.max(np.abs(u.values))))
    if abs(u.mean()) > 1e-12 * scale:
        raise ValueError(f"initial data must have zero mean (mean={u.mean():.3e})")


def _apply(step, u: RealField, cfg: SchemeConfig) -> RealField:
    _check_grid(u, cfg)
    g = u.grid
    return RealField(g, unhat(step(hat(u.values), cfg, g), g.n_points))


def strang_step(u: RealField, cfg: SchemeConfig) -> RealField:
    """``S_L(tau/2) S_N(tau) S_L(tau/2) u``."""
    return _apply(strang_step_hat, u, cfg)


def shifted_step(v: RealField, cfg: SchemeConfig) -> RealField:
    """``S_N(tau) S_L(tau/2) v``: the Strang step without its trailing half step."""
    return _apply(shifted_step_hat, v, cfg)


def lie_step(u: RealField, cfg: SchemeConfig) -> RealField:
    """First-order step ``exp(-tau nu d^4)`` after the explicit update ``u + tau (u^3 - u)_xx``."""
    return _apply(lie_step_hat, u, cfg)


def scheme_step(u: RealField, cfg: SchemeConfig) -> RealField:
    return _apply(stepper(cfg.scheme), u, cfg)


# --- time loop ------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    step_index: int
    time: float
    diagnostics: DiagnosticsRecord
    field_snapshot: Optional[RealField] = None


@dataclass
class Trajectory:
    """Records of a run. ``failed_at``/``error`` are set when a step raised."""

    records: list[TrajectoryRecord] = field(default_factory=list)
    failed_at: Optional[int] = None
    error: Optional[SolverError] = None

    @property
    def ok(self) -> bool:
        return self.failed_at is None

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r.diagnostics, name) for r in self.records])

    def snapshots(self) -> list[TrajectoryRecord]:
        return [r for r in self.records if r.field_snapshot is not None]


def default_snapshot_every(n_steps: int) -> int:
    return max(1, n_steps // 100)


def iterate(u0: RealField, cfg: SchemeConfig, n_steps: Optional[int] = None):
    """Yield ``(n, u_hat)`` for ``n = 0 .. n_steps`` without diagnostics."""
    _check_grid(u0, cfg)
    _check_mean_zero(u0)
    g = u0.grid
    step = stepper(cfg.scheme)
    uh = hat(u0.values)
    uh[0] = 0.0
    yield 0, uh
    for n in range(1, (cfg.n_steps if n_steps is None else n_steps) + 1):
        uh = step(uh, cfg, g)
        yield n, uh


def run(u0: RealField, cfg: SchemeConfig, snapshot_every: Optional[int] = None,
        hs_orders: Sequence[float] = ()) -> Trajectory:
    """Advance ``cfg.n_steps`` steps, recording diagnostics every step.

    Snapshots are kept every ``snapshot_every`` steps (and always for step 0
    and the last step). A ``SolverError`` stops the loop; the records gathered
    so far are returned with ``failed_at`` set to the index of the failed step.
    """
    if snapshot_every is None:
        snapshot_every = default_snapshot_every(cfg.n_steps)
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    g = u0.grid
    traj = Trajectory()
    it = iterate(u0, cfg)
    n = 0
    while True:
        try:
            n, uh = next(it)
        except StopIteration:
            break
        except SolverError as exc:
            traj.failed_at = n + 1
            traj.error = exc
            log.warning("step %d failed: %s", n + 1, exc)
            break
        values = unhat(uh, g.n_points)
        if not np.all(np.isfinite(values)):
            traj.failed_at = n
            traj.error = DivergenceError(f"non-finite field at step {n}")
            log.warning("step %d diverged", n)
            break
        diag = diagnose_hat(uh, values, g, cfg.nu, hs_orders)
        snap = None
        if n % snapshot_every == 0 or n == cfg.n_steps:
            snap = RealField(g, values)
        traj.records.append(TrajectoryRecord(n, n * cfg.tau, diag, snap))
    return traj
