"""JSON run configuration: sections ``grid``, ``scheme``, ``experiment``, ``output``.

Unknown keys are rejected. ``ConfigError.path`` points at the offending field,
e.g. ``scheme.tau``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from chsplit.errors import ConfigError
from chsplit.harness import ExperimentSpec, RandomBandlimited, SingleMode, TrigPoly
from chsplit.propagators import SubstepControl
from chsplit.schemes import Scheme, SchemeConfig
from chsplit.spectral import Grid


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Strict):
    n_points: int = 256


class SubstepSection(_Strict):
    safety: float = 0.5
    max_substeps: int = 1_000_000


class SchemeSection(_Strict):
    name: Literal["strang", "strang_shifted", "lie", "imex"] = "strang"
    nu: float = Field(gt=0)
    tau: Optional[float] = Field(default=None, gt=0)
    n_steps: Optional[int] = Field(default=None, ge=0)
    substep: SubstepSection = SubstepSection()


class SingleModeData(_Strict):
    kind: Literal["single_mode"]
    amplitude: float
    wavenumber: int = Field(ge=1)


class TrigPolyTerm(_Strict):
    k: int = Field(ge=1)
    cos: float = 0.0
    sin: float = 0.0


class TrigPolyData(_Strict):
    kind: Literal["trig_poly"]
    coefficients: list[TrigPolyTerm]


class RandomData(_Strict):
    kind: Literal["random_bandlimited"]
    seed: int
    band: int = Field(ge=1)
    amplitude: float


InitialDataSection = Annotated[
    Union[SingleModeData, TrigPolyData, RandomData], Field(discriminator="kind")
]


class ExperimentSection(_Strict):
    initial_data: Optional[InitialDataSection] = None
    horizon: float = Field(default=1.0, gt=0)
    taus: Optional[list[float]] = None
    tolerance_band: Optional[tuple[float, float]] = None
    residual_threshold: float = 1.0
    expected_failure: bool = False
    betas: Optional[list[float]] = None
    ps: Optional[list[Union[float, Literal["inf"]]]] = None
    variants: list[Literal["K", "K2"]] = ["K", "K2"]
    fit_max_beta: float = 1e-2
    exponent_tolerance: float = 0.05

    @field_validator("ps")
    @classmethod
    def _p_range(cls, v):
        for p in v or []:
            if p != "inf" and p < 1:
                raise ValueError("p must lie in [1, inf]")
        return v


class OutputSection(_Strict):
    snapshot_every: Optional[int] = Field(default=None, ge=1)
    hs_orders: list[float] = []


class RunConfig(_Strict):
    grid: GridSection = GridSection()
    scheme: SchemeSection
    experiment: ExperimentSection = ExperimentSection()
    output: OutputSection = OutputSection()

    # --- conversions -------------------------------------------------------

    def substep_control(self) -> SubstepControl:
        return SubstepControl(self.scheme.substep.safety, self.scheme.substep.max_substeps)

    def initial_data(self):
        d = self.experiment.initial_data
        if d is None:
            raise ConfigError("required for this command", "experiment.initial_data")
        if isinstance(d, SingleModeData):
            return SingleMode(d.amplitude, d.wavenumber)
        if isinstance(d, TrigPolyData):
            return TrigPoly(tuple((t.k, t.cos, t.sin) for t in d.coefficients))
        return RandomBandlimited(d.seed, d.band, d.amplitude)

    def experiment_spec(self, band=(-math.inf, math.inf)) -> ExperimentSpec:
        return ExperimentSpec(
            initial_data=self.initial_data(),
            nu=self.scheme.nu,
            horizon=self.experiment.horizon,
            scheme=Scheme(self.scheme.name),
            tolerance_band=tuple(self.experiment.tolerance_band or band),
            grid_points=self.grid.n_points,
            substep=self.substep_control(),
        )

    def scheme_config(self) -> SchemeConfig:
        s = self.scheme
        if s.tau is None:
            raise ConfigError("required for this command", "scheme.tau")
        if s.n_steps is None:
            raise ConfigError("required for this command", "scheme.n_steps")
        return SchemeConfig(nu=s.nu, tau=s.tau, scheme=Scheme(s.name), n_steps=s.n_steps,
                            grid_points=self.grid.n_points, substep=self.substep_control())

    def echo(self) -> dict:
        """Fully resolved configuration, with random data replaced by its coefficients."""
        out = self.model_dump(mode="json")
        d = self.experiment.initial_data
        if isinstance(d, RandomData):
            poly = RandomBandlimited(d.seed, d.band, d.amplitude).materialize()
            out["experiment"]["initial_data"] = {
                "kind": "trig_poly",
                "coefficients": [{"k": k, "cos": c, "sin": s} for k, c, s in poly.coefficients],
            }
        return out


def parse_config(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"])
        raise ConfigError(err["msg"], path) from None
    try:
        Grid(cfg.grid.n_points)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "grid.n_points") from None
    try:
        cfg.substep_control()
    except ValueError as exc:
        raise ConfigError(str(exc), "scheme.substep") from None
    if cfg.scheme.name == "imex" and cfg.scheme.tau is not None and cfg.scheme.tau >= 4 * cfg.scheme.nu:
        raise ConfigError("IMEX requires tau < 4 nu", "scheme.tau")
    return cfg


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    return parse_config(data)
