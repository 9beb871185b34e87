"""Config loading helpers.

A run config is one YAML file. Every key has a default from the reference
microgrid (1000 DERs, 10 DG + 50 BESS, 2 WT + 1 PV), so an empty file is a
valid scenario-1 config. Unknown keys are rejected.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .der_population import build_population
from .forecast import PRESET, SYNTHETIC, build_forecast
from .models import (
    BESS,
    DG,
    DerLimits,
    HorizonConfig,
    MarketConfig,
    PopulationSpec,
    PvModel,
    RunSetup,
    SolverConfig,
    UnitClass,
    WtModel,
)
from .res_models import calibrate_uncertainty, res_series
from .validators import ConfigurationError, validate_pv_model, validate_wt_model

logger = logging.getLogger(__name__)

SERIES_KEYS = ("irradiance", "wind_speed", "irr_uncertainty", "wind_uncertainty", "temperature")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HorizonSection(_Section):
    n_k: int = Field(24, ge=1)
    horizon_mode: Literal["shrinking", "fixed"] = "shrinking"
    fixed_horizon_length: int = Field(6, ge=1)
    interval_duration: float = Field(1.0, gt=0)
    j3_weight: float = Field(1.0, ge=0)


class LimitsSection(_Section):
    a_min: float = 0.0
    a_max: float = 1.0
    gamma_min: float = 0.0
    gamma_max: float = 1.0
    beta_min: float = 0.0
    beta_max: float = 100.0


class PopulationSection(_Section):
    count: int = Field(1000, ge=0)
    a_classes: List[float] = Field(default_factory=lambda: [0.9, 0.93, 0.96], min_length=1)
    fractions: Optional[List[float]] = None
    gamma: float = 1.0
    beta: float = 40.0
    p_max: float = 30.0
    soc_set: float = 0.7
    soc_max: float = 1.0
    p_rated: float = Field(6.0, gt=0)
    initial_soc: Optional[List[float]] = None
    initial_soc_range: Optional[List[float]] = None
    limits: LimitsSection = Field(default_factory=LimitsSection)

    @model_validator(mode="after")
    def _check_shapes(self) -> "PopulationSection":
        if self.fractions is not None and len(self.fractions) != len(self.a_classes):
            raise ValueError(f"{len(self.fractions)} fractions for {len(self.a_classes)} a_classes")
        if self.initial_soc is not None and len(self.initial_soc) != self.count:
            raise ValueError(f"initial_soc has {len(self.initial_soc)} values for count={self.count}")
        if self.initial_soc_range is not None:
            if self.initial_soc is not None:
                raise ValueError("give either initial_soc or initial_soc_range, not both")
            if len(self.initial_soc_range) != 2:
                raise ValueError(f"initial_soc_range needs [low, high], got {self.initial_soc_range}")
            low, high = self.initial_soc_range
            if not 0.0 <= low <= high <= self.soc_max:
                raise ValueError(
                    f"initial_soc_range must satisfy 0 <= low <= high <= soc_max, got {self.initial_soc_range}"
                )
        return self


class UnitSection(_Section):
    name: str
    kind: Literal["DG", "BESS"]
    count: int = Field(ge=0)
    bid_ladder: List[float] = Field(min_length=1)
    c_energy: float = Field(ge=0)
    c_start: float = Field(0.0, ge=0)
    c_noload: float = Field(0.0, ge=0)
    energy_budget: Optional[float] = Field(None, ge=0)

    @field_validator("bid_ladder")
    @classmethod
    def _positive_bids(cls, value: List[float]) -> List[float]:
        if any(b <= 0 for b in value):
            raise ValueError("bids must be > 0")
        return value


def _default_units() -> List[UnitSection]:
    return [
        UnitSection(name="DG", kind=DG, count=10, bid_ladder=[50.0, 100.0, 150.0, 200.0], c_energy=1.0, c_start=2.0, c_noload=1.0),
        UnitSection(name="BESS", kind=BESS, count=50, bid_ladder=[10.0, 20.0, 30.0, 40.0], c_energy=0.1),
    ]


class MarketSection(_Section):
    p_base: Union[float, List[float]] = 15.0
    feeder_capacity: Union[float, List[float]] = 6000.0
    price_bids: List[float] = Field(default_factory=lambda: [15.0, 25.0, 35.0])
    constant_price: float = 15.0


class WindSection(_Section):
    count: int = Field(2, ge=0)
    mode: Literal["physics", "envelope"] = "physics"
    v_min: float = 3.5
    v_max: float = 25.0
    p_max: float = 2000.0
    rho: float = 1.23
    area: float = 8495.0
    cp: float = 0.4


class PvSection(_Section):
    count: int = Field(1, ge=0)
    mode: Literal["ramp", "envelope", "curve"] = "ramp"
    irr_min: float = 100.0
    irr_max: float = 1050.0
    p_max: float = 3000.0
    i_scs: float = 7.84
    g_as: float = 1000.0
    delta_isc: float = 0.102
    t_s: float = 25.0
    r_s: float = 0.393
    r_sh: float = 100.0
    ideality: float = 1.3
    n_cells: int = Field(60, ge=1)
    v_oc_cell: float = 0.6
    i_sat: Optional[float] = None


class ResSection(_Section):
    wind: WindSection = Field(default_factory=WindSection)
    pv: PvSection = Field(default_factory=PvSection)


class SyntheticSection(_Section):
    peak_irradiance: float = Field(850.0, ge=0)
    sunrise: float = 6.0
    sunset: float = 19.0
    wind_mean: float = Field(5.5, ge=0)
    night_boost: float = 1.5
    noise: float = Field(0.0, ge=0)
    irr_uncertainty_fraction: float = Field(0.2, ge=0)
    wind_uncertainty: float = Field(0.7, ge=0)


class SeriesSection(_Section):
    """Each source is 'preset', 'synthetic' or a path to a two-column file."""

    irradiance: str = PRESET
    wind_speed: str = PRESET
    irr_uncertainty: Optional[str] = None
    wind_uncertainty: Optional[str] = None
    temperature: Optional[str] = None  # file only; None = cell temperature t_s
    uncertainty_scale: float = Field(1.0, ge=0)
    calibrate_ratio: Optional[float] = Field(None, gt=0, lt=1)
    synthetic: SyntheticSection = Field(default_factory=SyntheticSection)

    @model_validator(mode="after")
    def _check_sources(self) -> "SeriesSection":
        for key in SERIES_KEYS:
            source = getattr(self, key)
            if source is None or source in (PRESET, SYNTHETIC):
                if key == "temperature" and source is not None:
                    raise ValueError("temperature must be a series file")
                continue
            if not Path(source).exists():
                raise ValueError(f"{key}: series file not found: {source}")
        return self


class SolverSection(_Section):
    feasibility_tol: float = Field(1e-7, gt=0)
    integrality_tol: float = Field(1e-6, gt=0)
    optimality_gap: float = Field(1e-9, ge=0)
    node_limit: int = Field(20000, ge=1)
    dispatch_method: Literal["decomposed", "monolithic"] = "decomposed"
    unserved_penalty_factor: float = Field(1000.0, ge=0)


class OutputSection(_Section):
    out_dir: str = "output"


class RunConfig(_Section):
    scenario: Literal[1, 2, 3] = 1
    seed: int = 0
    horizon: HorizonSection = Field(default_factory=HorizonSection)
    population: PopulationSection = Field(default_factory=PopulationSection)
    units: List[UnitSection] = Field(default_factory=_default_units)
    market: MarketSection = Field(default_factory=MarketSection)
    res: ResSection = Field(default_factory=ResSection)
    series: SeriesSection = Field(default_factory=SeriesSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _check_run(self) -> "RunConfig":
        n_k = self.horizon.n_k
        for key in ("p_base", "feeder_capacity"):
            value = getattr(self.market, key)
            if isinstance(value, list) and len(value) != n_k:
                raise ValueError(f"market.{key} has {len(value)} values, n_k is {n_k}")
        if self.scenario == 3:
            self.require_uncertainty()
        return self

    def require_uncertainty(self) -> None:
        if self.series.irr_uncertainty is None or self.series.wind_uncertainty is None:
            raise ValueError("scenario 3 needs series.irr_uncertainty and series.wind_uncertainty")


def load_yaml(path: Path) -> Dict[str, Any]:
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def _resolve_paths(data: Dict[str, Any], base_dir: Path) -> Dict[str, Any]:
    series = data.get("series")
    if not isinstance(series, dict):
        return data
    series = dict(series)
    for key in SERIES_KEYS:
        source = series.get(key)
        if isinstance(source, str) and source not in (PRESET, SYNTHETIC):
            path = Path(source)
            if not path.is_absolute():
                path = base_dir / path
            series[key] = str(path.resolve())
    return {**data, "series": series}


def from_mapping(data: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError(f"config must be a mapping, got {type(data).__name__}")
    data = _resolve_paths(data, base_dir or Path.cwd())
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from None


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = load_yaml(path)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: YAML parse error: {exc}") from None
    cfg = from_mapping(data, path.parent)
    logger.debug("loaded config %s (scenario %d)", path, cfg.scenario)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False, allow_unicode=True)


def with_overrides(cfg: RunConfig, **updates: Any) -> RunConfig:
    """Copy of ``cfg`` with dotted-key overrides (``horizon.n_k=6``), re-validated."""
    data = cfg.model_dump(mode="json")
    for dotted, value in updates.items():
        if value is None:
            continue
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return from_mapping(data)


# --- config -> domain types ----------------------------------------------------


def _per_interval(value: Union[float, List[float]], n_k: int) -> tuple:
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    return tuple(float(value) for _ in range(n_k))


def wt_models(cfg: RunConfig) -> List[WtModel]:
    section = cfg.res.wind
    model = WtModel(
        v_min=section.v_min, v_max=section.v_max, p_max=section.p_max,
        rho=section.rho, area=section.area, cp=section.cp,
    )
    validate_wt_model(model)
    return [model] * section.count


def pv_models(cfg: RunConfig) -> List[PvModel]:
    data = cfg.res.pv.model_dump(exclude={"count", "mode"})
    model = PvModel(**data)
    validate_pv_model(model)
    return [model] * cfg.res.pv.count


def unit_classes(cfg: RunConfig) -> tuple:
    return tuple(
        UnitClass(
            name=u.name,
            kind=u.kind,
            count=u.count,
            bid_ladder=tuple(u.bid_ladder),
            c_energy=u.c_energy,
            c_start=u.c_start,
            c_noload=u.c_noload,
            energy_budget=u.energy_budget,
        )
        for u in cfg.units
    )


def population_spec(cfg: RunConfig) -> PopulationSpec:
    p = cfg.population
    return PopulationSpec(
        count=p.count,
        a_classes=tuple(p.a_classes),
        fractions=tuple(p.fractions) if p.fractions is not None else None,
        gamma=p.gamma,
        beta=p.beta,
        p_max=p.p_max,
        soc_set=p.soc_set,
        soc_max=p.soc_max,
        p_rated=p.p_rated,
        seed=cfg.seed,
        initial_soc=tuple(p.initial_soc) if p.initial_soc is not None else None,
        initial_soc_range=tuple(p.initial_soc_range) if p.initial_soc_range is not None else None,
    )


def build_run_setup(cfg: RunConfig, scenario: Optional[int] = None) -> RunSetup:
    """Turn a validated config into the domain objects run_scenario needs."""
    scenario = cfg.scenario if scenario is None else scenario
    if scenario == 3:
        try:
            cfg.require_uncertainty()
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    n_k = cfg.horizon.n_k
    forecast = build_forecast(cfg)
    wts = wt_models(cfg)
    pvs = pv_models(cfg)
    wind_mode = cfg.res.wind.mode
    solar_mode = cfg.res.pv.mode
    res_det = res_series(forecast, wts, pvs, False, wind_mode, solar_mode)

    res_worst = None
    scale = cfg.series.uncertainty_scale
    if forecast.has_uncertainty:
        if cfg.series.calibrate_ratio is not None:
            scale = calibrate_uncertainty(forecast, wts, pvs, cfg.series.calibrate_ratio, wind_mode, solar_mode)
        res_worst = res_series(forecast, wts, pvs, True, wind_mode, solar_mode, scale)

    limits = DerLimits(**cfg.population.limits.model_dump())
    setup = RunSetup(
        scenario=scenario,
        horizon=HorizonConfig(**cfg.horizon.model_dump()),
        solver=SolverConfig(**cfg.solver.model_dump()),
        market=MarketConfig(
            p_base=_per_interval(cfg.market.p_base, n_k),
            feeder_capacity=_per_interval(cfg.market.feeder_capacity, n_k),
            price_bids=tuple(cfg.market.price_bids),
            constant_price=cfg.market.constant_price,
        ),
        classes=unit_classes(cfg),
        population=build_population(population_spec(cfg), limits),
        res_deterministic=res_det,
        res_worst=res_worst,
        extra={"uncertainty_scale": scale, "forecast": forecast},
    )
    return setup
