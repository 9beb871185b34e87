"""Parameter validation rules and the project's exception hierarchy."""

from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

from .models import (
    BESS,
    DG,
    DerLimits,
    DerParams,
    DerPopulation,
    HorizonConfig,
    MarketConfig,
    PvModel,
    UnitClass,
    WtModel,
)

BETZ_LIMIT = 0.593
HORIZON_MODES = ("shrinking", "fixed")


class MicrogridError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigurationError(MicrogridError):
    """A parameter or config value is out of its admissible range."""


class InputError(MicrogridError):
    """Bad input data: negative meteorological values, malformed series, length mismatch."""


class NumericalError(MicrogridError):
    """A numerical routine could not converge or bracket its root."""


class ModelError(MicrogridError):
    """A MILP model was built with inconsistent variables or constraints."""


class OracleRefusal(MicrogridError):
    """The brute-force oracle refuses an instance above its size cap."""


def _check_range(name: str, value: float, low: float, high: float) -> None:
    if not (low <= value <= high) or math.isnan(value):
        raise ConfigurationError(f"{name}={value} is outside [{low}, {high}]")


def validate_der_params(params: DerParams, limits: Optional[DerLimits] = None) -> None:
    limits = limits or DerLimits()
    if not (0.0 <= limits.a_min <= limits.a_max <= 1.0):
        raise ConfigurationError(f"dissipation bounds [{limits.a_min}, {limits.a_max}] must lie in [0, 1]")
    _check_range("a", params.a, limits.a_min, limits.a_max)
    _check_range("beta", params.beta, limits.beta_min, limits.beta_max)
    _check_range("gamma", params.gamma, limits.gamma_min, limits.gamma_max)
    if not (0.0 <= params.soc_set < params.soc_max <= 1.0):
        raise ConfigurationError(
            f"need 0 <= soc_set < soc_max <= 1, got soc_set={params.soc_set}, soc_max={params.soc_max}"
        )
    if not params.p_rated > 0:
        raise ConfigurationError(f"p_rated must be > 0, got {params.p_rated}")


def validate_population(population: DerPopulation, limits: Optional[DerLimits] = None) -> None:
    """Vectorised form of validate_der_params; names the first offending DER."""
    limits = limits or DerLimits()
    if len(population) == 0:
        return
    checks = (
        ("a", population.a, limits.a_min, limits.a_max),
        ("beta", population.beta, limits.beta_min, limits.beta_max),
        ("gamma", population.gamma, limits.gamma_min, limits.gamma_max),
    )
    for name, values, low, high in checks:
        bad = np.flatnonzero(~((values >= low) & (values <= high)))
        if bad.size:
            i = int(bad[0])
            raise ConfigurationError(f"DER {i}: {name}={values[i]} is outside [{low}, {high}]")
    bad = np.flatnonzero(
        ~((population.soc_set >= 0) & (population.soc_set < population.soc_max) & (population.soc_max <= 1))
    )
    if bad.size:
        i = int(bad[0])
        raise ConfigurationError(
            f"DER {i}: need 0 <= soc_set < soc_max <= 1, "
            f"got soc_set={population.soc_set[i]}, soc_max={population.soc_max[i]}"
        )
    bad = np.flatnonzero(~(population.p_rated > 0))
    if bad.size:
        raise ConfigurationError(f"DER {int(bad[0])}: p_rated must be > 0")
    bad = np.flatnonzero(~((population.soc >= 0) & (population.soc <= population.soc_max)))
    if bad.size:
        i = int(bad[0])
        raise ConfigurationError(f"DER {i}: soc={population.soc[i]} is outside [0, {population.soc_max[i]}]")


def validate_wt_model(model: WtModel) -> None:
    if not (0.0 < model.v_min < model.v_max):
        raise ConfigurationError(f"need 0 < v_min < v_max, got v_min={model.v_min}, v_max={model.v_max}")
    if not (0.0 < model.cp <= BETZ_LIMIT):
        raise ConfigurationError(f"cp={model.cp} must be in (0, {BETZ_LIMIT}] (Betz limit)")
    for name in ("rho", "area", "p_max"):
        if not getattr(model, name) > 0:
            raise ConfigurationError(f"wind turbine {name} must be > 0")


def validate_pv_model(model: PvModel) -> None:
    if not (0.0 <= model.irr_min < model.irr_max):
        raise ConfigurationError(f"need 0 <= irr_min < irr_max, got {model.irr_min}, {model.irr_max}")
    for name in ("i_scs", "g_as", "r_sh", "p_max", "ideality"):
        if not getattr(model, name) > 0:
            raise ConfigurationError(f"pv {name} must be > 0")
    if model.r_s < 0:
        raise ConfigurationError(f"pv r_s must be >= 0, got {model.r_s}")
    if model.n_cells < 1:
        raise ConfigurationError(f"pv n_cells must be >= 1, got {model.n_cells}")
    if model.i_sat is not None and not model.i_sat > 0:
        raise ConfigurationError(f"pv i_sat must be > 0, got {model.i_sat}")


def validate_unit_class(unit: UnitClass) -> None:
    if unit.kind not in (DG, BESS):
        raise ConfigurationError(f"unit {unit.name!r}: kind must be DG or BESS, got {unit.kind!r}")
    if unit.count < 1:
        raise ConfigurationError(f"unit {unit.name!r}: count must be >= 1, got {unit.count}")
    ladder = list(unit.bid_ladder)
    if not ladder or any(b <= 0 for b in ladder) or any(b2 <= b1 for b1, b2 in zip(ladder, ladder[1:])):
        raise ConfigurationError(f"unit {unit.name!r}: bid_ladder must be strictly ascending and > 0")
    for name in ("c_energy", "c_start", "c_noload"):
        if getattr(unit, name) < 0:
            raise ConfigurationError(f"unit {unit.name!r}: {name} must be >= 0")
    if unit.kind == BESS and (unit.c_start or unit.c_noload):
        raise ConfigurationError(f"unit {unit.name!r}: BESS classes carry no start or no-load cost")
    if unit.energy_budget is not None:
        if unit.kind != BESS:
            raise ConfigurationError(f"unit {unit.name!r}: energy_budget applies to BESS classes only")
        if unit.energy_budget < 0:
            raise ConfigurationError(f"unit {unit.name!r}: energy_budget must be >= 0")


def validate_unit_classes(units: Iterable[UnitClass]) -> None:
    seen = set()
    for unit in units:
        validate_unit_class(unit)
        if unit.name in seen:
            raise ConfigurationError(f"duplicate unit class name {unit.name!r}")
        seen.add(unit.name)


def validate_market_config(market: MarketConfig, n_k: int) -> None:
    bids = list(market.price_bids)
    if not bids:
        raise ConfigurationError("price_bids must not be empty")
    if any(b2 <= b1 for b1, b2 in zip(bids, bids[1:])):
        raise ConfigurationError(f"price_bids must be strictly ascending, got {bids}")
    if len(market.p_base) != n_k or len(market.feeder_capacity) != n_k:
        raise ConfigurationError(
            f"p_base/feeder_capacity need {n_k} values, got {len(market.p_base)}/{len(market.feeder_capacity)}"
        )
    if any(not c > 0 for c in market.feeder_capacity):
        raise ConfigurationError("feeder_capacity must be > 0 in every interval")


def validate_horizon(horizon: HorizonConfig) -> None:
    if horizon.n_k < 1:
        raise ConfigurationError(f"n_k must be >= 1, got {horizon.n_k}")
    if horizon.horizon_mode not in HORIZON_MODES:
        raise ConfigurationError(f"horizon_mode must be one of {HORIZON_MODES}, got {horizon.horizon_mode!r}")
    if horizon.fixed_horizon_length < 1:
        raise ConfigurationError(f"fixed_horizon_length must be >= 1, got {horizon.fixed_horizon_length}")
    if horizon.j3_weight < 0:
        raise ConfigurationError(f"j3_weight must be >= 0, got {horizon.j3_weight}")
    if not horizon.interval_duration > 0:
        raise ConfigurationError("interval_duration must be > 0")
