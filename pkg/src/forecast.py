"""Meteorological input series: CSV files, built-in presets, synthetic days.

The presets are hand-digitised 24-point approximations of a clear spring
day (irradiance in W/m^2, wind speed in m/s). They are approximate and only
meant to give the scenarios a realistic shape.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from .models import ResForecast
from .validators import ConfigurationError, InputError

if TYPE_CHECKING:
    from .config_loader import RunConfig

logger = logging.getLogger(__name__)

PRESET = "preset"
SYNTHETIC = "synthetic"
_DELIMITERS = ",;\t "
_SNIFF_ROWS = 20

# 概略値（24点、手作業でデジタイズ）
_PRESET_IRRADIANCE = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 30.0, 120.0, 260.0, 420.0, 580.0, 720.0,
    820.0, 850.0, 800.0, 690.0, 540.0, 370.0, 190.0, 60.0, 0.0, 0.0, 0.0, 0.0,
)
_PRESET_WIND_SPEED = (
    6.4, 6.7, 6.9, 7.0, 6.8, 6.5, 6.0, 5.4, 4.8, 4.3, 3.9, 3.6,
    3.4, 3.5, 3.8, 4.2, 4.7, 5.2, 5.6, 5.9, 6.1, 6.2, 6.3, 6.4,
)
_PRESET_IRR_UNCERTAINTY = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0, 25.0, 50.0, 80.0, 110.0, 135.0,
    155.0, 160.0, 150.0, 130.0, 100.0, 70.0, 40.0, 15.0, 0.0, 0.0, 0.0, 0.0,
)
_PRESET_WIND_UNCERTAINTY = (
    0.6, 0.6, 0.7, 0.7, 0.7, 0.6, 0.6, 0.6, 0.7, 0.7, 0.7, 0.8,
    0.8, 0.8, 0.8, 0.7, 0.7, 0.7, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6,
)


def preset_irradiance() -> List[float]:
    return list(_PRESET_IRRADIANCE)


def preset_wind_speed() -> List[float]:
    return list(_PRESET_WIND_SPEED)


def preset_irr_uncertainty() -> List[float]:
    return list(_PRESET_IRR_UNCERTAINTY)


def preset_wind_uncertainty() -> List[float]:
    return list(_PRESET_WIND_UNCERTAINTY)


def _hours(n_k: int) -> np.ndarray:
    return np.arange(n_k) * (24.0 / n_k) if n_k else np.zeros(0)


def synthetic_irradiance(
    n_k: int = 24,
    peak: float = 850.0,
    sunrise: float = 6.0,
    sunset: float = 19.0,
    seed: int = 0,
    noise: float = 0.0,
) -> List[float]:
    """Half-sine day: zero outside (sunrise, sunset), ``peak`` at solar noon."""
    if not sunrise < sunset:
        raise ConfigurationError(f"sunrise ({sunrise}) must be before sunset ({sunset})")
    hours = _hours(n_k)
    phase = (hours - sunrise) / (sunset - sunrise)
    irr = np.where((phase > 0) & (phase < 1), peak * np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)
    if noise > 0:
        rng = np.random.default_rng(seed)
        irr = irr * (1.0 + rng.normal(0.0, noise, size=n_k))
    return [float(x) for x in np.maximum(irr, 0.0)]


def synthetic_wind(
    n_k: int = 24,
    mean: float = 5.5,
    night_boost: float = 1.5,
    seed: int = 0,
    noise: float = 0.0,
) -> List[float]:
    """Wind speed around ``mean`` with its maximum at midnight (windier nights)."""
    hours = _hours(n_k)
    wind = mean + night_boost * np.cos(2.0 * np.pi * hours / 24.0)
    if noise > 0:
        rng = np.random.default_rng(seed + 1)
        wind = wind + rng.normal(0.0, noise, size=n_k)
    return [float(x) for x in np.maximum(wind, 0.0)]


def _sniff_dialect(sample: str) -> csv.Dialect | type[csv.Dialect]:
    try:
        return csv.Sniffer().sniff(sample, delimiters=_DELIMITERS)
    except csv.Error:
        # 1行だけのファイルなど
        return csv.excel


def load_series(path: Path | str) -> List[float]:
    """Read a two-column series file: 0-based interval index, value.

    The delimiter (comma, semicolon, tab or space) is detected with
    ``csv.Sniffer``; a non-numeric first row is treated as a header.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"series file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        lines = [line for line in f.read().splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise InputError(f"{path}: series file is empty")
    dialect = _sniff_dialect("\n".join(lines[:_SNIFF_ROWS]))
    reader = csv.reader(lines, dialect, skipinitialspace=True)

    values = {}
    for lineno, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row if c.strip()]
        if len(cells) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
        try:
            index_value = float(cells[0])
        except ValueError:
            if lineno == 1:
                continue  # ヘッダー行
            raise InputError(f"{path}:{lineno}: non-numeric index {cells[0]!r}") from None
        if not index_value.is_integer() or index_value < 0:
            raise InputError(f"{path}:{lineno}: index must be a non-negative integer, got {cells[0]!r}")
        try:
            value = float(cells[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric value {cells[1]!r}") from None
        if not math.isfinite(value):
            raise InputError(f"{path}:{lineno}: value must be finite, got {cells[1]!r}")
        index = int(index_value)
        if index in values:
            raise InputError(f"{path}:{lineno}: duplicate index {index}")
        values[index] = value

    for expected in range(len(values)):
        if expected not in values:
            raise InputError(f"{path}: missing index {expected}")
    return [values[i] for i in range(len(values))]


def _resolve(
    source: Optional[str],
    label: str,
    n_k: int,
    preset: Sequence[float],
    synthetic: Sequence[float],
) -> Optional[List[float]]:
    if source is None:
        return None
    if source == PRESET:
        if n_k != len(preset):
            raise InputError(f"{label}: the preset has {len(preset)} intervals but n_k is {n_k}; use 'synthetic' or a file")
        series = list(preset)
    elif source == SYNTHETIC:
        series = list(synthetic)
    else:
        series = load_series(source)
    if len(series) != n_k:
        raise InputError(f"{label}: series has {len(series)} values, n_k is {n_k}")
    return series


def build_forecast(cfg: "RunConfig") -> ResForecast:
    n_k = cfg.horizon.n_k
    series = cfg.series
    synth = series.synthetic
    irradiance = synthetic_irradiance(n_k, synth.peak_irradiance, synth.sunrise, synth.sunset, cfg.seed, synth.noise)
    wind = synthetic_wind(n_k, synth.wind_mean, synth.night_boost, cfg.seed, synth.noise)
    irr_unc = [synth.irr_uncertainty_fraction * x for x in irradiance]
    wind_unc = [synth.wind_uncertainty for _ in range(n_k)]

    forecast = ResForecast(
        irradiance=tuple(_resolve(series.irradiance, "irradiance", n_k, _PRESET_IRRADIANCE, irradiance)),
        wind_speed=tuple(_resolve(series.wind_speed, "wind_speed", n_k, _PRESET_WIND_SPEED, wind)),
        irr_uncertainty=_as_tuple(
            _resolve(series.irr_uncertainty, "irr_uncertainty", n_k, _PRESET_IRR_UNCERTAINTY, irr_unc)
        ),
        wind_uncertainty=_as_tuple(
            _resolve(series.wind_uncertainty, "wind_uncertainty", n_k, _PRESET_WIND_UNCERTAINTY, wind_unc)
        ),
        temperature=_as_tuple(_resolve(series.temperature, "temperature", n_k, (), ())) if series.temperature else None,
    )
    for label, values in (("irr_uncertainty", forecast.irr_uncertainty), ("wind_uncertainty", forecast.wind_uncertainty)):
        if values is not None and any(v < 0 for v in values):
            raise InputError(f"{label}: uncertainty bounds must be non-negative")
    logger.debug("forecast built: %d intervals, uncertainty=%s", n_k, forecast.has_uncertainty)
    return forecast


def _as_tuple(values: Optional[List[float]]) -> Optional[tuple]:
    return tuple(values) if values is not None else None
