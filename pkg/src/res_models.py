"""Renewable power from irradiance and wind speed.

Wind: cut-in / cut-out envelope with the cubic aerodynamic law in between
(``physics``) or the literal hold-previous middle branch (``envelope``).
Solar: linear irradiance ramp (``ramp``), hold-previous (``envelope``) or
P-V curve scaling from the single-diode model (``curve``).
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .models import PvCurve, PvModel, ResForecast, WtModel
from .validators import ConfigurationError, InputError, NumericalError

logger = logging.getLogger(__name__)

BOLTZMANN = 1.380649e-23  # J/K
ELEMENTARY_CHARGE = 1.602176634e-19  # C
KELVIN = 273.15

WIND_MODES = ("physics", "envelope")
SOLAR_MODES = ("ramp", "envelope", "curve")


# --- wind --------------------------------------------------------------------


def aerodynamic_power(v: float, model: WtModel) -> float:
    """Uncapped rotor power in kW: 0.5 * rho * A * v^3 * cp."""
    return 0.5 * model.rho * model.area * v**3 * model.cp / 1000.0


def wind_power(v: float, model: WtModel, mode: str = "physics", previous: float = 0.0) -> float:
    if v < 0 or math.isnan(v):
        raise InputError(f"wind speed must be >= 0, got {v}")
    if mode not in WIND_MODES:
        raise ConfigurationError(f"wind mode must be one of {WIND_MODES}, got {mode!r}")
    if v < model.v_min:
        return 0.0
    if v >= model.v_max:
        return model.p_max
    if mode == "envelope":
        return min(max(previous, 0.0), model.p_max)
    return min(aerodynamic_power(v, model), model.p_max)


# --- solar -------------------------------------------------------------------


def solar_power(
    irr: float,
    model: PvModel,
    mode: str = "ramp",
    previous: float = 0.0,
    t: Optional[float] = None,
) -> float:
    if irr < 0 or math.isnan(irr):
        raise InputError(f"irradiance must be >= 0, got {irr}")
    if mode not in SOLAR_MODES:
        raise ConfigurationError(f"solar mode must be one of {SOLAR_MODES}, got {mode!r}")
    if irr < model.irr_min:
        return 0.0
    if irr >= model.irr_max:
        return model.p_max
    if mode == "envelope":
        return min(max(previous, 0.0), model.p_max)
    if mode == "curve":
        return solar_power_from_curve(irr, model, t)
    return model.p_max * (irr - model.irr_min) / (model.irr_max - model.irr_min)


def photo_current(g_a: float, t: float, model: PvModel) -> float:
    return model.i_scs * (g_a / model.g_as) * (1.0 + model.delta_isc * (t - model.t_s))


def thermal_voltage(t: float) -> float:
    return BOLTZMANN * (t + KELVIN) / ELEMENTARY_CHARGE


def saturation_current(model: PvModel) -> float:
    if model.i_sat is not None:
        return model.i_sat
    # V_oc ≈ v_oc_cell per cell at standard conditions
    vt = thermal_voltage(model.t_s)
    return model.i_scs / math.expm1(model.v_oc_cell / (model.ideality * vt))


def _diode_residual(i: float, v: float, i_ph: float, i0: float, a_mod: float, model: PvModel) -> float:
    vd = v + i * model.r_s
    return i_ph - i0 * math.expm1(vd / a_mod) - vd / model.r_sh - i


def _current_at(v: float, i_ph: float, i0: float, a_mod: float, model: PvModel) -> float:
    lo, hi = -(i_ph + 1.0), i_ph + 1.0
    f_lo = _diode_residual(lo, v, i_ph, i0, a_mod, model)
    f_hi = _diode_residual(hi, v, i_ph, i0, a_mod, model)
    if f_lo * f_hi > 0:
        raise NumericalError(
            f"cannot bracket diode current at V={v:.6f} V: f({lo:.4f})={f_lo:.4g}, f({hi:.4f})={f_hi:.4g}"
        )
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    return brentq(_diode_residual, lo, hi, args=(v, i_ph, i0, a_mod, model), xtol=1e-12, rtol=1e-12)


def pv_curve(model: PvModel, g_a: float, t: Optional[float] = None, n_points: int = 200) -> PvCurve:
    """Sweep the single-diode I-V relation from 0 V to open circuit.

    Voltages and powers refer to the whole module (``n_cells`` in series);
    powers are in W.
    """
    if n_points < 2:
        raise InputError(f"n_points must be >= 2, got {n_points}")
    if g_a < 0:
        raise InputError(f"irradiance must be >= 0, got {g_a}")
    t = model.t_s if t is None else t
    i_ph = photo_current(g_a, t, model)
    if i_ph <= 0.0:
        zeros = tuple(0.0 for _ in range(n_points))
        return PvCurve(voltages=zeros, currents=zeros, powers=zeros, v_oc=0.0, v_mpp=0.0, i_mpp=0.0, p_mpp=0.0)

    i0 = saturation_current(model)
    a_mod = model.n_cells * model.ideality * thermal_voltage(t)

    v_hi = a_mod * math.log1p(i_ph / i0)
    v_oc = brentq(lambda v: _diode_residual(0.0, v, i_ph, i0, a_mod, model), 0.0, v_hi, xtol=1e-12)

    voltages = np.linspace(0.0, v_oc, n_points)
    currents = np.array([_current_at(float(v), i_ph, i0, a_mod, model) for v in voltages])
    currents[-1] = 0.0
    powers = voltages * currents

    j = int(np.argmax(powers))
    lo = float(voltages[max(j - 1, 0)])
    hi = float(voltages[min(j + 1, n_points - 1)])
    v_mpp, p_mpp = float(voltages[j]), float(powers[j])
    if hi > lo:
        res = minimize_scalar(
            lambda v: -v * _current_at(v, i_ph, i0, a_mod, model),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-9 * max(v_oc, 1.0)},
        )
        if -res.fun > p_mpp:
            v_mpp, p_mpp = float(res.x), float(-res.fun)
    i_mpp = p_mpp / v_mpp if v_mpp > 0 else 0.0
    return PvCurve(
        voltages=tuple(float(v) for v in voltages),
        currents=tuple(float(i) for i in currents),
        powers=tuple(float(p) for p in powers),
        v_oc=float(v_oc),
        v_mpp=v_mpp,
        i_mpp=i_mpp,
        p_mpp=p_mpp,
    )


@lru_cache(maxsize=64)
def _reference_mpp(model: PvModel, n_points: int) -> float:
    return pv_curve(model, model.g_as, model.t_s, n_points).p_mpp


def solar_power_from_curve(irr: float, model: PvModel, t: Optional[float] = None, n_points: int = 120) -> float:
    """Scale the rated power by the module's MPP relative to standard conditions."""
    reference = _reference_mpp(model, n_points)
    if reference <= 0:
        raise NumericalError("reference maximum-power point is not positive")
    actual = pv_curve(model, irr, model.t_s if t is None else t, n_points).p_mpp
    return min(model.p_max * actual / reference, model.p_max)


# --- series ------------------------------------------------------------------


def _check_lengths(forecast: ResForecast, worst_case: bool) -> None:
    n = len(forecast.irradiance)
    named = {"wind_speed": forecast.wind_speed, "temperature": forecast.temperature}
    if worst_case:
        if not forecast.has_uncertainty:
            raise InputError("worst-case RES needs both irr_uncertainty and wind_uncertainty")
        named["irr_uncertainty"] = forecast.irr_uncertainty
        named["wind_uncertainty"] = forecast.wind_uncertainty
    for name, series in named.items():
        if series is not None and len(series) != n:
            raise InputError(f"{name} has {len(series)} values, irradiance has {n}")


def res_series(
    forecast: ResForecast,
    wt: Sequence[WtModel],
    pv: Sequence[PvModel],
    worst_case: bool = False,
    wind_mode: str = "physics",
    solar_mode: str = "ramp",
    uncertainty_scale: float = 1.0,
) -> Tuple[float, ...]:
    """Available RES power (kW) per interval summed over all WT and PV units.

    Worst case evaluates the power maps at the meteorological value minus
    ``uncertainty_scale`` times its bound, floored at 0.
    """
    _check_lengths(forecast, worst_case)
    wt_prev = [0.0] * len(wt)
    pv_prev = [0.0] * len(pv)
    out = []
    for k in range(len(forecast.irradiance)):
        irr = forecast.irradiance[k]
        wind = forecast.wind_speed[k]
        if irr < 0 or wind < 0:
            raise InputError(f"interval {k}: negative meteorological input (irr={irr}, wind={wind})")
        if worst_case:
            irr = max(irr - uncertainty_scale * forecast.irr_uncertainty[k], 0.0)
            wind = max(wind - uncertainty_scale * forecast.wind_uncertainty[k], 0.0)
        t = forecast.temperature[k] if forecast.temperature is not None else None
        total = 0.0
        for idx, unit in enumerate(wt):
            wt_prev[idx] = wind_power(wind, unit, wind_mode, wt_prev[idx])
            total += wt_prev[idx]
        for idx, unit in enumerate(pv):
            pv_prev[idx] = solar_power(irr, unit, solar_mode, pv_prev[idx], t)
            total += pv_prev[idx]
        out.append(total)
    return tuple(out)


def calibrate_uncertainty(
    forecast: ResForecast,
    wt: Sequence[WtModel],
    pv: Sequence[PvModel],
    target_ratio: float = 2.94 / 4.27,
    wind_mode: str = "physics",
    solar_mode: str = "ramp",
) -> float:
    """Scale factor on both uncertainty series giving worst/deterministic energy = target_ratio."""
    if not (0.0 < target_ratio < 1.0):
        raise ConfigurationError(f"target_ratio must be in (0, 1), got {target_ratio}")
    deterministic = sum(res_series(forecast, wt, pv, False, wind_mode, solar_mode))
    if deterministic <= 0:
        raise ConfigurationError("deterministic RES energy is zero; nothing to calibrate against")

    def gap(scale: float) -> float:
        worst = sum(res_series(forecast, wt, pv, True, wind_mode, solar_mode, scale))
        return worst / deterministic - target_ratio

    if gap(0.0) <= 0:
        return 0.0
    hi = 1.0
    for _ in range(60):
        if gap(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise ConfigurationError("uncertainty bounds cannot reach the target ratio at any scale")
    if gap(hi) == 0:
        return hi
    scale = brentq(gap, 0.0, hi, xtol=1e-10)
    # 段差（カットイン等）で厳密一致しない場合は近い側に落ちる
    achieved = gap(scale) + target_ratio
    if abs(achieved - target_ratio) > 0.01:
        logger.warning("calibrated worst/deterministic ratio %.4f misses target %.4f", achieved, target_ratio)
    logger.info("uncertainty scale calibrated to %.6f (ratio %.4f)", scale, achieved)
    return float(scale)
