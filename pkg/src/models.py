"""Data models used across modules."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

DG = "DG"
BESS = "BESS"


# --- demand side -----------------------------------------------------------


@dataclass(frozen=True)
class DerParams:
    """Generalized-battery parameters of one DER (TCL, EV, home battery)."""

    a: float  # dissipation rate per interval
    gamma: float = 1.0  # charging increment per interval (normalized SOC)
    beta: float = 40.0  # $/MWh per unit SOC
    p_max: float = 30.0  # $/MWh
    soc_set: float = 0.7
    soc_max: float = 1.0
    p_rated: float = 6.0  # kW drawn while charging


@dataclass(frozen=True)
class DerLimits:
    a_min: float = 0.0
    a_max: float = 1.0
    gamma_min: float = 0.0
    gamma_max: float = 1.0
    beta_min: float = 0.0
    # beta=40 の既定値を許容する上限
    beta_max: float = 100.0


@dataclass(frozen=True)
class DerState:
    soc: float
    m: int = 0  # lockout (1 = allowed to recharge)
    v: int = 0  # on/off decision


@dataclass(frozen=True)
class PopulationSpec:
    """How a DER population is drawn (class mix, shared parameters, seed)."""

    count: int = 1000
    a_classes: Tuple[float, ...] = (0.9, 0.93, 0.96)
    fractions: Optional[Tuple[float, ...]] = None  # None = equal split
    gamma: float = 1.0
    beta: float = 40.0
    p_max: float = 30.0
    soc_set: float = 0.7
    soc_max: float = 1.0
    p_rated: float = 6.0
    seed: int = 0
    initial_soc: Optional[Tuple[float, ...]] = None
    initial_soc_range: Optional[Tuple[float, float]] = None  # None = [soc_set, soc_max]


@dataclass
class DerPopulation:
    """Struct-of-arrays view of a DER population.

    Parameter arrays never change after construction; ``soc``, ``m`` and ``v``
    are the live state and are advanced in place by
    ``der_population.advance_population``.
    """

    a: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    p_max: np.ndarray
    soc_set: np.ndarray
    soc_max: np.ndarray
    p_rated: np.ndarray
    soc: np.ndarray
    m: np.ndarray
    v: np.ndarray
    class_index: np.ndarray
    class_labels: Tuple[float, ...] = ()

    def __len__(self) -> int:
        return int(self.soc.shape[0])

    def copy(self) -> "DerPopulation":
        return DerPopulation(
            a=self.a.copy(),
            gamma=self.gamma.copy(),
            beta=self.beta.copy(),
            p_max=self.p_max.copy(),
            soc_set=self.soc_set.copy(),
            soc_max=self.soc_max.copy(),
            p_rated=self.p_rated.copy(),
            soc=self.soc.copy(),
            m=self.m.copy(),
            v=self.v.copy(),
            class_index=self.class_index.copy(),
            class_labels=self.class_labels,
        )

    @classmethod
    def from_pairs(
        cls,
        pairs: Sequence[Tuple[DerState, DerParams]],
        class_labels: Optional[Sequence[float]] = None,
    ) -> "DerPopulation":
        params = [p for _, p in pairs]
        states = [s for s, _ in pairs]
        labels = tuple(class_labels) if class_labels is not None else tuple(sorted({p.a for p in params}))
        lookup = {label: idx for idx, label in enumerate(labels)}
        return cls(
            a=np.array([p.a for p in params], dtype=float),
            gamma=np.array([p.gamma for p in params], dtype=float),
            beta=np.array([p.beta for p in params], dtype=float),
            p_max=np.array([p.p_max for p in params], dtype=float),
            soc_set=np.array([p.soc_set for p in params], dtype=float),
            soc_max=np.array([p.soc_max for p in params], dtype=float),
            p_rated=np.array([p.p_rated for p in params], dtype=float),
            soc=np.array([s.soc for s in states], dtype=float),
            m=np.array([s.m for s in states], dtype=np.int64),
            v=np.array([s.v for s in states], dtype=np.int64),
            class_index=np.array([lookup.get(p.a, 0) for p in params], dtype=np.int64),
            class_labels=labels,
        )

    def pairs(self) -> List[Tuple[DerState, DerParams]]:
        out = []
        for i in range(len(self)):
            params = DerParams(
                a=float(self.a[i]),
                gamma=float(self.gamma[i]),
                beta=float(self.beta[i]),
                p_max=float(self.p_max[i]),
                soc_set=float(self.soc_set[i]),
                soc_max=float(self.soc_max[i]),
                p_rated=float(self.p_rated[i]),
            )
            state = DerState(soc=float(self.soc[i]), m=int(self.m[i]), v=int(self.v[i]))
            out.append((state, params))
        return out


# --- renewables ------------------------------------------------------------


@dataclass(frozen=True)
class WtModel:
    v_min: float = 3.5  # m/s
    v_max: float = 25.0  # m/s
    p_max: float = 2000.0  # kW
    rho: float = 1.23  # kg/m^3
    area: float = 8495.0  # m^2
    cp: float = 0.4


@dataclass(frozen=True)
class PvModel:
    irr_min: float = 100.0  # W/m^2
    irr_max: float = 1050.0  # W/m^2
    p_max: float = 3000.0  # kW
    i_scs: float = 7.84  # A
    g_as: float = 1000.0  # W/m^2
    delta_isc: float = 0.102  # 1/K
    t_s: float = 25.0  # degC
    r_s: float = 0.393  # ohm
    r_sh: float = 100.0  # ohm
    ideality: float = 1.3
    n_cells: int = 60
    v_oc_cell: float = 0.6  # V, sets the default saturation current
    i_sat: Optional[float] = None  # A; derived from v_oc_cell when None


@dataclass(frozen=True)
class ResForecast:
    irradiance: Tuple[float, ...]
    wind_speed: Tuple[float, ...]
    irr_uncertainty: Optional[Tuple[float, ...]] = None
    wind_uncertainty: Optional[Tuple[float, ...]] = None
    temperature: Optional[Tuple[float, ...]] = None

    def __len__(self) -> int:
        return len(self.irradiance)

    @property
    def has_uncertainty(self) -> bool:
        return self.irr_uncertainty is not None and self.wind_uncertainty is not None


@dataclass(frozen=True)
class PvCurve:
    voltages: Tuple[float, ...]
    currents: Tuple[float, ...]
    powers: Tuple[float, ...]  # W
    v_oc: float
    v_mpp: float
    i_mpp: float
    p_mpp: float  # W


# --- market ----------------------------------------------------------------


@dataclass(frozen=True)
class DemandCurve:
    """Price-vs-demand step function.

    ``breakpoints`` holds (price, cumulative demand kW) with strictly
    increasing prices; the demand at a price is the cumulative demand of the
    first breakpoint at or above it (0 above the last breakpoint).
    """

    breakpoints: Tuple[Tuple[float, float], ...] = ()

    @property
    def prices(self) -> Tuple[float, ...]:
        return tuple(p for p, _ in self.breakpoints)

    @property
    def total_demand(self) -> float:
        return self.breakpoints[0][1] if self.breakpoints else 0.0

    def demand_at(self, price: float) -> float:
        idx = bisect.bisect_left(self.prices, price)
        if idx >= len(self.breakpoints):
            return 0.0
        return self.breakpoints[idx][1]


@dataclass(frozen=True)
class ClearingResult:
    price: float
    over_capacity: bool = False
    demand_kw: float = 0.0


@dataclass(frozen=True)
class MarketConfig:
    p_base: Tuple[float, ...]  # $/MWh per interval
    feeder_capacity: Tuple[float, ...]  # kW per interval
    price_bids: Tuple[float, ...] = (15.0, 25.0, 35.0)
    constant_price: float = 15.0  # scenario 1


# --- supply side / scheduling ----------------------------------------------


@dataclass(frozen=True)
class UnitClass:
    """An aggregated class of identical DGs or BESSs."""

    name: str
    kind: str
    count: int
    bid_ladder: Tuple[float, ...]
    c_energy: float  # $ per kW per interval
    c_start: float = 0.0  # $ per start (DG only)
    c_noload: float = 0.0  # $ per committed idle unit per interval (DG only)
    energy_budget: Optional[float] = None  # kWh per day, BESS only

    @property
    def max_power(self) -> float:
        return self.count * max(self.bid_ladder)

    @property
    def stateful(self) -> bool:
        """Commitment carries over between intervals only when starts cost money."""
        return self.c_start > 0.0


@dataclass(frozen=True)
class HorizonConfig:
    n_k: int = 24
    horizon_mode: str = "shrinking"
    fixed_horizon_length: int = 6
    interval_duration: float = 1.0  # hours
    j3_weight: float = 1.0  # $ per unit SOC


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    optimality_gap: float = 1e-9
    node_limit: int = 20000
    dispatch_method: str = "decomposed"
    unserved_penalty_factor: float = 1000.0


@dataclass(frozen=True)
class UnitDispatch:
    name: str
    kind: str
    levels: Tuple[int, ...]  # producing count per bid level
    producing: int
    committed: int
    starts: int
    power_kw: float

    def key(self) -> Tuple:
        return (self.name, round(self.power_kw, 6), self.producing, self.committed, self.starts)


@dataclass(frozen=True)
class DispatchDecision:
    units: Tuple[UnitDispatch, ...] = ()
    res_used_kw: float = 0.0

    @property
    def dispatched_kw(self) -> float:
        return sum(u.power_kw for u in self.units)

    def key(self) -> Tuple:
        return tuple(u.key() for u in self.units)


@dataclass(frozen=True)
class StepResult:
    interval: int
    clearing_price: float
    demand_kw: float
    served_kw: float
    unserved_kw: float
    res_available_kw: float  # RES the plan was built on (worst case in scenario 3)
    res_deterministic_kw: float
    res_used_kw: float
    decision: DispatchDecision
    j1: float
    j2: float
    j3: float
    j: float
    penalty: float = 0.0
    cumulative_cost: float = 0.0
    candidate_costs: Tuple[Tuple[float, float], ...] = ()


@dataclass(frozen=True)
class ReportSummary:
    """Totals mirroring the scenario comparison table."""

    class_mean_soc: Tuple[Tuple[float, float], ...]  # (a, mean SOC)
    total_cost: float
    energy_by_kind_kwh: Tuple[Tuple[str, float], ...]
    energy_by_unit_kwh: Tuple[Tuple[str, float], ...]
    res_deterministic_mwh: float
    res_available_mwh: float
    res_deterministic_mean_mw: float
    res_available_mean_mw: float
    unserved_kwh: float
    mean_clearing_price: float


@dataclass(frozen=True)
class RunReport:
    scenario: int
    steps: Tuple[StepResult, ...]
    class_labels: Tuple[float, ...]
    soc_means: Tuple[Tuple[float, ...], ...]  # per interval (incl. final state), per class
    price_means: Tuple[Tuple[float, ...], ...]  # customer price per interval, per class
    unit_names: Tuple[str, ...]
    interval_duration: float = 1.0
    summary: Optional[ReportSummary] = None

    @classmethod
    def from_steps(
        cls,
        scenario: int,
        steps: Sequence[StepResult],
        class_labels: Sequence[float],
        soc_means: Sequence[Sequence[float]],
        price_means: Sequence[Sequence[float]],
        unit_names: Sequence[str],
        interval_duration: float = 1.0,
    ) -> "RunReport":
        running = 0.0
        finished: List[StepResult] = []
        for step in steps:
            running += step.j
            finished.append(_replace_cumulative(step, running))
        report = cls(
            scenario=scenario,
            steps=tuple(finished),
            class_labels=tuple(class_labels),
            soc_means=tuple(tuple(float(x) for x in row) for row in soc_means),
            price_means=tuple(tuple(float(x) for x in row) for row in price_means),
            unit_names=tuple(unit_names),
            interval_duration=interval_duration,
        )
        return _with_summary(report)


def _replace_cumulative(step: StepResult, value: float) -> StepResult:
    return replace(step, cumulative_cost=value)


def _with_summary(report: RunReport) -> RunReport:
    n = len(report.steps)
    dt = report.interval_duration
    soc_rows = report.soc_means[:n]
    class_soc = []
    for idx, label in enumerate(report.class_labels):
        values = [row[idx] for row in soc_rows]
        class_soc.append((label, sum(values) / len(values) if values else 0.0))

    by_kind: Dict[str, float] = {}
    by_unit: Dict[str, float] = {name: 0.0 for name in report.unit_names}
    for step in report.steps:
        for unit in step.decision.units:
            by_kind[unit.kind] = by_kind.get(unit.kind, 0.0) + unit.power_kw * dt
            by_unit[unit.name] = by_unit.get(unit.name, 0.0) + unit.power_kw * dt

    res_det = sum(s.res_deterministic_kw for s in report.steps) * dt / 1000.0
    res_avail = sum(s.res_available_kw for s in report.steps) * dt / 1000.0
    hours = n * dt
    summary = ReportSummary(
        class_mean_soc=tuple(class_soc),
        total_cost=sum(s.j for s in report.steps),
        energy_by_kind_kwh=tuple(sorted(by_kind.items())),
        energy_by_unit_kwh=tuple((name, by_unit[name]) for name in report.unit_names),
        res_deterministic_mwh=res_det,
        res_available_mwh=res_avail,
        res_deterministic_mean_mw=res_det / hours if hours else 0.0,
        res_available_mean_mw=res_avail / hours if hours else 0.0,
        unserved_kwh=sum(s.unserved_kw for s in report.steps) * dt,
        mean_clearing_price=(sum(s.clearing_price for s in report.steps) / n) if n else 0.0,
    )
    return replace(report, summary=summary)


@dataclass
class RunSetup:
    """Everything one scenario run needs, already in domain types."""

    scenario: int
    horizon: HorizonConfig
    solver: SolverConfig
    market: MarketConfig
    classes: Tuple[UnitClass, ...]
    population: DerPopulation
    res_deterministic: Tuple[float, ...]
    res_worst: Optional[Tuple[float, ...]] = None
    extra: Dict[str, object] = field(default_factory=dict)
