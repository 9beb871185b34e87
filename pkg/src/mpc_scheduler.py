"""Receding-horizon scheduler: DER price bids plus DG/BESS dispatch.

Each interval k the scheduler
  1. picks the prediction horizon (shrinking to end of day, or fixed length),
  2. enumerates candidate price plans (one constant bid per plan),
  3. simulates the DER population under each plan and solves the dispatch
     MILP for the resulting demand,
  4. ranks candidates by J = J1 + J2 - w3 * J3 (+ unserved-energy penalty),
  5. commits only the first interval and advances the real population.

Dispatch is solved exactly. The default ``decomposed`` method solves one
single-interval MILP per commitment state of start-costed classes and
chains them by dynamic programming; ``monolithic`` hands the whole horizon
to branch-and-bound.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .der_population import advance_population, class_mean_soc, class_means, customer_prices, simulate_population
from .market import admissible_bids, build_demand_curve, enumerate_price_plans
from .milp_core import GE, INFEASIBLE, LE, MINIMIZE, NODE_LIMIT, OPTIMAL, CONTINUOUS, MilpModel, Tolerances, solve_milp
from .models import (
    DerPopulation,
    DispatchDecision,
    HorizonConfig,
    RunReport,
    RunSetup,
    SolverConfig,
    StepResult,
    UnitClass,
    UnitDispatch,
)
from .validators import (
    ConfigurationError,
    InputError,
    validate_horizon,
    validate_market_config,
    validate_unit_classes,
)

logger = logging.getLogger(__name__)

DISPATCH_METHODS = ("decomposed", "monolithic")
_SCALE = 1_000_000  # bid arithmetic in micro-kW


def _better(value: float, best: float) -> bool:
    if math.isinf(best):
        return value < best
    return value < best - 1e-9 * max(1.0, abs(best))


def tolerances_of(solver: SolverConfig) -> Tolerances:
    return Tolerances(
        feasibility=solver.feasibility_tol,
        integrality=solver.integrality_tol,
        optimality_gap=solver.optimality_gap,
    )


def unserved_penalty_rate(classes: Sequence[UnitClass], solver: SolverConfig) -> float:
    """$ per kW of unserved demand per interval."""
    if not classes:
        return 0.0
    return solver.unserved_penalty_factor * max(c.c_energy for c in classes)


def horizon_length(horizon: HorizonConfig, k: int) -> int:
    remaining = horizon.n_k - k
    if horizon.horizon_mode == "fixed":
        return min(horizon.fixed_horizon_length, remaining)
    return remaining


# --- dispatch model ------------------------------------------------------------


def _level_name(unit: UnitClass, k: int, level: int) -> str:
    return f"{unit.name}.n[{k},{level}]"


def _commit_name(unit: UnitClass, k: int) -> str:
    return f"{unit.name}.c[{k}]"


def _start_name(unit: UnitClass, k: int) -> str:
    return f"{unit.name}.s[{k}]"


def _unserved_name(k: int) -> str:
    return f"unserved[{k}]"


def build_dispatch_model(
    demand_series: Sequence[float],
    res_series: Sequence[float],
    classes: Sequence[UnitClass],
    prev_committed: Sequence[int],
    fixed_committed: Optional[Mapping[int, int]] = None,
    energy_remaining: Optional[Mapping[int, float]] = None,
    interval_duration: float = 1.0,
    unserved_penalty: Optional[float] = None,
    name: str = "dispatch",
) -> MilpModel:
    """Dispatch MILP over a horizon (objective = J1 + J2).

    Per class and interval: producing counts per bid level, committed count
    and start count, all integer. ``fixed_committed`` pins the committed
    count of the given classes in every interval; ``energy_remaining`` caps
    the energy (kWh) of the given BESS classes over the horizon;
    ``unserved_penalty`` adds a continuous shortfall slack per interval.
    """
    if len(demand_series) != len(res_series):
        raise InputError(f"demand has {len(demand_series)} intervals, RES has {len(res_series)}")
    if len(prev_committed) != len(classes):
        raise ConfigurationError(f"{len(prev_committed)} previous commitments for {len(classes)} classes")
    for unit, prev in zip(classes, prev_committed):
        if not 0 <= prev <= unit.count:
            raise ConfigurationError(f"unit {unit.name!r}: previous commitment {prev} outside [0, {unit.count}]")

    fixed_committed = fixed_committed or {}
    energy_remaining = energy_remaining or {}
    horizon = len(demand_series)
    model = MilpModel(name)
    objective: Dict[int, float] = {}
    supply: List[Dict[int, float]] = [{} for _ in range(horizon)]

    for i, unit in enumerate(classes):
        previous = None
        budget_row: Dict[int, float] = {}
        for k in range(horizon):
            if i in fixed_committed:
                c = model.add_integer(_commit_name(unit, k), fixed_committed[i], fixed_committed[i])
            else:
                c = model.add_integer(_commit_name(unit, k), 0, unit.count)
            s = model.add_integer(_start_name(unit, k), 0, unit.count)
            levels = [model.add_integer(_level_name(unit, k, l), 0, unit.count) for l in range(len(unit.bid_ladder))]

            row = {n: 1.0 for n in levels}
            row[c] = -1.0
            model.add_constraint(row, LE, 0.0, name=f"{unit.name}.commit[{k}]")
            if previous is None:
                model.add_constraint({s: 1.0, c: -1.0}, GE, -float(prev_committed[i]), name=f"{unit.name}.start[{k}]")
            else:
                model.add_constraint({s: 1.0, c: -1.0, previous: 1.0}, GE, 0.0, name=f"{unit.name}.start[{k}]")
            previous = c

            # 無負荷コスト c_noload*(c - Σn) を n と c の係数に振り分ける
            for bid, n in zip(unit.bid_ladder, levels):
                supply[k][n] = bid
                objective[n] = unit.c_energy * bid - unit.c_noload
                budget_row[n] = bid * interval_duration
            objective[c] = unit.c_noload
            objective[s] = unit.c_start
        if i in energy_remaining and energy_remaining[i] is not None:
            model.add_constraint(budget_row, LE, max(energy_remaining[i], 0.0), name=f"{unit.name}.budget")

    for k in range(horizon):
        need = float(demand_series[k]) - float(res_series[k])
        if unserved_penalty is not None:
            u = model.add_variable(_unserved_name(k), CONTINUOUS, 0.0, max(need, 0.0))
            supply[k][u] = 1.0
            objective[u] = unserved_penalty
        model.add_constraint(supply[k], GE, need, name=f"balance[{k}]")
    model.set_objective(objective, MINIMIZE)
    return model


def _read_interval(
    model: MilpModel, values: Sequence[float], classes: Sequence[UnitClass], k: int
) -> Tuple[Tuple[Tuple[int, ...], int, int], ...]:
    """Per class: (levels, committed, starts) at interval k of a solved model."""
    out = []
    for unit in classes:
        levels = tuple(
            int(round(values[model.index_of(_level_name(unit, k, l))])) for l in range(len(unit.bid_ladder))
        )
        committed = int(round(values[model.index_of(_commit_name(unit, k))]))
        starts = int(round(values[model.index_of(_start_name(unit, k))]))
        out.append((levels, committed, starts))
    return tuple(out)


# --- canonical decisions -------------------------------------------------------


@lru_cache(maxsize=200_000)
def _split(bids_desc: Tuple[int, ...], power: int, units: int) -> Optional[Tuple[int, ...]]:
    """Counts per bid (highest first) summing to ``units`` and ``power``; most power on high bids."""
    head, rest = bids_desc[0], bids_desc[1:]
    if not rest:
        return (units,) if head * units == power else None
    for q in range(min(units, power // head), -1, -1):
        tail = _split(rest, power - q * head, units - q)
        if tail is not None:
            return (q,) + tail
    return None


def canonical_levels(ladder: Sequence[float], power: float, units: int) -> Optional[Tuple[int, ...]]:
    bids_desc = tuple(int(round(b * _SCALE)) for b in reversed(ladder))
    found = _split(bids_desc, int(round(power * _SCALE)), units)
    return None if found is None else tuple(reversed(found))


def min_units(ladder: Sequence[float], power: float, count: int) -> Optional[int]:
    for units in range(count + 1):
        if canonical_levels(ladder, power, units) is not None:
            return units
    return None


def class_power(unit: UnitClass, levels: Sequence[int]) -> float:
    return math.fsum(b * n for b, n in zip(unit.bid_ladder, levels))


def canonical_units(
    raw: Sequence[Tuple[Tuple[int, ...], int]],
    classes: Sequence[UnitClass],
    prev_committed: Sequence[int],
) -> Tuple[UnitDispatch, ...]:
    """Normalise cost-neutral freedom so equal-cost optima report the same decision.

    Producing count is the minimum number of units for the class power
    unless idle committed units cost no-load money; the split over bid
    levels puts as much power as possible on the highest bids; classes
    without start cost are committed exactly where they produce.
    """
    out = []
    for unit, (levels, committed), prev in zip(classes, raw, prev_committed):
        power = class_power(unit, levels)
        producing = sum(levels)
        if not (unit.stateful and unit.c_noload > 0):
            producing = min_units(unit.bid_ladder, power, unit.count)
            if producing is None:
                producing = sum(levels)
        canon = canonical_levels(unit.bid_ladder, power, producing) or tuple(levels)
        if not unit.stateful:
            committed = producing
        out.append(
            UnitDispatch(
                name=unit.name,
                kind=unit.kind,
                levels=tuple(canon),
                producing=sum(canon),
                committed=committed,
                starts=max(0, committed - prev),
                power_kw=class_power(unit, canon),
            )
        )
    return tuple(out)


# --- exact dispatch ------------------------------------------------------------


@dataclass(frozen=True)
class IntervalOption:
    energy_cost: float
    noload_cost: float
    raw: Tuple[Tuple[Tuple[int, ...], int], ...]
    nodes: int = 0

    @property
    def cost(self) -> float:
        return self.energy_cost + self.noload_cost


@dataclass
class DispatchPlan:
    status: str
    j1: Tuple[float, ...]
    j2: Tuple[float, ...]
    schedule: Tuple[Tuple[UnitDispatch, ...], ...]
    served: Tuple[float, ...]
    unserved: Tuple[float, ...]
    nodes: int = 0

    @property
    def total(self) -> float:
        return math.fsum(self.j1) + math.fsum(self.j2)

    @property
    def first(self) -> Tuple[UnitDispatch, ...]:
        return self.schedule[0]


def _interval_costs(classes: Sequence[UnitClass], raw) -> Tuple[float, float]:
    energy = 0.0
    noload = 0.0
    for unit, (levels, committed) in zip(classes, raw):
        energy += unit.c_energy * class_power(unit, levels)
        noload += unit.c_noload * (committed - sum(levels))
    return energy, noload


@lru_cache(maxsize=65536)
def _interval_option(
    deficit: float,
    fixed: Tuple[Optional[int], ...],
    classes: Tuple[UnitClass, ...],
    solver: SolverConfig,
) -> Optional[IntervalOption]:
    """Cheapest single-interval dispatch with the start-costed commitments pinned."""
    prev = tuple(f if f is not None else unit.count for f, unit in zip(fixed, classes))
    pinned = {i: f for i, f in enumerate(fixed) if f is not None}
    model = build_dispatch_model([deficit], [0.0], classes, prev, fixed_committed=pinned, name="interval")
    solution = solve_milp(model, tolerances_of(solver), solver.node_limit)
    if solution.values is None:
        return None
    if solution.status == NODE_LIMIT:
        logger.warning("interval dispatch hit the node limit (deficit %.3f kW); using the incumbent", deficit)
    raw = tuple((levels, committed) for levels, committed, _ in _read_interval(model, solution.values, classes, 0))
    energy, noload = _interval_costs(classes, raw)
    return IntervalOption(energy, noload, raw, solution.nodes)


def _cap_demand(
    demand: Sequence[float], res: Sequence[float], classes: Sequence[UnitClass]
) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    capacity = sum(unit.max_power for unit in classes)
    served = tuple(min(float(d), float(r) + capacity) for d, r in zip(demand, res))
    unserved = tuple(float(d) - s for d, s in zip(demand, served))
    return served, unserved


def _solve_decomposed(
    served: Tuple[float, ...],
    unserved: Tuple[float, ...],
    res: Sequence[float],
    classes: Tuple[UnitClass, ...],
    prev_committed: Sequence[int],
    solver: SolverConfig,
) -> DispatchPlan:
    horizon = len(served)
    stateful = [i for i, unit in enumerate(classes) if unit.stateful]
    states = list(itertools.product(*(range(classes[i].count + 1) for i in stateful)))
    start_state = tuple(int(prev_committed[i]) for i in stateful)

    def option(k: int, state: Tuple[int, ...]) -> Optional[IntervalOption]:
        fixed: List[Optional[int]] = [None] * len(classes)
        for pos, i in enumerate(stateful):
            fixed[i] = state[pos]
        deficit = max(served[k] - float(res[k]), 0.0)
        return _interval_option(deficit, tuple(fixed), classes, solver)

    def start_cost(before: Tuple[int, ...], after: Tuple[int, ...]) -> float:
        return sum(classes[i].c_start * max(0, a - b) for i, b, a in zip(stateful, before, after))

    # 後ろ向きDP: value[k][prev] = k 以降の最小コスト
    value_next: Dict[Tuple[int, ...], float] = {state: 0.0 for state in states}
    choice: List[Dict[Tuple[int, ...], Optional[Tuple[int, ...]]]] = [dict() for _ in range(horizon)]
    for k in reversed(range(horizon)):
        previous_states = [start_state] if k == 0 else states
        value_k: Dict[Tuple[int, ...], float] = {}
        for before in previous_states:
            best, arg = math.inf, None
            for state in states:
                opt = option(k, state)
                if opt is None or math.isinf(value_next[state]):
                    continue
                total = start_cost(before, state) + opt.cost + value_next[state]
                if _better(total, best):
                    best, arg = total, state
            value_k[before] = best
            choice[k][before] = arg
        value_next = value_k

    if horizon == 0 or choice[0][start_state] is None:
        return DispatchPlan(INFEASIBLE, (), (), (), served, unserved)

    j1: List[float] = []
    j2: List[float] = []
    schedule = []
    nodes = 0
    before = start_state
    canon_prev = list(prev_committed)
    for k in range(horizon):
        state = choice[k][before]
        opt = option(k, state)
        units = canonical_units(opt.raw, classes, canon_prev)
        j1.append(opt.energy_cost)
        j2.append(opt.noload_cost + start_cost(before, state))
        schedule.append(units)
        nodes += opt.nodes
        canon_prev = [u.committed for u in units]
        before = state
    return DispatchPlan(OPTIMAL, tuple(j1), tuple(j2), tuple(schedule), served, unserved, nodes)


def _solve_monolithic(
    served: Tuple[float, ...],
    unserved: Tuple[float, ...],
    res: Sequence[float],
    classes: Tuple[UnitClass, ...],
    prev_committed: Sequence[int],
    solver: SolverConfig,
    energy_remaining: Optional[Mapping[int, float]],
    interval_duration: float,
) -> DispatchPlan:
    penalty = unserved_penalty_rate(classes, solver) if energy_remaining else None
    model = build_dispatch_model(
        served,
        res,
        classes,
        prev_committed,
        energy_remaining=energy_remaining,
        interval_duration=interval_duration,
        unserved_penalty=penalty,
        name="dispatch-horizon",
    )
    solution = solve_milp(model, tolerances_of(solver), solver.node_limit)
    if solution.values is None:
        return DispatchPlan(solution.status, (), (), (), served, unserved, solution.nodes)
    if solution.status == NODE_LIMIT:
        logger.warning("horizon dispatch hit the node limit; using the incumbent")

    values = solution.values
    served_out = list(served)
    unserved_out = list(unserved)
    j1: List[float] = []
    j2: List[float] = []
    schedule = []
    canon_prev = list(prev_committed)
    for k in range(len(served)):
        read = _read_interval(model, values, classes, k)
        raw = tuple((levels, committed) for levels, committed, _ in read)
        energy, noload = _interval_costs(classes, raw)
        j1.append(energy)
        j2.append(noload + sum(unit.c_start * starts for unit, (_, _, starts) in zip(classes, read)))
        schedule.append(canonical_units(raw, classes, canon_prev))
        canon_prev = [u.committed for u in schedule[-1]]
        if penalty is not None:
            short = values[model.index_of(_unserved_name(k))]
            if short > solver.feasibility_tol:
                served_out[k] -= short
                unserved_out[k] += short
    return DispatchPlan(
        solution.status, tuple(j1), tuple(j2), tuple(schedule), tuple(served_out), tuple(unserved_out), solution.nodes
    )


def solve_dispatch(
    demand: Sequence[float],
    res: Sequence[float],
    classes: Sequence[UnitClass],
    prev_committed: Sequence[int],
    solver: SolverConfig,
    energy_remaining: Optional[Mapping[int, float]] = None,
    interval_duration: float = 1.0,
) -> DispatchPlan:
    """Minimum J1 + J2 dispatch for a demand forecast.

    Demand above RES plus total class capacity is split off as unserved
    before the MILP is built, so the model itself is always feasible.
    """
    if len(demand) != len(res):
        raise InputError(f"demand has {len(demand)} intervals, RES has {len(res)}")
    classes = tuple(classes)
    served, unserved = _cap_demand(demand, res, classes)
    method = solver.dispatch_method
    if method not in DISPATCH_METHODS:
        raise ConfigurationError(f"dispatch_method must be one of {DISPATCH_METHODS}, got {method!r}")
    budgets = {i: v for i, v in (energy_remaining or {}).items() if v is not None}
    if budgets or method == "monolithic":
        return _solve_monolithic(served, unserved, res, classes, prev_committed, solver, budgets, interval_duration)
    return _solve_decomposed(served, unserved, res, classes, prev_committed, solver)


# --- MPC -----------------------------------------------------------------------


@dataclass
class SimulationState:
    """Live plant state carried from one MPC step to the next."""

    population: DerPopulation
    prev_committed: Tuple[int, ...]
    energy_used: Dict[int, float] = field(default_factory=dict)  # kWh per BESS class index
    k: int = 0

    def energy_remaining(self, classes: Sequence[UnitClass]) -> Dict[int, float]:
        return {
            i: unit.energy_budget - self.energy_used.get(i, 0.0)
            for i, unit in enumerate(classes)
            if unit.energy_budget is not None
        }


@dataclass
class CandidateEvaluation:
    price_plan: Tuple[float, ...]
    total: float
    j1: float
    j2: float
    j3: float
    penalty: float
    plan: DispatchPlan
    demand: Tuple[float, ...]
    soc_trajectory: np.ndarray


def evaluate_candidate(
    price_plan: Sequence[float],
    state: SimulationState,
    res_plan: Sequence[float],
    classes: Sequence[UnitClass],
    solver: SolverConfig,
    j3_weight: float,
    interval_duration: float = 1.0,
) -> CandidateEvaluation:
    socs, demand, _ = simulate_population(state.population, price_plan)
    j3 = float(np.sum(socs[1:]))
    plan = solve_dispatch(
        tuple(float(d) for d in demand),
        res_plan,
        classes,
        state.prev_committed,
        solver,
        energy_remaining=state.energy_remaining(classes),
        interval_duration=interval_duration,
    )
    if not plan.schedule:
        total = math.inf
        j1 = j2 = penalty = math.inf
    else:
        j1 = math.fsum(plan.j1)
        j2 = math.fsum(plan.j2)
        penalty = unserved_penalty_rate(classes, solver) * math.fsum(plan.unserved)
        total = j1 + j2 - j3_weight * j3 + penalty
    return CandidateEvaluation(
        price_plan=tuple(float(p) for p in price_plan),
        total=total,
        j1=j1,
        j2=j2,
        j3=j3,
        penalty=penalty,
        plan=plan,
        demand=tuple(float(d) for d in demand),
        soc_trajectory=socs,
    )


def select_candidate(evaluations: Sequence[CandidateEvaluation]) -> CandidateEvaluation:
    """Lowest J; near-equal J goes to the lower first-interval price."""
    ordered = sorted(evaluations, key=lambda e: e.price_plan[0])
    best = ordered[0]
    for evaluation in ordered[1:]:
        if _better(evaluation.total, best.total):
            best = evaluation
    return best


def mpc_step(state: SimulationState, setup: RunSetup, k: int) -> StepResult:
    horizon = setup.horizon
    if not 0 <= k < horizon.n_k:
        raise ConfigurationError(f"interval {k} outside [0, {horizon.n_k})")
    length = horizon_length(horizon, k)
    res_det = setup.res_deterministic[k:k + length]
    if setup.scenario == 3:
        if setup.res_worst is None:
            raise ConfigurationError("scenario 3 needs a worst-case RES series")
        res_plan = setup.res_worst[k:k + length]
    else:
        res_plan = res_det

    market = setup.market
    if setup.scenario == 1:
        plans = [tuple(market.constant_price for _ in range(length))]
        weight = 0.0
    else:
        curve = build_demand_curve(state.population)
        bids = admissible_bids(curve, market.p_base[k], market.feeder_capacity[k], market.price_bids)
        plans = enumerate_price_plans(bids, length)
        weight = horizon.j3_weight

    evaluations = [
        evaluate_candidate(plan, state, res_plan, setup.classes, setup.solver, weight, horizon.interval_duration)
        for plan in plans
    ]
    for evaluation in evaluations:
        logger.debug(
            "k=%d price=%.2f J=%.6f (j1=%.4f j2=%.4f j3=%.4f)",
            k, evaluation.price_plan[0], evaluation.total, evaluation.j1, evaluation.j2, evaluation.j3,
        )
    best = select_candidate(evaluations)
    if math.isinf(best.total):
        raise ConfigurationError(f"interval {k}: no candidate price plan has a feasible dispatch")

    price = best.price_plan[0]
    demand = advance_population(state.population, price)
    first = best.plan.first
    served = best.plan.served[0]
    unserved = best.plan.unserved[0]
    res_available = float(res_plan[0])
    j1 = best.plan.j1[0]
    j2 = best.plan.j2[0]
    j3 = float(np.sum(state.population.soc))
    rate = unserved_penalty_rate(setup.classes, setup.solver)
    if unserved > 0:
        logger.warning("k=%d: %.3f kW of demand cannot be served", k, unserved)

    for i, (unit, dispatch) in enumerate(zip(setup.classes, first)):
        if unit.energy_budget is not None:
            state.energy_used[i] = state.energy_used.get(i, 0.0) + dispatch.power_kw * horizon.interval_duration
    state.prev_committed = tuple(u.committed for u in first)
    state.k = k + 1

    return StepResult(
        interval=k,
        clearing_price=price,
        demand_kw=demand,
        served_kw=served,
        unserved_kw=unserved,
        res_available_kw=res_available,
        res_deterministic_kw=float(res_det[0]),
        res_used_kw=min(res_available, served),
        decision=DispatchDecision(units=first, res_used_kw=min(res_available, served)),
        j1=j1,
        j2=j2,
        j3=j3,
        j=j1 + j2 - weight * j3,
        penalty=rate * unserved,
        candidate_costs=tuple((e.price_plan[0], e.total) for e in sorted(evaluations, key=lambda e: e.price_plan[0])),
    )


def validate_setup(setup: RunSetup) -> None:
    if setup.scenario not in (1, 2, 3):
        raise ConfigurationError(f"scenario must be 1, 2 or 3, got {setup.scenario}")
    validate_horizon(setup.horizon)
    validate_unit_classes(setup.classes)
    validate_market_config(setup.market, setup.horizon.n_k)
    n_k = setup.horizon.n_k
    if len(setup.res_deterministic) != n_k:
        raise InputError(f"RES series has {len(setup.res_deterministic)} values, n_k is {n_k}")
    if setup.scenario == 3 and (setup.res_worst is None or len(setup.res_worst) != n_k):
        raise InputError("scenario 3 needs a worst-case RES series of length n_k")
    if setup.solver.dispatch_method not in DISPATCH_METHODS:
        raise ConfigurationError(f"dispatch_method must be one of {DISPATCH_METHODS}")


def run_scenario(setup: RunSetup) -> RunReport:
    validate_setup(setup)
    state = SimulationState(
        population=setup.population.copy(),
        prev_committed=tuple(0 for _ in setup.classes),
    )
    pop = state.population
    logger.info(
        "scenario %d: %d DERs, %d intervals, %s horizon",
        setup.scenario, len(pop), setup.horizon.n_k, setup.horizon.horizon_mode,
    )
    soc_means = []
    price_means = []
    steps = []
    for k in range(setup.horizon.n_k):
        soc_means.append(class_mean_soc(pop.soc, pop))
        price_means.append(class_means(customer_prices(pop), pop))
        step = mpc_step(state, setup, k)
        steps.append(step)
        logger.info(
            "k=%02d price=%.2f demand=%.1f kW served=%.1f kW cost=%.4f",
            k, step.clearing_price, step.demand_kw, step.served_kw, step.j,
        )
    soc_means.append(class_mean_soc(pop.soc, pop))
    report = RunReport.from_steps(
        scenario=setup.scenario,
        steps=steps,
        class_labels=pop.class_labels,
        soc_means=soc_means,
        price_means=price_means,
        unit_names=tuple(unit.name for unit in setup.classes),
        interval_duration=setup.horizon.interval_duration,
    )
    logger.info("scenario %d finished: total cost %.4f", setup.scenario, report.summary.total_cost)
    return report
