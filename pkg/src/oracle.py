"""Brute-force baselines for tests.

enumerate_milp checks every integer assignment of a MilpModel.
reference_run replays a whole scenario with plain Python loops, its own
per-interval models solved by enumeration, and exhaustive search over
commitment sequences. Neither touches the simplex, branch-and-bound or
the scheduler, so they can catch mistakes in all three.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .milp_core import EQ, GE, INFEASIBLE, INTEGER, LE, MINIMIZE, OPTIMAL, MilpModel
from .models import DispatchDecision, RunReport, RunSetup, StepResult, UnitClass, UnitDispatch
from .validators import OracleRefusal

logger = logging.getLogger(__name__)

DEFAULT_CAP = 1_000_000
MAX_DERS = 20
MAX_CLASSES = 2
MAX_INTERVALS = 6
_CHUNK = 65536


@dataclass(frozen=True)
class EnumerationReport:
    status: str
    objective: Optional[float]
    assignments: Tuple[Tuple[float, ...], ...]  # every optimal assignment, enumeration order
    enumerated: int


def enumerate_milp(model: MilpModel, cap: int = DEFAULT_CAP, tol: float = 1e-7) -> EnumerationReport:
    domains = []
    for var in model.variables:
        if var.kind != INTEGER or not math.isfinite(var.upper):
            raise OracleRefusal(f"variable {var.name!r} is not a bounded integer")
        domains.append(np.arange(math.ceil(var.lower), math.floor(var.upper) + 1, dtype=float))
    total = 1
    for domain in domains:
        total *= len(domain)
    if total > cap:
        raise OracleRefusal(f"{total} assignments exceed the cap of {cap}")

    a, b, senses = model.dense()
    sign = 1.0 if model.sense == MINIMIZE else -1.0
    cost = sign * model.objective_vector()
    slack = tol * np.maximum(1.0, np.abs(b))
    le = np.array([s == LE for s in senses], dtype=bool)
    ge = np.array([s == GE for s in senses], dtype=bool)
    eq = np.array([s == EQ for s in senses], dtype=bool)

    best = math.inf
    found: List[Tuple[float, Tuple[float, ...]]] = []
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        rest = np.arange(start, stop, dtype=np.int64)
        x = np.empty((stop - start, len(domains)))
        # 最後の変数が最も速く回る（itertools.product と同じ順序）
        for j in reversed(range(len(domains))):
            size = len(domains[j])
            x[:, j] = domains[j][rest % size]
            rest //= size
        if len(b):
            lhs = x @ a.T
            ok = np.all(~le | (lhs <= b + slack), axis=1)
            ok &= np.all(~ge | (lhs >= b - slack), axis=1)
            ok &= np.all(~eq | (np.abs(lhs - b) <= slack), axis=1)
        else:
            ok = np.ones(stop - start, dtype=bool)
        rows = np.flatnonzero(ok)
        if rows.size == 0:
            continue
        values = x[rows] @ cost
        chunk_best = float(values.min())
        if chunk_best < best - 1e-12 * max(1.0, abs(best)) or math.isinf(best):
            best = chunk_best
        limit = best + 1e-12 * max(1.0, abs(best))
        for r in np.flatnonzero(values <= limit):
            found.append((float(values[r]), tuple(float(v) for v in x[rows[r]])))

    if not found:
        return EnumerationReport(INFEASIBLE, None, (), total)
    limit = best + 1e-12 * max(1.0, abs(best))
    optimal = tuple(assignment for value, assignment in found if value <= limit)
    return EnumerationReport(OPTIMAL, model.evaluate(optimal[0]), optimal, total)


# --- reference pipeline --------------------------------------------------------


def _check_size(setup: RunSetup) -> None:
    if len(setup.population) > MAX_DERS:
        raise OracleRefusal(f"{len(setup.population)} DERs exceed the oracle limit of {MAX_DERS}")
    if len(setup.classes) > MAX_CLASSES:
        raise OracleRefusal(f"{len(setup.classes)} unit classes exceed the oracle limit of {MAX_CLASSES}")
    if setup.horizon.n_k > MAX_INTERVALS:
        raise OracleRefusal(f"n_k={setup.horizon.n_k} exceeds the oracle limit of {MAX_INTERVALS}")
    if any(unit.energy_budget is not None for unit in setup.classes):
        raise OracleRefusal("energy budgets are not supported by the oracle")


def _ders(setup: RunSetup) -> List[Dict[str, float]]:
    pop = setup.population
    return [
        {
            "a": float(pop.a[i]),
            "gamma": float(pop.gamma[i]),
            "beta": float(pop.beta[i]),
            "p_max": float(pop.p_max[i]),
            "soc_set": float(pop.soc_set[i]),
            "soc_max": float(pop.soc_max[i]),
            "p_rated": float(pop.p_rated[i]),
            "soc": float(pop.soc[i]),
            "m": int(pop.m[i]),
            "cls": int(pop.class_index[i]),
        }
        for i in range(len(pop))
    ]


def _price(der: Dict[str, float]) -> float:
    return der["p_max"] - der["beta"] * der["soc"]


def _advance(ders: List[Dict[str, float]], p_clear: float) -> float:
    demand = 0.0
    for der in ders:
        v = 1 if _price(der) >= p_clear else 0
        charging = der["m"] * v
        if charging:
            demand += der["p_rated"]
        soc = min(der["a"] * der["soc"] + der["gamma"] * charging, der["soc_max"])
        if soc >= der["soc_max"]:
            der["m"] = 0
        elif soc < der["soc_set"]:
            der["m"] = 1
        der["soc"] = soc
    return demand


def _candidate_prices(ders: List[Dict[str, float]], p_base: float, capacity: float, bids: Sequence[float]) -> List[float]:
    def demand(price: float) -> float:
        return sum(d["p_rated"] for d in ders if d["m"] == 1 and _price(d) >= price)

    if demand(p_base) <= capacity:
        cleared = p_base
    else:
        cleared = None
        for bid in bids:
            if demand(bid) <= capacity:
                cleared = bid
                break
        if cleared is None:
            return [bids[-1]]
    allowed = [b for b in bids if b >= cleared]
    return allowed if allowed else [cleared]


def _level_vectors(unit: UnitClass) -> List[Tuple[int, ...]]:
    return [
        vec
        for vec in itertools.product(range(unit.count + 1), repeat=len(unit.bid_ladder))
        if sum(vec) <= unit.count
    ]


def _power(unit: UnitClass, levels: Sequence[int]) -> float:
    return math.fsum(b * n for b, n in zip(unit.bid_ladder, levels))


def _canonical(unit: UnitClass, levels: Sequence[int], committed: int, prev: int) -> UnitDispatch:
    power = _power(unit, levels)
    same_power = [vec for vec in _level_vectors(unit) if abs(_power(unit, vec) - power) <= 1e-6]
    if unit.stateful and unit.c_noload > 0:
        producing = sum(levels)
    else:
        producing = min(sum(vec) for vec in same_power)
    chosen = max((vec for vec in same_power if sum(vec) == producing), key=lambda vec: tuple(reversed(vec)))
    if not unit.stateful:
        committed = producing
    return UnitDispatch(
        name=unit.name,
        kind=unit.kind,
        levels=tuple(chosen),
        producing=producing,
        committed=committed,
        starts=max(0, committed - prev),
        power_kw=_power(unit, chosen),
    )


class _ReferenceDispatch:
    """Exhaustive dispatch over commitment sequences of start-costed classes."""

    def __init__(self, classes: Sequence[UnitClass]) -> None:
        self.classes = tuple(classes)
        self.stateful = [i for i, unit in enumerate(self.classes) if unit.c_start > 0]
        self.states = list(itertools.product(*(range(self.classes[i].count + 1) for i in self.stateful)))
        self._memo: Dict[Tuple[float, Tuple[int, ...]], Optional[Tuple[float, float, tuple]]] = {}

    def interval(self, deficit: float, state: Tuple[int, ...]):
        key = (deficit, state)
        if key not in self._memo:
            self._memo[key] = self._solve_interval(deficit, state)
        return self._memo[key]

    def _solve_interval(self, deficit: float, state: Tuple[int, ...]):
        pinned = dict(zip(self.stateful, state))
        model = MilpModel("reference-interval")
        objective: Dict[int, float] = {}
        balance: Dict[int, float] = {}
        handles = []
        for i, unit in enumerate(self.classes):
            low, high = (pinned[i], pinned[i]) if i in pinned else (0, unit.count)
            c = model.add_integer(f"{unit.name}.c", low, high)
            levels = [model.add_integer(f"{unit.name}.n{l}", 0, unit.count) for l in range(len(unit.bid_ladder))]
            row = {n: 1.0 for n in levels}
            row[c] = -1.0
            model.add_constraint(row, LE, 0.0)
            for bid, n in zip(unit.bid_ladder, levels):
                balance[n] = bid
                objective[n] = unit.c_energy * bid - unit.c_noload
            objective[c] = unit.c_noload
            handles.append((c, levels))
        model.add_constraint(balance, GE, deficit)
        model.set_objective(objective, MINIMIZE)
        report = enumerate_milp(model)
        if report.status != OPTIMAL:
            return None
        assignment = report.assignments[0]
        raw = []
        energy = noload = 0.0
        for unit, (c, levels) in zip(self.classes, handles):
            counts = tuple(int(round(assignment[n])) for n in levels)
            committed = int(round(assignment[c]))
            energy += unit.c_energy * _power(unit, counts)
            noload += unit.c_noload * (committed - sum(counts))
            raw.append((counts, committed))
        return energy, noload, tuple(raw)

    def start_cost(self, before: Tuple[int, ...], after: Tuple[int, ...]) -> float:
        return sum(self.classes[i].c_start * max(0, a - b) for i, b, a in zip(self.stateful, before, after))

    def solve(self, served: Sequence[float], res: Sequence[float], prev_committed: Sequence[int]):
        """Returns (j1 per interval, j2 per interval, raw per interval) of the best sequence."""
        start = tuple(prev_committed[i] for i in self.stateful)
        deficits = [max(s - r, 0.0) for s, r in zip(served, res)]
        best_total = math.inf
        best = None
        for sequence in itertools.product(self.states, repeat=len(served)):
            total = 0.0
            before = start
            parts = []
            for k, state in enumerate(sequence):
                option = self.interval(deficits[k], state)
                if option is None:
                    total = math.inf
                    break
                energy, noload, raw = option
                j2 = noload + self.start_cost(before, state)
                total += energy + j2
                parts.append((energy, j2, raw))
                before = state
            if math.isinf(total):
                continue
            if best is None or total < best_total - 1e-9 * max(1.0, abs(best_total)):
                best_total, best = total, parts
        return best


def reference_run(setup: RunSetup) -> RunReport:
    _check_size(setup)
    ders = _ders(setup)
    classes = setup.classes
    n_k = setup.horizon.n_k
    labels = setup.population.class_labels
    dispatch = _ReferenceDispatch(classes)
    capacity = sum(unit.count * max(unit.bid_ladder) for unit in classes)
    rate = setup.solver.unserved_penalty_factor * max((u.c_energy for u in classes), default=0.0)
    prev_committed = [0 for _ in classes]

    def class_avg(values: List[float]) -> Tuple[float, ...]:
        out = []
        for idx in range(len(labels)):
            members = [v for v, d in zip(values, ders) if d["cls"] == idx]
            out.append(sum(members) / len(members) if members else 0.0)
        return tuple(out)

    soc_means = []
    price_means = []
    steps = []
    for k in range(n_k):
        soc_means.append(class_avg([d["soc"] for d in ders]))
        price_means.append(class_avg([_price(d) for d in ders]))
        if setup.horizon.horizon_mode == "fixed":
            length = min(setup.horizon.fixed_horizon_length, n_k - k)
        else:
            length = n_k - k
        res_det = setup.res_deterministic[k:k + length]
        res_plan = setup.res_worst[k:k + length] if setup.scenario == 3 else res_det

        if setup.scenario == 1:
            prices = [setup.market.constant_price]
            weight = 0.0
        else:
            prices = _candidate_prices(
                ders, setup.market.p_base[k], setup.market.feeder_capacity[k], list(setup.market.price_bids)
            )
            weight = setup.horizon.j3_weight

        evaluated = []
        for price in sorted(prices):
            trial = [dict(d) for d in ders]
            demand = []
            soc_total = 0.0
            for _ in range(length):
                demand.append(_advance(trial, price))
                soc_total += sum(d["soc"] for d in trial)
            served = [min(d, r + capacity) for d, r in zip(demand, res_plan)]
            unserved = [d - s for d, s in zip(demand, served)]
            parts = dispatch.solve(served, res_plan, prev_committed)
            if parts is None:
                evaluated.append((price, math.inf, None, served, unserved, soc_total))
                continue
            supply = math.fsum(e for e, _, _ in parts) + math.fsum(j2 for _, j2, _ in parts)
            total = supply - weight * soc_total + rate * math.fsum(unserved)
            evaluated.append((price, total, parts, served, unserved, soc_total))

        chosen = evaluated[0]
        for candidate in evaluated[1:]:
            if candidate[1] < chosen[1] - 1e-9 * max(1.0, abs(chosen[1])):
                chosen = candidate
        price, _, parts, served, unserved, _ = chosen

        demand_k = _advance(ders, price)
        energy, j2, raw = parts[0]
        units = tuple(
            _canonical(unit, levels, committed, prev)
            for unit, (levels, committed), prev in zip(classes, raw, prev_committed)
        )
        prev_committed = [u.committed for u in units]
        j3 = sum(d["soc"] for d in ders)
        res_available = float(res_plan[0])
        used = min(res_available, served[0])
        steps.append(
            StepResult(
                interval=k,
                clearing_price=price,
                demand_kw=demand_k,
                served_kw=served[0],
                unserved_kw=unserved[0],
                res_available_kw=res_available,
                res_deterministic_kw=float(res_det[0]),
                res_used_kw=used,
                decision=DispatchDecision(units=units, res_used_kw=used),
                j1=energy,
                j2=j2,
                j3=j3,
                j=energy + j2 - weight * j3,
                penalty=rate * unserved[0],
                candidate_costs=tuple((p, t) for p, t, *_ in evaluated),
            )
        )
    soc_means.append(class_avg([d["soc"] for d in ders]))
    return RunReport.from_steps(
        scenario=setup.scenario,
        steps=steps,
        class_labels=labels,
        soc_means=soc_means,
        price_means=price_means,
        unit_names=tuple(unit.name for unit in classes),
        interval_duration=setup.horizon.interval_duration,
    )
