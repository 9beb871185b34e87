"""Small mixed-integer linear programming kernel.

MilpModel is a plain builder (bounded variables, linear rows, one
objective). solve_lp runs a dense bounded-variable two-phase primal
simplex on the relaxation; solve_milp runs best-bound branch-and-bound on
top of it, branching on the most fractional integer variable.

Everything is deterministic: Dantzig pricing with lowest-index ties,
Bland's rule after a run of degenerate pivots, heap order (bound, creation
sequence). Meant for the desk-scale dispatch models of mpc_scheduler.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .validators import ModelError, NumericalError

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
INTEGER = "integer"
LE = "<="
EQ = "="
GE = ">="
SENSES = (LE, EQ, GE)
MINIMIZE = "minimize"
MAXIMIZE = "maximize"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node-limit"

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_RATIO_TOL = 1e-12
_BLAND_AFTER = 50

Coefficients = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    integrality: float = 1e-6
    optimality_gap: float = 1e-9


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    kind: str
    lower: float
    upper: float


@dataclass(frozen=True)
class Constraint:
    coeffs: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class MilpSolution:
    status: str
    values: Optional[Tuple[float, ...]] = None
    objective: Optional[float] = None
    best_bound: Optional[float] = None
    nodes: int = 0
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, index: int) -> float:
        if self.values is None:
            raise ModelError(f"no values available (status {self.status})")
        return self.values[index]


@dataclass(frozen=True)
class NodeRecord:
    """A branch-and-bound node: its variable bounds and the LP bound of that subproblem."""

    node_id: int
    parent: Optional[int]
    depth: int
    bound: float
    branch: Optional[Tuple[int, str, float]] = None  # (variable, "<=" | ">=", value)
    lower: Tuple[float, ...] = ()
    upper: Tuple[float, ...] = ()


class MilpModel:
    def __init__(self, name: str = "model") -> None:
        self.name = name
        self._variables: List[Variable] = []
        self._names: Dict[str, int] = {}
        self._constraints: List[Constraint] = []
        self._objective: Dict[int, float] = {}
        self._constant = 0.0
        self._sense = MINIMIZE
        self._dense: Optional[Tuple[np.ndarray, np.ndarray, Tuple[str, ...]]] = None

    # --- building -------------------------------------------------------------

    def add_variable(
        self,
        name: str,
        kind: str = CONTINUOUS,
        lower: float = 0.0,
        upper: float = math.inf,
    ) -> int:
        if kind not in (CONTINUOUS, INTEGER):
            raise ModelError(f"variable {name!r}: unknown kind {kind!r}")
        if name in self._names:
            raise ModelError(f"variable {name!r} declared twice")
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper):
            raise ModelError(f"variable {name!r}: NaN bound")
        if not math.isfinite(lower):
            raise ModelError(f"variable {name!r}: lower bound must be finite")
        if lower > upper:
            raise ModelError(f"variable {name!r}: lower bound {lower} > upper bound {upper}")
        if kind == INTEGER and not math.isfinite(upper):
            raise ModelError(f"integer variable {name!r} needs a finite upper bound")
        index = len(self._variables)
        self._variables.append(Variable(index, name, kind, lower, upper))
        self._names[name] = index
        self._dense = None
        return index

    def add_integer(self, name: str, lower: float, upper: float) -> int:
        return self.add_variable(name, INTEGER, lower, upper)

    def _collect(self, coeffs: Coefficients, where: str) -> Dict[int, float]:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: Dict[int, float] = {}
        for index, value in items:
            if not isinstance(index, (int, np.integer)) or not 0 <= index < len(self._variables):
                raise ModelError(f"{where}: unknown variable index {index!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ModelError(f"{where}: non-finite coefficient {value} on variable {index}")
            merged[int(index)] = merged.get(int(index), 0.0) + value
        return merged

    def add_constraint(self, coeffs: Coefficients, sense: str, rhs: float, name: str = "") -> int:
        label = name or f"c{len(self._constraints)}"
        if sense not in SENSES:
            raise ModelError(f"constraint {label!r}: unknown sense {sense!r}")
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError(f"constraint {label!r}: non-finite right-hand side")
        merged = self._collect(coeffs, f"constraint {label!r}")
        self._constraints.append(Constraint(tuple(sorted(merged.items())), sense, rhs, label))
        self._dense = None
        return len(self._constraints) - 1

    def set_objective(self, coeffs: Coefficients, sense: str = MINIMIZE, constant: float = 0.0) -> None:
        if sense not in (MINIMIZE, MAXIMIZE):
            raise ModelError(f"unknown objective sense {sense!r}")
        self._objective = self._collect(coeffs, "objective")
        self._sense = sense
        self._constant = float(constant)

    # --- read access ----------------------------------------------------------

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return tuple(self._variables)

    @property
    def constraints(self) -> Tuple[Constraint, ...]:
        return tuple(self._constraints)

    @property
    def objective(self) -> Tuple[Tuple[int, float], ...]:
        return tuple(sorted(self._objective.items()))

    @property
    def objective_constant(self) -> float:
        return self._constant

    @property
    def sense(self) -> str:
        return self._sense

    @property
    def num_variables(self) -> int:
        return len(self._variables)

    @property
    def integer_indices(self) -> Tuple[int, ...]:
        return tuple(v.index for v in self._variables if v.kind == INTEGER)

    def index_of(self, name: str) -> int:
        try:
            return self._names[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lower for v in self._variables], dtype=float)

    def upper_bounds(self) -> np.ndarray:
        return np.array([v.upper for v in self._variables], dtype=float)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(len(self._variables))
        for index, value in self._objective.items():
            c[index] = value
        return c

    def dense(self) -> Tuple[np.ndarray, np.ndarray, Tuple[str, ...]]:
        """Constraint matrix, right-hand side and senses (cached until the model changes)."""
        if self._dense is None:
            a = np.zeros((len(self._constraints), len(self._variables)))
            for row, con in enumerate(self._constraints):
                for index, value in con.coeffs:
                    a[row, index] = value
            b = np.array([con.rhs for con in self._constraints], dtype=float)
            self._dense = (a, b, tuple(con.sense for con in self._constraints))
        return self._dense

    def evaluate(self, values: Sequence[float]) -> float:
        return self._constant + sum(coef * float(values[i]) for i, coef in self._objective.items())

    def max_violation(self, values: Sequence[float]) -> float:
        """Largest absolute violation over bounds and constraints."""
        worst = 0.0
        for var in self._variables:
            x = float(values[var.index])
            worst = max(worst, var.lower - x, x - var.upper)
        for con in self._constraints:
            lhs = sum(coef * float(values[i]) for i, coef in con.coeffs)
            if con.sense == LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst

    def dump(self) -> str:
        """Plain-text rendering, one line per variable / constraint."""
        lines = [f"model {self.name}"]
        terms = " ".join(f"{coef!r}*{self._variables[i].name}" for i, coef in self.objective)
        lines.append(f"objective {self._sense} {terms} + {self._constant!r}".rstrip())
        for var in self._variables:
            lines.append(f"var {var.index} {var.name} {var.kind} [{var.lower!r}, {var.upper!r}]")
        for con in self._constraints:
            terms = " ".join(f"{coef!r}*{self._variables[i].name}" for i, coef in con.coeffs)
            lines.append(f"con {con.name}: {terms} {con.sense} {con.rhs!r}")
        return "\n".join(lines) + "\n"


# --- LP relaxation -------------------------------------------------------------


@dataclass
class _LpResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = math.inf  # minimisation sense, without constant
    iterations: int = 0


@dataclass
class _Tableau:
    t: np.ndarray
    rhs: np.ndarray
    x: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    basic: np.ndarray
    is_basic: np.ndarray
    at_upper: np.ndarray
    iterations: int = 0

    def refresh_basics(self) -> None:
        nonbasic = ~self.is_basic
        self.x[self.basic] = self.rhs - self.t[:, nonbasic] @ self.x[nonbasic]


def _build_tableau(
    a: np.ndarray,
    b: np.ndarray,
    senses: Sequence[str],
    lower: np.ndarray,
    upper: np.ndarray,
) -> Tuple[_Tableau, int, int]:
    """Start basis: slacks where they can absorb the residual, artificials elsewhere."""
    m, n = a.shape
    slack_rows = [i for i in range(m) if senses[i] != EQ]
    slack = np.zeros((m, len(slack_rows)))
    slack_of_row = {}
    for s, i in enumerate(slack_rows):
        slack[i, s] = 1.0 if senses[i] == LE else -1.0
        slack_of_row[i] = s

    residual = b - a @ lower if m else np.zeros(0)
    basic = np.empty(m, dtype=np.int64)
    scale = np.ones(m)
    art_rows = []
    for i in range(m):
        s = slack_of_row.get(i)
        if s is not None and slack[i, s] * residual[i] >= 0.0:
            basic[i] = n + s
            scale[i] = slack[i, s]
        else:
            art_rows.append(i)
    n_slack = len(slack_rows)
    art = np.zeros((m, len(art_rows)))
    for j, i in enumerate(art_rows):
        sign = 1.0 if residual[i] >= 0.0 else -1.0
        art[i, j] = sign
        basic[i] = n + n_slack + j
        scale[i] = sign

    full = np.hstack([a, slack, art]) if m else np.zeros((0, n + n_slack + len(art_rows)))
    total = full.shape[1]
    t = full / scale[:, None] if m else full
    rhs = b / scale if m else np.zeros(0)
    lo = np.concatenate([lower, np.zeros(total - n)])
    hi = np.concatenate([upper, np.full(total - n, math.inf)])
    x = lo.copy()
    is_basic = np.zeros(total, dtype=bool)
    is_basic[basic] = True
    tab = _Tableau(t=t, rhs=rhs, x=x, lower=lo, upper=hi, basic=basic, is_basic=is_basic,
                   at_upper=np.zeros(total, dtype=bool))
    tab.refresh_basics()
    return tab, n_slack, len(art_rows)


def _iterate(tab: _Tableau, cost: np.ndarray, max_iter: int) -> str:
    m = tab.t.shape[0]
    degenerate = 0
    bland = False
    for _ in range(max_iter):
        reduced = cost - cost[tab.basic] @ tab.t if m else cost.copy()
        movable = (~tab.is_basic) & (tab.upper - tab.lower > 0.0)
        increase = movable & ~tab.at_upper & (reduced < -_COST_TOL)
        decrease = movable & tab.at_upper & (reduced > _COST_TOL)
        eligible = np.flatnonzero(increase | decrease)
        if eligible.size == 0:
            return OPTIMAL
        if bland:
            j = int(eligible[0])
        else:
            j = int(eligible[np.argmax(np.abs(reduced[eligible]))])
        direction = 1.0 if increase[j] else -1.0

        step = tab.upper[j] - tab.lower[j]
        row = -1
        if m:
            alpha = -direction * tab.t[:, j]
            xb = tab.x[tab.basic]
            lb = tab.lower[tab.basic]
            ub = tab.upper[tab.basic]
            ratios = np.full(m, math.inf)
            falling = alpha < -_PIVOT_TOL
            ratios[falling] = (xb[falling] - lb[falling]) / -alpha[falling]
            rising = (alpha > _PIVOT_TOL) & np.isfinite(ub)
            ratios[rising] = (ub[rising] - xb[rising]) / alpha[rising]
            ratios = np.maximum(ratios, 0.0)
            best = float(ratios.min())
            if best < step:
                ties = np.flatnonzero(ratios <= best + _RATIO_TOL)
                if bland:
                    row = int(ties[np.argmin(tab.basic[ties])])
                else:
                    row = int(ties[np.argmax(np.abs(alpha[ties]))])
                step = best
        if not math.isfinite(step):
            return UNBOUNDED

        if row < 0:
            # 基底を変えずに反対側の境界へ移るだけ
            tab.at_upper[j] = not tab.at_upper[j]
            tab.x[j] = tab.upper[j] if tab.at_upper[j] else tab.lower[j]
        else:
            leaving = int(tab.basic[row])
            to_upper = bool(alpha[row] > 0)
            pivot = tab.t[row, j]
            tab.t[row] /= pivot
            tab.rhs[row] /= pivot
            factors = tab.t[:, j].copy()
            factors[row] = 0.0
            tab.t -= np.outer(factors, tab.t[row])
            tab.rhs -= factors * tab.rhs[row]
            tab.is_basic[leaving] = False
            tab.at_upper[leaving] = to_upper
            tab.x[leaving] = tab.upper[leaving] if to_upper else tab.lower[leaving]
            tab.is_basic[j] = True
            tab.at_upper[j] = False
            tab.basic[row] = j
        tab.refresh_basics()
        tab.iterations += 1

        degenerate = degenerate + 1 if step <= _RATIO_TOL else 0
        if degenerate > _BLAND_AFTER and not bland:
            logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
            bland = True
    raise NumericalError(f"simplex did not converge within {max_iter} iterations")


def _solve_relaxation(
    model: MilpModel,
    lower: np.ndarray,
    upper: np.ndarray,
    tol: Tolerances,
) -> _LpResult:
    a, b, senses = model.dense()
    sign = 1.0 if model.sense == MINIMIZE else -1.0
    cost = sign * model.objective_vector()
    n = a.shape[1]
    if np.any(lower > upper):
        return _LpResult(INFEASIBLE)

    tab, n_slack, n_art = _build_tableau(a, b, senses, lower, upper)
    total = tab.t.shape[1]
    max_iter = 200 * (total + a.shape[0]) + 1000

    if n_art:
        phase_one = np.zeros(total)
        phase_one[n + n_slack:] = 1.0
        _iterate(tab, phase_one, max_iter)
        infeasibility = float(np.sum(tab.x[n + n_slack:]))
        threshold = tol.feasibility * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
        if infeasibility > threshold:
            return _LpResult(INFEASIBLE, iterations=tab.iterations)
        tab.upper[n + n_slack:] = 0.0
        tab.refresh_basics()

    phase_two = np.concatenate([cost, np.zeros(total - n)])
    status = _iterate(tab, phase_two, max_iter)
    if status == UNBOUNDED:
        return _LpResult(UNBOUNDED, iterations=tab.iterations)
    x = np.clip(tab.x[:n], lower, upper)
    return _LpResult(OPTIMAL, x=x, objective=float(cost @ x), iterations=tab.iterations)


def solve_lp(model: MilpModel, tolerances: Optional[Tolerances] = None) -> MilpSolution:
    """Solve the continuous relaxation (integrality ignored)."""
    tol = tolerances or Tolerances()
    result = _solve_relaxation(model, model.lower_bounds(), model.upper_bounds(), tol)
    if result.status != OPTIMAL:
        return MilpSolution(status=result.status, nodes=1, iterations=result.iterations)
    sign = 1.0 if model.sense == MINIMIZE else -1.0
    objective = sign * result.objective + model.objective_constant
    return MilpSolution(
        status=OPTIMAL,
        values=tuple(float(v) for v in result.x),
        objective=objective,
        best_bound=objective,
        nodes=1,
        iterations=result.iterations,
    )


# --- branch and bound ----------------------------------------------------------


def _branching_variable(x: np.ndarray, integer_idx: np.ndarray, tol: float) -> Optional[int]:
    if integer_idx.size == 0:
        return None
    values = x[integer_idx]
    distance = np.abs(values - np.round(values))
    if float(distance.max()) <= tol:
        return None
    return int(integer_idx[int(np.argmax(distance))])


def _gap(incumbent: float, tol: Tolerances) -> float:
    return tol.optimality_gap * max(1.0, abs(incumbent))


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    x: np.ndarray = field(compare=False)
    depth: int = field(compare=False, default=0)


def solve_milp(
    model: MilpModel,
    tolerances: Optional[Tolerances] = None,
    node_limit: int = 10000,
    node_log: Optional[List[NodeRecord]] = None,
) -> MilpSolution:
    """Best-bound branch-and-bound.

    ``node_limit`` caps the LP relaxations solved. When it runs out the
    result has status ``node-limit`` with the incumbent (possibly None) and
    the best remaining bound. Pass a list as ``node_log`` to record every
    node that was created.
    A child relaxation that comes back unbounded ends the search with
    status ``unbounded``.
    """
    tol = tolerances or Tolerances()
    sign = 1.0 if model.sense == MINIMIZE else -1.0
    integer_idx = np.array(model.integer_indices, dtype=np.int64)
    lower = model.lower_bounds()
    upper = model.upper_bounds()
    if integer_idx.size:
        lower[integer_idx] = np.ceil(lower[integer_idx] - tol.integrality)
        upper[integer_idx] = np.floor(upper[integer_idx] + tol.integrality)

    seq = itertools.count()
    incumbent: Optional[np.ndarray] = None
    incumbent_obj = math.inf
    nodes = 0
    iterations = 0

    def record(node_id, parent, depth, bound, branch, lo, hi) -> None:
        if node_log is not None:
            node_log.append(
                NodeRecord(
                    node_id, parent, depth, sign * bound + model.objective_constant, branch,
                    tuple(float(v) for v in lo), tuple(float(v) for v in hi),
                )
            )

    def consider(x: np.ndarray, bound: float) -> bool:
        """Take an integral relaxation as incumbent; returns True when x was integral."""
        nonlocal incumbent, incumbent_obj
        if _branching_variable(x, integer_idx, tol.integrality) is not None:
            return False
        candidate = x.copy()
        candidate[integer_idx] = np.round(candidate[integer_idx])
        if model.max_violation(candidate) > tol.feasibility:
            candidate = x
        value = sign * (model.evaluate(candidate) - model.objective_constant)
        if value < incumbent_obj:
            incumbent, incumbent_obj = candidate, value
        return True

    root = _solve_relaxation(model, lower, upper, tol)
    nodes += 1
    iterations += root.iterations
    if root.status != OPTIMAL:
        return MilpSolution(status=root.status, nodes=nodes, iterations=iterations)
    root_id = next(seq)
    record(root_id, None, 0, root.objective, None, lower, upper)
    heap: List[_Node] = []
    if not consider(root.x, root.objective):
        heapq.heappush(heap, _Node(root.objective, root_id, lower, upper, root.x, 0))

    stopped = False
    while heap:
        node = heapq.heappop(heap)
        if node.bound >= incumbent_obj - _gap(incumbent_obj, tol):
            continue
        # both children must fit in the budget
        if nodes + 2 > node_limit:
            heapq.heappush(heap, node)
            stopped = True
            break
        j = _branching_variable(node.x, integer_idx, tol.integrality)
        value = node.x[j]
        down_upper = node.upper.copy()
        down_upper[j] = math.floor(value)
        up_lower = node.lower.copy()
        up_lower[j] = math.ceil(value)
        for child_lower, child_upper, branch in (
            (node.lower, down_upper, (j, LE, float(math.floor(value)))),
            (up_lower, node.upper, (j, GE, float(math.ceil(value)))),
        ):
            result = _solve_relaxation(model, child_lower, child_upper, tol)
            nodes += 1
            iterations += result.iterations
            if result.status == UNBOUNDED:
                logger.warning("relaxation of node %d child is unbounded (model %s)", node.seq, model.name)
                return MilpSolution(status=UNBOUNDED, nodes=nodes, iterations=iterations)
            if result.status != OPTIMAL:
                continue
            child_id = next(seq)
            bound = max(result.objective, node.bound)
            record(child_id, node.seq, node.depth + 1, bound, branch, child_lower, child_upper)
            if bound >= incumbent_obj - _gap(incumbent_obj, tol):
                continue
            if not consider(result.x, bound):
                heapq.heappush(heap, _Node(bound, child_id, child_lower, child_upper, result.x, node.depth + 1))

    if stopped:
        best_bound = min([n.bound for n in heap] + [incumbent_obj])
        logger.warning("branch-and-bound stopped at node limit %d (model %s)", node_limit, model.name)
        return MilpSolution(
            status=NODE_LIMIT,
            values=None if incumbent is None else tuple(float(v) for v in incumbent),
            objective=None if incumbent is None else sign * incumbent_obj + model.objective_constant,
            best_bound=sign * best_bound + model.objective_constant,
            nodes=nodes,
            iterations=iterations,
        )
    if incumbent is None:
        return MilpSolution(status=INFEASIBLE, nodes=nodes, iterations=iterations)
    objective = sign * incumbent_obj + model.objective_constant
    logger.debug("model %s solved: objective %.9g after %d nodes", model.name, objective, nodes)
    return MilpSolution(
        status=OPTIMAL,
        values=tuple(float(v) for v in incumbent),
        objective=objective,
        best_bound=objective,
        nodes=nodes,
        iterations=iterations,
    )
