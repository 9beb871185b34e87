"""Tests for the LP / MILP kernel."""

import numpy as np
import pytest

from src import milp_core
from src.milp_core import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    MAXIMIZE,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    MilpModel,
    NodeRecord,
    solve_lp,
    solve_milp,
)
from src.oracle import enumerate_milp
from src.validators import ModelError


def _two_var_lp():
    model = MilpModel("lp")
    x = model.add_variable("x")
    y = model.add_variable("y")
    model.add_constraint({x: 1, y: 2}, LE, 4)
    model.add_constraint({x: 3, y: 1}, LE, 6)
    model.set_objective({x: 1, y: 1}, MAXIMIZE)
    return model


def test_lp_vertex_optimum():
    """Test a two-variable LP whose optimum sits on two binding rows."""
    solution = solve_lp(_two_var_lp())
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(2.8)
    assert solution.values == pytest.approx((1.6, 1.2))


def test_lp_with_equality_and_ge_rows():
    """Test a model that needs a phase-one start."""
    model = MilpModel()
    x = model.add_variable("x", upper=10)
    y = model.add_variable("y", upper=10)
    model.add_constraint({x: 1, y: 1}, EQ, 7)
    model.add_constraint({x: 1, y: -1}, GE, 1)
    model.set_objective({x: 2, y: 1}, constant=5.0)
    solution = solve_lp(model)
    assert solution.status == OPTIMAL
    assert solution.values == pytest.approx((4.0, 3.0))
    assert solution.objective == pytest.approx(16.0)


def test_lp_infeasible_and_unbounded():
    """Test infeasible and unbounded relaxations."""
    infeasible = MilpModel()
    x = infeasible.add_variable("x")
    infeasible.add_constraint({x: 1}, LE, 1)
    infeasible.add_constraint({x: 1}, GE, 2)
    assert solve_lp(infeasible).status == INFEASIBLE

    unbounded = MilpModel()
    x = unbounded.add_variable("x")
    y = unbounded.add_variable("y")
    unbounded.add_constraint({x: 1, y: -1}, LE, 1)
    unbounded.set_objective({x: -1})
    assert solve_lp(unbounded).status == UNBOUNDED


def test_small_lp_vertices():
    """Test hand-solved two-variable LPs."""
    model = MilpModel()
    x = model.add_variable("x", upper=10)
    model.add_constraint({x: 1}, LE, 3)
    model.set_objective({x: 1}, MAXIMIZE)
    assert solve_lp(model).objective == pytest.approx(3.0)

    model = MilpModel()
    x = model.add_variable("x", upper=5)
    y = model.add_variable("y", upper=5)
    model.add_constraint({x: 1, y: 1}, GE, 2)
    model.set_objective({x: 1, y: 1})
    assert solve_lp(model).objective == pytest.approx(2.0)

    model = MilpModel()
    x = model.add_variable("x")
    y = model.add_variable("y")
    model.add_constraint({x: 1, y: 1}, GE, 4)
    model.add_constraint({x: 1}, GE, 1)
    model.set_objective({x: 3, y: 2})
    solution = solve_lp(model)
    assert solution.values == pytest.approx((1.0, 3.0))
    assert solution.objective == pytest.approx(9.0)


def test_binary_knapsack():
    """Test a 0/1 knapsack solved by branch-and-bound."""
    model = MilpModel("knapsack")
    a, b, c = (model.add_integer(name, 0, 1) for name in "abc")
    model.add_constraint({a: 1, b: 1, c: 1}, LE, 2)
    model.set_objective({a: 5, b: 4, c: 3}, MAXIMIZE)
    solution = solve_milp(model)
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(9.0)
    assert solution.values == pytest.approx((1.0, 1.0, 0.0))


def test_integral_relaxation_needs_no_branching():
    """Test that an integral LP optimum is returned at the root."""
    model = MilpModel()
    x = model.add_integer("x", 0, 10)
    y = model.add_integer("y", 0, 10)
    model.add_constraint({x: 1, y: 1}, LE, 7)
    model.set_objective({x: 2, y: 1}, MAXIMIZE)
    lp = solve_lp(model)
    milp = solve_milp(model)
    assert milp.nodes == 1
    assert milp.values == pytest.approx(lp.values)
    assert milp.objective == pytest.approx(14.0)


def test_bid_selection_toy():
    """Test covering 50 kW from bid variables at 1 $/kW."""
    model = MilpModel("bids")
    bids = (50.0, 100.0, 150.0, 200.0)
    xs = [model.add_integer(f"b{int(b)}", 0, 1) for b in bids]
    model.add_constraint(dict(zip(xs, bids)), GE, 50.0)
    model.set_objective(dict(zip(xs, bids)))
    solution = solve_milp(model)
    assert solution.objective == pytest.approx(50.0)
    assert solution.values == pytest.approx((1.0, 0.0, 0.0, 0.0))


def test_solves_are_repeatable():
    """Test that solving the same model twice gives identical results and node counts."""
    model = MilpModel()
    xs = [model.add_integer(f"x{i}", 0, 4) for i in range(4)]
    model.add_constraint(dict(zip(xs, (3, 5, 7, 2))), LE, 17)
    model.set_objective(dict(zip(xs, (-2.3, -3.1, -4.7, -1.9))))
    first, second = solve_milp(model), solve_milp(model)
    assert first.values == second.values
    assert first.nodes == second.nodes


def test_integer_infeasible_with_feasible_relaxation():
    """Test 2x = 3 over the integers."""
    model = MilpModel()
    x = model.add_integer("x", 0, 5)
    model.add_constraint({x: 2}, EQ, 3)
    model.set_objective({x: 1})
    assert solve_lp(model).status == OPTIMAL
    assert solve_milp(model).status == INFEASIBLE


def test_node_limit_reports_bound():
    """Test that an exhausted node budget returns the remaining bound."""
    model = MilpModel()
    x = model.add_integer("x", 0, 3)
    y = model.add_integer("y", 0, 3)
    model.add_constraint({x: 2, y: 2}, LE, 3)
    model.set_objective({x: -1, y: -1})
    limited = solve_milp(model, node_limit=1)
    assert limited.status == NODE_LIMIT
    assert limited.best_bound <= -1.0
    full = solve_milp(model)
    assert full.status == OPTIMAL
    assert full.objective == pytest.approx(-1.0)
    assert limited.best_bound <= full.objective


def _knapsack_model():
    model = MilpModel()
    xs = [model.add_integer(f"x{i}", 0, 4) for i in range(4)]
    model.add_constraint(dict(zip(xs, (3, 5, 7, 2))), LE, 17)
    model.add_constraint(dict(zip(xs, (4, 1, 3, 6))), LE, 19)
    model.set_objective(dict(zip(xs, (-2.3, -3.1, -4.7, -1.9))))
    return model


@pytest.mark.parametrize("limit", [1, 2, 3, 4, 5, 8, 13])
def test_node_count_never_exceeds_limit(limit):
    """Test that the relaxations solved stay within the node limit."""
    full = solve_milp(_knapsack_model())
    limited = solve_milp(_knapsack_model(), node_limit=limit)
    assert limited.nodes <= limit
    if limit < full.nodes:
        assert limited.status == NODE_LIMIT
        assert limited.best_bound <= full.objective + 1e-9
    else:
        assert limited.objective == pytest.approx(full.objective)


def test_unbounded_child_relaxation_is_reported(monkeypatch):
    """Test that an unbounded child relaxation ends the search as unbounded."""
    calls = []
    real = milp_core._solve_relaxation

    def relaxation(model, lower, upper, tol):
        calls.append(1)
        if len(calls) == 1:
            return real(model, lower, upper, tol)
        return milp_core._LpResult(UNBOUNDED)

    model = MilpModel()
    x = model.add_integer("x", 0, 3)
    y = model.add_integer("y", 0, 3)
    model.add_constraint({x: 2, y: 2}, LE, 3)
    model.set_objective({x: -1, y: -1})
    monkeypatch.setattr(milp_core, "_solve_relaxation", relaxation)
    solution = solve_milp(model)
    assert solution.status == UNBOUNDED
    assert solution.values is None
    assert solution.nodes == 2


def test_node_log_bounds_never_improve_down_the_tree():
    """Test that every child's bound is no better than its parent's."""
    model = MilpModel()
    xs = [model.add_integer(f"x{i}", 0, 4) for i in range(4)]
    model.add_constraint(dict(zip(xs, (3, 5, 7, 2))), LE, 17)
    model.add_constraint(dict(zip(xs, (4, 1, 3, 6))), LE, 19)
    model.set_objective(dict(zip(xs, (-2.3, -3.1, -4.7, -1.9))))
    log = []
    solution = solve_milp(model, node_log=log)
    assert solution.status == OPTIMAL
    assert log and all(isinstance(r, NodeRecord) for r in log)
    by_id = {r.node_id: r for r in log}
    assert log[0].parent is None
    for record in log[1:]:
        parent = by_id[record.parent]
        assert record.bound >= parent.bound - 1e-9
        assert record.depth == parent.depth + 1
    assert log[0].bound <= solution.objective + 1e-9


def test_model_builder_errors():
    """Test rejection of malformed variables, rows and objectives."""
    model = MilpModel()
    x = model.add_variable("x", upper=5)
    with pytest.raises(ModelError, match="twice"):
        model.add_variable("x")
    with pytest.raises(ModelError, match="finite upper"):
        model.add_integer("n", 0, float("inf"))
    with pytest.raises(ModelError, match="lower bound"):
        model.add_variable("z", lower=3, upper=1)
    with pytest.raises(ModelError, match="unknown variable index"):
        model.add_constraint({7: 1.0}, LE, 1)
    with pytest.raises(ModelError, match="unknown sense"):
        model.add_constraint({x: 1.0}, "<", 1)
    with pytest.raises(ModelError, match="non-finite"):
        model.add_constraint({x: float("nan")}, LE, 1)
    with pytest.raises(ModelError):
        model.set_objective({x: 1.0}, "min")
    with pytest.raises(ModelError):
        model.index_of("missing")


def test_dump_lists_every_part():
    """Test the plain-text model rendering."""
    text = _two_var_lp().dump()
    lines = text.splitlines()
    assert lines[0] == "model lp"
    assert lines[1].startswith("objective maximize 1.0*x 1.0*y")
    assert "var 0 x continuous [0.0, inf]" in lines
    assert "con c0: 1.0*x 2.0*y <= 4.0" in lines
    assert text.endswith("\n")


def test_evaluate_and_violation():
    """Test objective evaluation and the violation measure."""
    model = _two_var_lp()
    assert model.evaluate((1.0, 1.0)) == 2.0
    assert model.max_violation((1.6, 1.2)) == pytest.approx(0.0, abs=1e-12)
    assert model.max_violation((4.0, 0.0)) == pytest.approx(6.0)


def _random_model(rng):
    model = MilpModel("random")
    n = int(rng.integers(1, 7))
    xs = [model.add_integer(f"x{i}", int(rng.integers(-1, 1)), int(rng.integers(1, 4))) for i in range(n)]
    for _ in range(int(rng.integers(0, 6))):
        coeffs = {x: int(c) for x, c in zip(xs, rng.integers(-3, 4, size=n))}
        sense = (LE, GE, EQ)[int(rng.choice(3, p=[0.6, 0.3, 0.1]))]
        model.add_constraint(coeffs, sense, int(rng.integers(-3, 8)))
    sense = "minimize" if rng.random() < 0.5 else MAXIMIZE
    model.set_objective({x: float(c) for x, c in zip(xs, rng.normal(size=n))}, sense, float(rng.normal()))
    return model


def test_branch_and_bound_matches_enumeration():
    """Test status and objective against exhaustive search on random small models."""
    rng = np.random.default_rng(2024)
    for _ in range(200):
        model = _random_model(rng)
        expected = enumerate_milp(model)
        solution = solve_milp(model)
        assert solution.status == expected.status, model.dump()
        if expected.status == OPTIMAL:
            assert solution.objective == pytest.approx(expected.objective, rel=1e-9, abs=1e-9), model.dump()
            assert model.max_violation(solution.values) <= 1e-7
