"""Tests for data models."""

import numpy as np
import pytest

from src.models import (
    BESS,
    DG,
    DemandCurve,
    DerParams,
    DerPopulation,
    DerState,
    DispatchDecision,
    RunReport,
    StepResult,
    UnitClass,
    UnitDispatch,
)


def _step(k, j, dg_kw=0.0, bess_kw=0.0, price=15.0, unserved=0.0):
    units = (
        UnitDispatch("DG", DG, (1,), 1 if dg_kw else 0, 1 if dg_kw else 0, 0, dg_kw),
        UnitDispatch("BESS", BESS, (0,), 0, 0, 0, bess_kw),
    )
    return StepResult(
        interval=k,
        clearing_price=price,
        demand_kw=dg_kw + bess_kw + unserved,
        served_kw=dg_kw + bess_kw,
        unserved_kw=unserved,
        res_available_kw=500.0,
        res_deterministic_kw=1000.0,
        res_used_kw=0.0,
        decision=DispatchDecision(units=units),
        j1=j,
        j2=0.0,
        j3=0.0,
        j=j,
    )


def test_demand_curve_step_lookup():
    """Test that demand at a price is the cumulative demand of the first breakpoint at or above it."""
    curve = DemandCurve(((10.0, 18.0), (20.0, 12.0), (30.0, 6.0)))
    assert curve.demand_at(5.0) == 18.0
    assert curve.demand_at(10.0) == 18.0
    assert curve.demand_at(10.5) == 12.0
    assert curve.demand_at(30.0) == 6.0
    assert curve.demand_at(30.1) == 0.0
    assert curve.total_demand == 18.0


def test_empty_demand_curve():
    """Test that an empty curve has zero demand everywhere."""
    curve = DemandCurve()
    assert curve.demand_at(-100.0) == 0.0
    assert curve.total_demand == 0.0


def test_unit_class_properties():
    """Test max power and statefulness of a unit class."""
    dg = UnitClass("DG", DG, 10, (50.0, 100.0, 150.0, 200.0), 1.0, 2.0, 1.0)
    bess = UnitClass("BESS", BESS, 50, (10.0, 20.0, 30.0, 40.0), 0.1)
    assert dg.max_power == 2000.0
    assert bess.max_power == 2000.0
    assert dg.stateful is True
    assert bess.stateful is False


def test_population_pairs_round_trip():
    """Test that from_pairs and pairs preserve every field."""
    pairs = [
        (DerState(soc=0.8, m=0, v=1), DerParams(a=0.9)),
        (DerState(soc=0.3, m=1, v=0), DerParams(a=0.96, beta=35.0)),
    ]
    pop = DerPopulation.from_pairs(pairs)
    assert len(pop) == 2
    assert pop.class_labels == (0.9, 0.96)
    assert list(pop.class_index) == [0, 1]
    assert pop.pairs() == pairs


def test_population_copy_is_independent():
    """Test that copying a population decouples the live state."""
    pop = DerPopulation.from_pairs([(DerState(soc=0.5, m=1), DerParams(a=0.9))])
    clone = pop.copy()
    clone.soc[0] = 0.1
    assert pop.soc[0] == 0.5
    assert np.array_equal(clone.a, pop.a)


def test_run_report_cumulative_cost_is_prefix_sum():
    """Test that cumulative cost is the running sum of per-interval j."""
    steps = [_step(0, 1.5), _step(1, 2.25), _step(2, 0.0)]
    report = RunReport.from_steps(1, steps, (0.9,), [(0.8,), (0.7,), (0.6,), (0.5,)], [(0.0,)] * 3, ("DG", "BESS"))
    assert [s.cumulative_cost for s in report.steps] == [1.5, 3.75, 3.75]
    assert report.summary.total_cost == 3.75


def test_run_report_summary_totals():
    """Test that summary totals equal sums of the per-interval records."""
    steps = [_step(0, 1.0, dg_kw=50.0, bess_kw=10.0, price=15.0), _step(1, 1.0, bess_kw=30.0, price=25.0, unserved=4.0)]
    report = RunReport.from_steps(
        2, steps, (0.9, 0.96), [(0.8, 0.6), (0.6, 0.4), (0.5, 0.3)], [(0.0, 0.0)] * 2, ("DG", "BESS"), 0.5
    )
    summary = report.summary
    assert dict(summary.energy_by_kind_kwh) == {"BESS": 20.0, "DG": 25.0}
    assert dict(summary.energy_by_unit_kwh) == {"DG": 25.0, "BESS": 20.0}
    # 最終状態の行は平均に含めない
    assert [a for a, _ in summary.class_mean_soc] == [0.9, 0.96]
    assert [v for _, v in summary.class_mean_soc] == pytest.approx([0.7, 0.5])
    assert summary.res_deterministic_mwh == 1.0
    assert summary.res_available_mwh == 0.5
    assert summary.res_deterministic_mean_mw == 1.0
    assert summary.unserved_kwh == 2.0
    assert summary.mean_clearing_price == 20.0


def test_empty_run_report():
    """Test that a zero-interval report has a zero summary."""
    report = RunReport.from_steps(1, [], (0.9,), [(0.8,)], [], ("DG",))
    assert report.steps == ()
    assert report.summary.total_cost == 0.0
    assert report.summary.class_mean_soc == ((0.9, 0.0),)
