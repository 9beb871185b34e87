"""Tests for the demand curve and clearing price."""

import numpy as np
import pytest

from src.der_population import aggregate_demand, build_population
from src.market import admissible_bids, build_demand_curve, clear_price, demand_at, enumerate_price_plans
from src.models import DemandCurve, DerParams, DerState, PopulationSpec
from src.validators import ConfigurationError

BIDS = (15.0, 25.0, 35.0)


def _random_population(seed, count):
    rng = np.random.default_rng(seed)
    soc = tuple(float(s) for s in rng.uniform(0.0, 1.0, size=count))
    return build_population(PopulationSpec(count=count, seed=seed, initial_soc=soc))


def test_demand_curve_from_pairs():
    """Test breakpoints of a hand-built population."""
    pairs = [
        (DerState(soc=0.25, m=1), DerParams(a=0.9)),  # 20 $/MWh
        (DerState(soc=0.5, m=1), DerParams(a=0.9)),  # 10 $/MWh
        (DerState(soc=0.25, m=1), DerParams(a=0.96)),  # 20 $/MWh
        (DerState(soc=0.0, m=0), DerParams(a=0.9)),  # lockout 中は入札しない
    ]
    curve = build_demand_curve(pairs)
    assert curve.breakpoints == ((10.0, 18.0), (20.0, 12.0))
    assert demand_at(curve, 15.0) == 12.0
    assert demand_at(curve, 25.0) == 0.0


def test_demand_curve_of_locked_population_is_empty():
    """Test that a population with every DER locked out has no demand."""
    pop = build_population(PopulationSpec(count=20, seed=1))
    assert build_demand_curve(pop) == DemandCurve()
    assert build_demand_curve([]) == DemandCurve()


def test_curve_matches_direct_aggregation():
    """Test that curve lookups equal summing the DERs willing to pay each price."""
    rng = np.random.default_rng(8)
    for seed in range(100):
        pop = _random_population(seed, int(rng.integers(0, 60)))
        curve = build_demand_curve(pop)
        for price in list(rng.uniform(-15.0, 35.0, size=5)) + list(BIDS):
            assert demand_at(curve, price) == aggregate_demand(pop, price)


def test_clear_price_at_base_when_feeder_has_room():
    """Test that p_base clears when its demand fits the feeder."""
    curve = DemandCurve(((10.0, 60.0), (20.0, 30.0)))
    result = clear_price(curve, 15.0, 30.0, BIDS)
    assert result.price == 15.0
    assert result.over_capacity is False
    assert result.demand_kw == 30.0


def test_clear_price_raises_to_first_fitting_bid():
    """Test that a binding feeder lifts the price to the lowest bid that fits."""
    curve = DemandCurve(((10.0, 60.0), (20.0, 48.0), (30.0, 12.0)))
    result = clear_price(curve, 15.0, 20.0, BIDS)
    assert result.price == 25.0
    assert result.demand_kw == 12.0


def test_clear_price_over_capacity():
    """Test the highest bid and the flag when no bid brings demand under the limit."""
    curve = DemandCurve(((40.0, 90.0),))
    result = clear_price(curve, 15.0, 50.0, BIDS)
    assert result.price == 35.0
    assert result.over_capacity is True
    assert result.demand_kw == 90.0


def test_clear_price_without_bids():
    """Test that a binding feeder with no bids is a configuration error."""
    curve = DemandCurve(((40.0, 90.0),))
    with pytest.raises(ConfigurationError):
        clear_price(curve, 15.0, 50.0, ())
    assert clear_price(curve, 15.0, 100.0, ()).price == 15.0


def test_clearing_properties_over_random_populations():
    """Test membership, capacity and minimality of the clearing price."""
    rng = np.random.default_rng(21)
    for seed in range(100):
        pop = _random_population(seed, 40)
        curve = build_demand_curve(pop)
        capacity = float(rng.uniform(0.0, 150.0))
        result = clear_price(curve, 15.0, capacity, BIDS)
        assert result.price in (15.0,) + BIDS
        if result.over_capacity:
            assert result.price == BIDS[-1]
            assert all(aggregate_demand(pop, p) > capacity for p in (15.0,) + BIDS)
        else:
            assert aggregate_demand(pop, result.price) <= capacity
            lower = [p for p in (15.0,) + BIDS if p < result.price]
            assert all(aggregate_demand(pop, p) > capacity for p in lower)


def test_admissible_bids():
    """Test the candidate set for each clearing outcome."""
    roomy = DemandCurve(((10.0, 6.0),))
    assert admissible_bids(roomy, 15.0, 100.0, BIDS) == BIDS
    assert admissible_bids(roomy, 20.0, 100.0, BIDS) == (25.0, 35.0)
    assert admissible_bids(roomy, 40.0, 100.0, BIDS) == (40.0,)
    tight = DemandCurve(((10.0, 60.0), (20.0, 48.0), (30.0, 12.0)))
    assert admissible_bids(tight, 15.0, 20.0, BIDS) == (25.0, 35.0)
    assert admissible_bids(tight, 15.0, 5.0, BIDS) == (35.0,)


def test_enumerate_price_plans():
    """Test that each bid yields one constant plan over the horizon."""
    assert enumerate_price_plans((15.0, 25.0), 3) == [(15.0, 15.0, 15.0), (25.0, 25.0, 25.0)]
    with pytest.raises(ConfigurationError):
        enumerate_price_plans((15.0,), 0)
