"""Shared builders for small microgrid setups."""

from typing import Optional, Sequence

import numpy as np
import pytest
import yaml

from src.der_population import build_population
from src.models import (
    BESS,
    DG,
    HorizonConfig,
    MarketConfig,
    PopulationSpec,
    RunSetup,
    SolverConfig,
    UnitClass,
)

# 一般的な（丸めていない）コストで同点を避ける
GENERIC_DG = UnitClass(name="DG", kind=DG, count=2, bid_ladder=(50.0, 100.0), c_energy=0.93, c_start=2.7, c_noload=0.61)
GENERIC_BESS = UnitClass(name="BESS", kind=BESS, count=2, bid_ladder=(10.0, 20.0), c_energy=0.137)

PRESET_DG = UnitClass(name="DG", kind=DG, count=10, bid_ladder=(50.0, 100.0, 150.0, 200.0), c_energy=1.0, c_start=2.0, c_noload=1.0)

SMALL_RES = (12.0, 0.0, 35.0, 4.0, 0.0, 18.0)


def make_setup(
    scenario: int = 2,
    count: int = 10,
    n_k: int = 3,
    a_classes: Sequence[float] = (0.9, 0.96),
    seed: int = 0,
    classes: Sequence[UnitClass] = (GENERIC_DG, GENERIC_BESS),
    res: Optional[Sequence[float]] = None,
    res_worst: Optional[Sequence[float]] = None,
    price_bids: Sequence[float] = (15.0, 25.0, 35.0),
    p_base: float = 15.0,
    feeder_capacity: float = 1000.0,
    constant_price: float = 15.0,
    j3_weight: float = 1.0,
    horizon_mode: str = "shrinking",
    fixed_horizon_length: int = 2,
    dispatch_method: str = "decomposed",
    soc_range: Sequence[float] = (0.05, 0.7),
) -> RunSetup:
    """Small setup whose DERs start below soc_set so they bid inside the price range."""
    rng = np.random.default_rng(seed)
    initial = tuple(float(x) for x in rng.uniform(soc_range[0], soc_range[1], size=count))
    population = build_population(
        PopulationSpec(count=count, a_classes=tuple(a_classes), seed=seed, initial_soc=initial)
    )
    res = tuple(res) if res is not None else tuple(SMALL_RES[k % len(SMALL_RES)] for k in range(n_k))
    if res_worst is None and scenario == 3:
        res_worst = tuple(max(r - 10.0, 0.0) for r in res)
    return RunSetup(
        scenario=scenario,
        horizon=HorizonConfig(
            n_k=n_k,
            horizon_mode=horizon_mode,
            fixed_horizon_length=fixed_horizon_length,
            j3_weight=j3_weight,
        ),
        solver=SolverConfig(dispatch_method=dispatch_method),
        market=MarketConfig(
            p_base=tuple(p_base for _ in range(n_k)),
            feeder_capacity=tuple(feeder_capacity for _ in range(n_k)),
            price_bids=tuple(price_bids),
            constant_price=constant_price,
        ),
        classes=tuple(classes),
        population=population,
        res_deterministic=res,
        res_worst=tuple(res_worst) if res_worst is not None else None,
    )


SMALL_CONFIG = {
    "scenario": 2,
    "seed": 1,
    "horizon": {"n_k": 3},
    "population": {"count": 6, "a_classes": [0.9, 0.96], "initial_soc": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]},
    "units": [
        {"name": "DG", "kind": "DG", "count": 2, "bid_ladder": [50.0, 100.0], "c_energy": 0.93, "c_start": 2.7, "c_noload": 0.61},
        {"name": "BESS", "kind": "BESS", "count": 2, "bid_ladder": [10.0, 20.0], "c_energy": 0.137},
    ],
    "market": {"feeder_capacity": 1000.0},
    "res": {"wind": {"count": 0}, "pv": {"count": 1, "p_max": 20.0}},
    "series": {
        "irradiance": "synthetic",
        "wind_speed": "synthetic",
        "irr_uncertainty": "synthetic",
        "wind_uncertainty": "synthetic",
    },
}


@pytest.fixture
def small_setup():
    return make_setup


@pytest.fixture
def small_config_file(tmp_path):
    """Write the small three-interval config and return its path."""
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL_CONFIG, sort_keys=False), encoding="utf-8")
    return path


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="既定プリセット（1000 DER × 24区間）の検証も実行する")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full default-preset runs (enable with --run-slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="既定プリセットの全区間実行は時間がかかるため、--run-slow 指定時のみ")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def assert_same_run(actual, expected):
    """Decisions, prices and demand must match exactly; costs to rounding."""
    assert len(actual.steps) == len(expected.steps)
    for a, e in zip(actual.steps, expected.steps):
        assert a.clearing_price == e.clearing_price, a.interval
        assert a.demand_kw == e.demand_kw, a.interval
        assert a.decision.key() == e.decision.key(), a.interval
        assert a.served_kw == e.served_kw
        assert a.unserved_kw == e.unserved_kw
        for name in ("j1", "j2", "j3", "j", "cumulative_cost"):
            assert getattr(a, name) == pytest.approx(getattr(e, name), rel=1e-9, abs=1e-9), (a.interval, name)
    assert actual.summary.total_cost == pytest.approx(expected.summary.total_cost, rel=1e-9, abs=1e-9)
    for (la, va), (le, ve) in zip(actual.summary.class_mean_soc, expected.summary.class_mean_soc):
        assert la == le
        assert va == pytest.approx(ve, rel=1e-12)
