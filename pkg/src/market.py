"""Demand curve and clearing-price selection for the DER market."""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from .der_population import PopulationLike, as_population
from .models import ClearingResult, DemandCurve
from .validators import ConfigurationError

logger = logging.getLogger(__name__)


def build_demand_curve(population: PopulationLike) -> DemandCurve:
    """Aggregate the willingness-to-pay of every chargeable DER (m = 1)."""
    pop = as_population(population)
    if len(pop) == 0:
        return DemandCurve()
    prices = pop.p_max - pop.beta * pop.soc
    mask = pop.m == 1
    if not np.any(mask):
        return DemandCurve()
    unique, inverse = np.unique(prices[mask], return_inverse=True)
    per_price = np.bincount(inverse, weights=pop.p_rated[mask], minlength=unique.size)
    # 各価格以上で充電するDERの合計 = 高い側からの累積和
    cumulative = np.cumsum(per_price[::-1])[::-1]
    return DemandCurve(tuple((float(p), float(d)) for p, d in zip(unique, cumulative)))


def demand_at(curve: DemandCurve, price: float) -> float:
    return curve.demand_at(price)


def clear_price(
    curve: DemandCurve,
    p_base: float,
    feeder_capacity: float,
    bids: Sequence[float],
) -> ClearingResult:
    base_demand = demand_at(curve, p_base)
    if base_demand <= feeder_capacity:
        return ClearingResult(price=p_base, over_capacity=False, demand_kw=base_demand)
    if not bids:
        raise ConfigurationError("feeder capacity binds at p_base but no price bids are configured")
    for bid in bids:
        demand = demand_at(curve, bid)
        if demand <= feeder_capacity:
            return ClearingResult(price=bid, over_capacity=False, demand_kw=demand)
    top = bids[-1]
    logger.warning("feeder capacity %.1f kW exceeded even at the highest bid %.2f", feeder_capacity, top)
    return ClearingResult(price=top, over_capacity=True, demand_kw=demand_at(curve, top))


def admissible_bids(
    curve: DemandCurve,
    p_base: float,
    feeder_capacity: float,
    bids: Sequence[float],
) -> Tuple[float, ...]:
    """Candidate prices an MPC step may choose from.

    Bids at or above the clearing price; only the highest bid when the
    feeder is over capacity; the clearing price itself when no bid reaches it.
    """
    cleared = clear_price(curve, p_base, feeder_capacity, bids)
    if cleared.over_capacity:
        return (cleared.price,)
    allowed = tuple(b for b in bids if b >= cleared.price)
    return allowed if allowed else (cleared.price,)


def enumerate_price_plans(bids: Sequence[float], horizon: int) -> List[Tuple[float, ...]]:
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}")
    return [tuple(float(b) for _ in range(horizon)) for b in bids]
