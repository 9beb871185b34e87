"""Demand-side DER population as generalized batteries.

Scalar helpers work on one (DerState, DerParams) pair; the population
functions run the same arithmetic on numpy arrays so both paths give
bit-identical results.

Per interval the order is fixed: price -> on/off decision -> demand ->
SOC step -> lockout update (lockout looks at the post-step SOC).
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .models import DerLimits, DerParams, DerPopulation, DerState, PopulationSpec
from .validators import ConfigurationError, validate_der_params, validate_population

logger = logging.getLogger(__name__)

PopulationLike = Union[DerPopulation, Sequence[Tuple[DerState, DerParams]]]


def step_soc(state: DerState, params: DerParams, limits: Optional[DerLimits] = None) -> DerState:
    validate_der_params(params, limits)
    soc = params.a * state.soc + params.gamma * (state.m * state.v)
    return DerState(soc=min(soc, params.soc_max), m=state.m, v=state.v)


def compute_price(state: DerState, params: DerParams) -> float:
    # 負の価格もそのまま返す（クランプしない）
    return params.p_max - params.beta * state.soc


def decide_on(price: float, p_clear: float) -> int:
    return 1 if price >= p_clear else 0


def update_lockout(state: DerState, params: DerParams) -> int:
    if state.soc >= params.soc_max:
        return 0
    if state.soc < params.soc_set:
        return 1
    return state.m


def aggregate_demand(population: PopulationLike, p_clear: float) -> float:
    """Total charging power (kW) the population would draw at ``p_clear``."""
    pop = as_population(population)
    if len(pop) == 0:
        return 0.0
    prices = pop.p_max - pop.beta * pop.soc
    on = (prices >= p_clear) & (pop.m == 1)
    return float(np.sum(pop.p_rated[on]))


def as_population(population: PopulationLike) -> DerPopulation:
    if isinstance(population, DerPopulation):
        return population
    return DerPopulation.from_pairs(list(population))


def advance_population(pop: DerPopulation, p_clear: float) -> float:
    """Advance the live state by one interval in place; returns the demand (kW)."""
    prices = pop.p_max - pop.beta * pop.soc
    v = (prices >= p_clear).astype(np.int64)
    charging = pop.m * v
    demand = float(np.sum(pop.p_rated[charging == 1]))
    soc = np.minimum(pop.a * pop.soc + pop.gamma * charging, pop.soc_max)
    m = np.where(soc >= pop.soc_max, 0, np.where(soc < pop.soc_set, 1, pop.m))
    pop.soc = soc
    pop.m = m.astype(np.int64)
    pop.v = v
    return demand


def simulate_population(
    population: PopulationLike,
    price_sequence: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the population forward under a clearing-price sequence.

    Returns (soc_trajectories, demand_series, price_series): SOC has shape
    (K+1, N) including the initial state, demand has shape (K,), customer
    prices have shape (K, N) and are the pre-step prices of each interval.
    The input population is not modified.
    """
    pop = as_population(population).copy()
    n_steps = len(price_sequence)
    socs = np.empty((n_steps + 1, len(pop)))
    prices = np.empty((n_steps, len(pop)))
    demand = np.zeros(n_steps)
    socs[0] = pop.soc
    for k, p_clear in enumerate(price_sequence):
        prices[k] = pop.p_max - pop.beta * pop.soc
        demand[k] = advance_population(pop, float(p_clear))
        socs[k + 1] = pop.soc
    return socs, demand, prices


def class_counts(count: int, fractions: Sequence[float]) -> List[int]:
    """Split ``count`` by fractions; floor each share, remainder to the first classes."""
    total = float(sum(fractions))
    if total <= 0 or any(f < 0 for f in fractions):
        raise ConfigurationError(f"class fractions must be non-negative with a positive sum, got {list(fractions)}")
    shares = [int(np.floor(count * f / total)) for f in fractions]
    remainder = count - sum(shares)
    for i in range(remainder):
        shares[i % len(shares)] += 1
    return shares


def build_population(spec: PopulationSpec, limits: Optional[DerLimits] = None) -> DerPopulation:
    limits = limits or DerLimits()
    labels = tuple(spec.a_classes)
    if not labels:
        raise ConfigurationError("a_classes must not be empty")
    fractions = spec.fractions if spec.fractions is not None else tuple(1.0 for _ in labels)
    if len(fractions) != len(labels):
        raise ConfigurationError(f"{len(fractions)} fractions given for {len(labels)} dissipation classes")
    counts = class_counts(spec.count, fractions)
    class_index = np.repeat(np.arange(len(labels), dtype=np.int64), counts)
    n = spec.count

    if spec.initial_soc is not None:
        if len(spec.initial_soc) != n:
            raise ConfigurationError(f"initial_soc has {len(spec.initial_soc)} values for {n} DERs")
        soc = np.array(spec.initial_soc, dtype=float)
    else:
        low, high = spec.initial_soc_range or (spec.soc_set, spec.soc_max)
        if not 0.0 <= low <= high <= spec.soc_max:
            raise ConfigurationError(
                f"initial_soc_range must satisfy 0 <= low <= high <= soc_max, got [{low}, {high}]"
            )
        rng = np.random.default_rng(spec.seed)
        soc = rng.uniform(low, high, size=n)

    pop = DerPopulation(
        a=np.array(labels, dtype=float)[class_index] if n else np.zeros(0),
        gamma=np.full(n, spec.gamma),
        beta=np.full(n, spec.beta),
        p_max=np.full(n, spec.p_max),
        soc_set=np.full(n, spec.soc_set),
        soc_max=np.full(n, spec.soc_max),
        p_rated=np.full(n, spec.p_rated),
        soc=soc,
        m=(soc < spec.soc_set).astype(np.int64),
        v=np.zeros(n, dtype=np.int64),
        class_index=class_index,
        class_labels=labels,
    )
    validate_population(pop, limits)
    logger.debug("built population of %d DERs, class sizes %s", n, counts)
    return pop


def class_means(values: np.ndarray, population: DerPopulation) -> Tuple[float, ...]:
    """Per-dissipation-class mean of a per-DER array (0.0 for empty classes)."""
    means = []
    for idx in range(len(population.class_labels)):
        mask = population.class_index == idx
        means.append(float(np.mean(values[mask])) if np.any(mask) else 0.0)
    return tuple(means)


def class_mean_soc(soc_row: np.ndarray, population: DerPopulation) -> Tuple[float, ...]:
    return class_means(soc_row, population)


def customer_prices(population: DerPopulation) -> np.ndarray:
    return population.p_max - population.beta * population.soc
