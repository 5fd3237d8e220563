"""Shared builders for synthetic test instances."""

import numpy as np

from maintplan import AssetSpec, BudgetSpec, NetworkSpec
from maintplan.network import validate_distribution, validate_transition_matrix

RESET_TO_PRIME = np.array([[1.0, 0, 0, 0, 0]] * 5)


def random_stochastic_matrix(rng: np.random.Generator, K: int) -> np.ndarray:
    rows = rng.uniform(0.05, 1.0, size=(K, K))
    return rows / rows.sum(axis=1, keepdims=True)


def decaying_matrix(rng: np.random.Generator, K: int) -> np.ndarray:
    """Upper-triangular-ish deterioration: stay or slip toward state K."""
    m = np.zeros((K, K))
    for s in range(K - 1):
        stay = rng.uniform(0.5, 0.9)
        m[s, s] = stay
        m[s, s + 1] = 1.0 - stay
    m[K - 1, K - 1] = 1.0
    return m


def random_network(rng: np.random.Generator, n: int, h: int, K: int = 5,
                   reset_maintenance: bool = False,
                   weight_range=(20.0, 120.0),
                   unit_cost_range=(0.8, 1.2)) -> NetworkSpec:
    assets = []
    for i in range(n):
        if reset_maintenance:
            act = np.zeros((K, K))
            act[:, 0] = 1.0
        else:
            act = random_stochastic_matrix(rng, K)
        initial = rng.uniform(0.0, 1.0, K)
        initial = initial / initial.sum()
        assets.append(AssetSpec(
            id=f"a{i}",
            weight=float(rng.uniform(*weight_range)),
            unit_cost=rng.uniform(*unit_cost_range, size=h),
            deterioration=validate_transition_matrix(
                random_stochastic_matrix(rng, K), K),
            maintenance=validate_transition_matrix(act, K),
            initial=validate_distribution(initial, K),
        ))
    return NetworkSpec(assets=tuple(assets), K=K)


def budget_for(network: NetworkSpec, rng: np.random.Generator,
               lower_frac=(0.0, 0.3), width_frac=(0.3, 0.7),
               total_frac=(0.6, 1.0)) -> BudgetSpec:
    """A budget whose annual window admits at least one subset each year."""
    h = network.horizon
    year_total = np.array([network.year_costs(t).sum() for t in range(h)])
    lo = rng.uniform(*lower_frac) * year_total
    hi = lo + rng.uniform(*width_frac) * year_total
    # the full-treatment subset costs year_total, so [lo, hi] with
    # hi >= year_total * lower_frac+width is nonempty as long as some
    # subset lands inside; widen upward to be safe
    total = float(rng.uniform(*total_frac) * hi.sum())
    total = max(total, float(lo.sum()) + 1.0)
    return BudgetSpec(horizon=h, lower=lo, upper=hi, total=total)


def brute_force_knapsack(values: np.ndarray, costs: np.ndarray,
                         lower: float, upper: float):
    """Exhaustive doubly-bounded 0/1 optimum: (best_value, best_mask) or None.

    Ties resolve to the smallest bitmask, like the solver's contract.
    """
    n = len(values)
    best = None
    for mask in range(1 << n):
        cost = 0.0
        value = 0.0
        for i in range(n):
            if mask >> i & 1:
                cost += costs[i]
                value += values[i]
        if lower <= cost <= upper:
            if best is None or value > best[0] + 1e-12:
                best = (value, mask)
    return best
