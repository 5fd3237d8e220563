"""Exact selection of which assets to treat within a year's budget window.

The per-year subproblem is a 0/1 knapsack with BOTH a lower and an upper
cost bound: maximize the priority-weighted one-step improvement

    sum_i  value_i * x_i,   value_i = priority_i * gain_i,

subject to  lower <= sum_i cost_i * x_i <= upper.  Values may be negative
(a negative priority marks an asset the planner wants left alone); a
negative-value item enters an optimal solution only when the lower bound
forces spending.

Costs are real-valued, which rules out the classical integer DP, so the
solver is a depth-first branch and bound over items in value-density
order with

* a fractional-relaxation upper bound (greedy fill of positive-value
  items, fractional at the break item; ignoring the lower bound keeps it
  a valid upper bound), and
* a cost-reachability prune (a node dies when even taking every
  remaining item cannot reach the lower bound).

Ties between equal-objective subsets resolve to the smallest selection
bitmask (bit i = asset i), matching the deterministic ordering used by
``enumerate_feasible_subsets``.  Window membership uses exact float
comparisons; subset costs within a rounding error of a bound are
inherently ambiguous and not defended against.

When no subset satisfies the lower bound at all, ``solve`` falls back to
the maximum-cost subset that fits under the upper bound and flags the
solution with ``relaxed_lower=True`` so trainers can surface the event.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import AssetSpec, NetworkSpec, ValidationError, kappa_vector

#: Hard cap on problem size for the branch-and-bound solver.
SOLVE_MAX_ITEMS = 64
#: Hard cap for exhaustive subset enumeration.
ENUMERATE_MAX_ITEMS = 25

#: Relative slack under which two subset objectives count as tied.
_TIE_REL = 1e-12


class ScaleError(ValueError):
    """Problem size exceeds the module's exactness contract."""


@dataclass(frozen=True)
class KnapsackInstance:
    values: np.ndarray   # (n,) may be negative
    costs: np.ndarray    # (n,) strictly positive
    lower: float
    upper: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        costs = np.asarray(self.costs, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "costs", costs)
        if values.shape != costs.shape or values.ndim != 1:
            raise ValidationError(
                f"values/costs shape mismatch: {values.shape} vs {costs.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        if np.any(costs <= 0):
            raise ValidationError("costs must be strictly positive")
        if self.lower > self.upper:
            raise ValidationError(f"lower {self.lower} exceeds upper {self.upper}")


@dataclass(frozen=True)
class KnapsackSolution:
    selected: tuple[int, ...]  # ascending asset indices
    objective: float           # sum of values over the selection
    cost: float
    exact: bool
    relaxed_lower: bool

    @property
    def mask(self) -> int:
        m = 0
        for i in self.selected:
            m |= 1 << i
        return m


def gain(asset: AssetSpec, dist: np.ndarray) -> float:
    """Weighted next-year score improvement from treating one asset.

    w * (E[kappa] after the maintenance transition minus after the
    deterioration transition); zero when both dynamics coincide or the
    asset is already at the best reachable condition.
    """
    dist = np.asarray(dist, dtype=float)
    kv = kappa_vector(asset.initial.shape[0])
    return float(asset.weight * ((dist @ asset.maintenance) @ kv
                                 - (dist @ asset.deterioration) @ kv))


def gains(network: NetworkSpec, dists: np.ndarray) -> np.ndarray:
    """Vectorized ``gain`` for every asset at the given distributions."""
    kv = kappa_vector(network.K)
    act = np.einsum("nk,nkj->nj", dists, network.act_mats) @ kv
    det = np.einsum("nk,nkj->nj", dists, network.det_mats) @ kv
    return network.weights * (act - det)


def _subset_sums(costs: np.ndarray) -> np.ndarray:
    """Sums of all subsets of ``costs``, indexed by selection bitmask."""
    sums = np.zeros(1)
    for c in costs:
        sums = np.concatenate([sums, sums + c])
    return sums


def feasible_subset_masks(costs: np.ndarray, lower: float, upper: float
                          ) -> tuple[np.ndarray, np.ndarray]:
    """All bitmasks with subset cost in [lower, upper], ascending, plus costs."""
    costs = np.asarray(costs, dtype=float)
    n = costs.shape[0]
    if n > ENUMERATE_MAX_ITEMS:
        raise ScaleError(f"exhaustive enumeration limited to n <= "
                         f"{ENUMERATE_MAX_ITEMS}, got n = {n}")
    half = n // 2
    lo_sums = _subset_sums(costs[:half])
    hi_sums = _subset_sums(costs[half:])
    masks_out = []
    costs_out = []
    for hb, hi_sum in enumerate(hi_sums):
        total = hi_sum + lo_sums
        hits = np.flatnonzero((total >= lower) & (total <= upper))
        if hits.size:
            masks_out.append((hb << half) | hits.astype(np.int64))
            costs_out.append(total[hits])
    if not masks_out:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    masks = np.concatenate(masks_out)
    sums = np.concatenate(costs_out)
    order = np.argsort(masks, kind="stable")
    return masks[order], sums[order]


def _mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def enumerate_feasible_subsets(costs, lower: float, upper: float) -> list[tuple[int, ...]]:
    """All subsets with cost in [lower, upper], ordered by ascending bitmask."""
    masks, _ = feasible_subset_masks(np.asarray(costs, dtype=float), lower, upper)
    return [_mask_to_indices(int(m)) for m in masks]


def _canonical_sum(arr: np.ndarray, mask: int) -> float:
    """Sequential ascending-index sum over the set bits of ``mask``."""
    total = 0.0
    i = 0
    while mask:
        if mask & 1:
            total += arr[i]
        mask >>= 1
        i += 1
    return total


class _BranchAndBound:
    """DFS maximizer of sum(values) under lower <= cost <= upper."""

    def __init__(self, values: np.ndarray, costs: np.ndarray,
                 lower: float, upper: float):
        self.values = values
        self.costs = costs
        self.lower = lower
        self.upper = upper
        n = values.shape[0]
        # Density order sharpens both incumbents and fractional bounds;
        # items that cannot help the objective sort last.
        self.order = sorted(range(n), key=lambda i: values[i] / costs[i], reverse=True)
        self.ov = values[self.order]
        self.oc = costs[self.order]
        # suffix_cost[L] = total cost of items order[L:]
        self.suffix_cost = np.concatenate([np.cumsum(self.oc[::-1])[::-1], [0.0]])
        self.tie_tol = _TIE_REL * max(1.0, float(np.abs(values).sum()))
        self.best_value = -np.inf
        self.best_mask: int | None = None

    def _fractional_bound(self, level: int, capacity: float) -> float:
        bound = 0.0
        for k in range(level, self.ov.shape[0]):
            v = self.ov[k]
            if v <= 0.0:
                break  # density-sorted: everything after is worthless
            c = self.oc[k]
            if c <= capacity:
                bound += v
                capacity -= c
            else:
                bound += v * (capacity / c)
                break
        return bound

    def _record(self, mask: int, cost: float):
        if not self.lower <= cost <= self.upper:
            return
        value = _canonical_sum(self.values, mask)
        if value > self.best_value + self.tie_tol:
            self.best_value = value
            self.best_mask = mask
        elif value >= self.best_value - self.tie_tol and (
                self.best_mask is None or mask < self.best_mask):
            self.best_value = max(self.best_value, value)
            self.best_mask = mask

    def _dfs(self, level: int, mask: int, cost: float, value: float):
        if cost + self.suffix_cost[level] < self.lower:
            return  # even taking everything left cannot reach the lower bound
        if value + self._fractional_bound(level, self.upper - cost) \
                < self.best_value - self.tie_tol:
            return
        if level == self.ov.shape[0]:
            self._record(mask, cost)
            return
        i = self.order[level]
        c = self.oc[level]
        if cost + c <= self.upper:
            self._dfs(level + 1, mask | (1 << i), cost + c, value + self.ov[level])
        self._dfs(level + 1, mask, cost, value)

    def run(self) -> int | None:
        self._dfs(0, 0, 0.0, 0.0)
        return self.best_mask


def solve(instance: KnapsackInstance) -> KnapsackSolution:
    """Provably optimal subset for the doubly-bounded 0/1 problem.

    Falls back to the maximum-cost subset fitting under ``upper`` (with
    ``relaxed_lower=True``) when the lower bound is unreachable; in that
    case the reported objective is still the value sum of the returned
    selection.
    """
    n = instance.values.shape[0]
    if n > SOLVE_MAX_ITEMS:
        raise ScaleError(f"solver limited to n <= {SOLVE_MAX_ITEMS}, got n = {n}")

    bb = _BranchAndBound(instance.values, instance.costs,
                         instance.lower, instance.upper)
    mask = bb.run()
    if mask is not None:
        return KnapsackSolution(
            selected=_mask_to_indices(mask),
            objective=_canonical_sum(instance.values, mask),
            cost=_canonical_sum(instance.costs, mask),
            exact=True,
            relaxed_lower=False,
        )

    # No subset reaches the lower bound: spend as much as the upper bound
    # allows so the shortfall is as small as possible.
    fb = _BranchAndBound(instance.costs, instance.costs, 0.0, instance.upper)
    mask = fb.run()
    if mask is None:  # upper < 0 admits nothing, not even the empty set
        mask = 0
    return KnapsackSolution(
        selected=_mask_to_indices(mask),
        objective=_canonical_sum(instance.values, mask),
        cost=_canonical_sum(instance.costs, mask),
        exact=True,
        relaxed_lower=True,
    )
