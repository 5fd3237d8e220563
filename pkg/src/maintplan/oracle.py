"""Exhaustive ground truth for small instances.

Enumerates every multi-year plan whose annual costs stay inside the
per-year windows, counts the ones that also respect the lifecycle cap,
and finds the plan maximizing average level of service by exact
distribution rollout.  Enumeration is depth-first over years with
cumulative-cost pruning and per-year action costs computed once; exact
at the mandated scale and dependency-free.

The objective is reported both as average LoS (0-1, higher is better)
and as the equivalent average condition (1-K, lower is better;
condition = K - (K-1) * LoS), since maintenance studies conventionally
quote the latter.

``count_feasible_plans`` truncates per-asset annual costs to whole
currency units by default.  Integer constraint solvers, the usual source
of reference plan counts, work on integer coefficients, and matching
their arithmetic is the only way to reproduce their counts exactly;
pass ``truncate_costs=False`` to count with the unrounded costs.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .knapsack import ScaleError, feasible_subset_masks
from .network import (CURRENCY_TOL, BudgetSpec, NetworkSpec, PlanMatrix,
                      ValidationError, make_plan)
from .simulator import Environment, los

#: Enumeration refuses instances whose per-year action lists multiply
#: beyond this many plans.
MAX_PLAN_PRODUCT = 10 ** 8


def _year_actions(network: NetworkSpec, budget: BudgetSpec,
                  truncate_costs: bool = False):
    """Per-year (masks, costs) of all subsets inside the annual window."""
    out = []
    for t in range(budget.horizon):
        costs = network.year_costs(t)
        if truncate_costs:
            costs = np.floor(costs)
        masks, sums = feasible_subset_masks(
            costs, float(budget.lower[t]), float(budget.upper[t]))
        out.append((masks, sums))
    return out


def _check_scale(actions) -> None:
    product = 1
    for masks, _ in actions:
        product *= max(1, masks.shape[0])
        if product > MAX_PLAN_PRODUCT:
            raise ScaleError(
                f"plan enumeration limited to {MAX_PLAN_PRODUCT:.0e} "
                f"combinations; per-year action counts "
                f"{[int(m.shape[0]) for m, _ in actions]} exceed it")


def count_feasible_plans(network: NetworkSpec, budget: BudgetSpec,
                         truncate_costs: bool = True) -> int:
    """Exact number of plans meeting every annual window and the cap."""
    actions = _year_actions(network, budget, truncate_costs=truncate_costs)
    _check_scale(actions)
    h = budget.horizon
    total = budget.total
    sorted_last = np.sort(actions[h - 1][1]) if h > 0 else None
    # cheapest completion from each year onward, for pruning
    min_suffix = [0.0] * (h + 1)
    for t in range(h - 1, -1, -1):
        sums = actions[t][1]
        min_suffix[t] = min_suffix[t + 1] + (float(sums.min()) if sums.size else 0.0)

    def recurse(year: int, spent: float) -> int:
        if year == h - 1:
            return bisect_right(sorted_last, total - spent)
        count = 0
        for cost in actions[year][1]:
            c = float(cost)
            if spent + c + min_suffix[year + 1] > total:
                continue
            count += recurse(year + 1, spent + c)
        return count

    if any(masks.shape[0] == 0 for masks, _ in actions):
        return 0
    return recurse(0, 0.0)


@dataclass(frozen=True)
class ExactSolution:
    plan: PlanMatrix
    average_los: float
    average_condition: float


def solve_optimal_plan(network: NetworkSpec, budget: BudgetSpec,
                       prune: bool = True) -> ExactSolution:
    """Best feasible plan by exhaustive rollout; ties go to the plan found
    first in year-major, ascending-bitmask order."""
    env = Environment(network, budget)
    actions = _year_actions(network, budget)
    _check_scale(actions)
    if any(masks.shape[0] == 0 for masks, _ in actions):
        raise ValidationError("no feasible annual action in at least one year")
    h = budget.horizon
    n = network.n
    total = budget.total
    min_suffix = [0.0] * (h + 1)
    for t in range(h - 1, -1, -1):
        min_suffix[t] = min_suffix[t + 1] + float(actions[t][1].min())

    def decode(mask: int) -> np.ndarray:
        bits = np.zeros(n, dtype=bool)
        i = 0
        while mask:
            if mask & 1:
                bits[i] = True
            mask >>= 1
            i += 1
        return bits

    decoded = [[decode(int(m)) for m in masks] for masks, _ in actions]

    best_obj = -np.inf
    best_rows: list[np.ndarray] | None = None
    act_mats = network.act_mats
    det_mats = network.det_mats

    def recurse(year: int, dists: np.ndarray, spent: float,
                los_sum: float, rows: list[np.ndarray]):
        nonlocal best_obj, best_rows
        if year == h:
            if spent <= total:
                obj = los_sum / h
                if obj > best_obj:
                    best_obj = obj
                    best_rows = [r.copy() for r in rows]
            return
        masks, sums = actions[year]
        for k in range(masks.shape[0]):
            cost = float(sums[k])
            if prune and spent + cost + min_suffix[year + 1] > total:
                continue
            bits = decoded[year][k]
            mats = np.where(bits[:, None, None], act_mats, det_mats)
            nxt = np.einsum("nk,nkj->nj", dists, mats)
            rows.append(bits)
            recurse(year + 1, nxt, spent + cost,
                    los_sum + los(network, nxt), rows)
            rows.pop()

    recurse(0, env.reset().dists, 0.0, 0.0, [])
    if best_rows is None:
        raise ValidationError("no plan satisfies the lifecycle cap")
    x = np.stack([r.astype(np.int8) for r in best_rows])
    plan = make_plan(network, x)
    return ExactSolution(
        plan=plan,
        average_los=best_obj,
        average_condition=network.K - (network.K - 1) * best_obj,
    )


@dataclass(frozen=True)
class PlanEvaluation:
    average_los: float
    average_condition: float
    annual_costs: np.ndarray
    total_cost: float
    rewards: np.ndarray
    violations: tuple[str, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations


def evaluate_plan(network: NetworkSpec, budget: BudgetSpec,
                  plan: PlanMatrix | np.ndarray) -> PlanEvaluation:
    """Exact rollout of a plan plus a constraint-by-constraint report."""
    if not isinstance(plan, PlanMatrix):
        plan = make_plan(network, np.asarray(plan))
    env = Environment(network, budget)
    h = budget.horizon
    if plan.x.shape != (h, network.n):
        raise ValidationError(
            f"plan shape {plan.x.shape} does not match (h={h}, n={network.n})")
    state = env.reset()
    rewards = np.zeros(h)
    for t in range(h):
        result = env.step(state, np.flatnonzero(plan.x[t]))
        rewards[t] = result.reward
        state = result.next
    violations = []
    for t in range(h):
        c = plan.annual_cost[t]
        if c < budget.lower[t] - CURRENCY_TOL:
            violations.append(
                f"year {t + 1}: annual cost {c:.2f} below lower bound {budget.lower[t]:.2f}")
        if c > budget.upper[t] + CURRENCY_TOL:
            violations.append(
                f"year {t + 1}: annual cost {c:.2f} above upper bound {budget.upper[t]:.2f}")
    if plan.total_cost > budget.total + CURRENCY_TOL:
        violations.append(
            f"total cost {plan.total_cost:.2f} exceeds lifecycle cap {budget.total:.2f}")
    avg_los = float(rewards.mean())
    return PlanEvaluation(
        average_los=avg_los,
        average_condition=network.K - (network.K - 1) * avg_los,
        annual_costs=plan.annual_cost,
        total_cost=plan.total_cost,
        rewards=rewards,
        violations=tuple(violations),
    )
