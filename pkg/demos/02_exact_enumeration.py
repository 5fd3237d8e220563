"""Exact enumeration: feasible actions, feasible plans, optimal plans.

The annual budget window cuts the 2^n flush/no-flush combinations down to
a small feasible action set, and the lifecycle cap then filters multi-year
plans.  On a small synthetic instance the exhaustive oracle finds the
provably optimal schedule.

Run from the repository root:  python demos/02_exact_enumeration.py
"""

import time

from maintplan import (count_feasible_plans, enumerate_feasible_subsets,
                       evaluate_plan, load_budget, load_network,
                       solve_optimal_plan)

budget = load_budget("data/budget_5yr.json")

for n in (10, 15, 20):
    network = load_network(f"data/network_{n}.json")
    subsets = enumerate_feasible_subsets(network.year_costs(0),
                                         float(budget.lower[0]),
                                         float(budget.upper[0]))
    print(f"{n:>2} sewersheds: 2^{n} = {2 ** n:>9,} subsets, "
          f"{len(subsets):>5,} inside the annual window")

network10 = load_network("data/network_10.json")
start = time.time()
plans = count_feasible_plans(network10, budget)
print(f"\n10-shed case: {plans:,} five-year plans satisfy every annual "
      f"window and the lifecycle cap ({time.time() - start:.1f}s)")
print(f"  (with unrounded costs: "
      f"{count_feasible_plans(network10, budget, truncate_costs=False):,})")

# Exhaustive optimum for the small benchmark instance.
bench_net = load_network("data/bench6_network.json")
bench_budget = load_budget("data/bench6_budget.json")
start = time.time()
solution = solve_optimal_plan(bench_net, bench_budget)
print(f"\n6-asset benchmark optimum ({time.time() - start:.1f}s):")
print(f"  average LoS {solution.average_los:.6f}, "
      f"avg condition {solution.average_condition:.4f}, "
      f"total cost {solution.plan.total_cost:,.0f}")
print("  plan (rows = years, columns = assets):")
for t, row in enumerate(solution.plan.x):
    treated = [bench_net.ids[i] for i in range(bench_net.n) if row[i]]
    print(f"   year {t + 1}: {row.tolist()}  -> {', '.join(treated) or 'none'}")

check = evaluate_plan(bench_net, bench_budget, solution.plan)
assert check.feasible and abs(check.average_los - solution.average_los) < 1e-12
print("  re-evaluation agrees and the plan is feasible")
