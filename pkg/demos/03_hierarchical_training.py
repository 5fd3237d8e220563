"""Train the hierarchical planner on the 6-asset benchmark.

The budget actor emits a scalar fraction (mapped into the year's spending
window with a remaining-funds cap), the maintenance actor emits per-asset
priorities, and the exact knapsack projection turns them into a feasible
treatment subset.  Every executed plan is budget-compliant by construction,
so the best feasible plan can be tracked from episode one.

About a minute of CPU time.
Run from the repository root:  python demos/03_hierarchical_training.py
"""

import numpy as np

from maintplan import (HyperParams, evaluate_plan, load_budget, load_network,
                       solve_optimal_plan, train)

network = load_network("data/bench6_network.json")
budget = load_budget("data/bench6_budget.json")

oracle = solve_optimal_plan(network, budget)
print(f"oracle optimum: average LoS {oracle.average_los:.6f}\n")

hyper = HyperParams(seed=0, episodes=1500, hidden=(32, 32), capacity=20000)
result = train(network, budget, hyper,
               metrics_path="demos_hdrl_metrics.csv")

h = budget.horizon
print("episode    return    alpha     best-so-far")
for rec in result.history[::150]:
    best = f"{rec.best_return:.4f}" if rec.best_return is not None else "-"
    print(f"{rec.episode:>7} {rec.ret:>9.4f} {rec.alpha:>8.4f} {best:>12}")

best = result.best_plan
ev = evaluate_plan(network, budget, best)
gap = (oracle.average_los - ev.average_los) / oracle.average_los
print(f"\nbest feasible plan: average LoS {ev.average_los:.6f} "
      f"({gap * 100:.2f}% from optimal), total cost {ev.total_cost:,.0f}")
print("plan (rows = years):")
print(np.array2string(best.x))
print("\nper-episode metrics written to demos_hdrl_metrics.csv")
