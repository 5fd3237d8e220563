"""Tour of the sewer-network dataset and the cost/performance arithmetic.

Loads the 10-sewershed network, shows how the level of service decays when
nothing is maintained, what flushing everything would cost, and evaluates
a known good five-year plan.

Run from the repository root:  python demos/01_network_and_costs.py
"""

import numpy as np

from maintplan import (Environment, action_cost, evaluate_plan, load_budget,
                       load_network, make_plan)

network = load_network("data/network_10.json")
budget = load_budget("data/budget_5yr.json")

print(f"{network.n} sewersheds, {network.K} condition states, "
      f"{network.horizon}-year horizon")
print(f"total length: {network.weights.sum():,.2f}")
print(f"annual window: [{budget.lower[0]:,.0f}, {budget.upper[0]:,.0f}], "
      f"lifecycle cap {budget.total:,.0f}\n")

# Treating one sewershed costs its length times the $3/length rate.
for sid in ("shed-01", "shed-10"):
    print(f"flushing {sid} in year 1 costs "
          f"${action_cost(network, 0, [sid]):,.2f}")
print(f"flushing everything would cost "
      f"${action_cost(network, 0, range(network.n)):,.2f} "
      f"(far beyond the annual window)\n")

# Do-nothing rollout: the network decays year over year.
env = Environment(network, budget)
state = env.reset()
print(f"year 0 level of service: {state.los:.4f}")
for t in range(network.horizon):
    state = env.step(state, []).next
    print(f"year {t + 1} level of service: {state.los:.4f}  "
          f"(avg condition {network.K - (network.K - 1) * state.los:.3f})")

# A known good plan: flush the largest shed twice and rotate the rest.
plan_by_asset = np.array([
    [1, 0, 0, 1, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 1, 0, 1],
    [0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1],
    [0, 1, 0, 0, 0],
    [0, 1, 0, 0, 1],
    [0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0],
])
plan = make_plan(network, plan_by_asset.T)
ev = evaluate_plan(network, budget, plan)
print("\nrotating flush plan:")
print("  annual costs:", ", ".join(f"${c:,.1f}" for c in ev.annual_costs))
print(f"  total cost:   ${ev.total_cost:,.1f}")
print(f"  average LoS:  {ev.average_los:.4f} "
      f"(avg condition {ev.average_condition:.4f})")
print(f"  feasible:     {ev.feasible}")
