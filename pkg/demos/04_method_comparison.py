"""Hierarchical planner vs deep Q-learning baseline vs the exact oracle.

Both methods train on the same benchmark with the same budget machinery;
the structural difference is the action interface.  The baseline's
Q-network needs one output per budget-feasible subset (combinatorial),
while the hierarchical planner's actors emit 1 + n continuous values no
matter how many subsets exist, which is what lets it scale.

A few minutes of CPU time.
Run from the repository root:  python demos/04_method_comparison.py
"""

from maintplan import (DqlHyperParams, HyperParams, build_action_table,
                       dql_train, load_budget, load_network,
                       solve_optimal_plan, train)

network = load_network("data/bench6_network.json")
budget = load_budget("data/bench6_budget.json")
h = budget.horizon

oracle = solve_optimal_plan(network, budget)
table = build_action_table(network, budget)
print(f"benchmark: {network.n} assets, {h} years, "
      f"{table.size} feasible subsets per year")
print(f"action interface - baseline Q-head width: {table.size}; "
      f"hierarchical actors: 1 + {network.n}")
print(f"oracle optimum: average LoS {oracle.average_los:.6f}\n")

print("method  seed  avg LoS   gap")
for seed in range(3):
    r = train(network, budget,
              HyperParams(seed=seed, episodes=1200, hidden=(32, 32),
                          capacity=20000))
    obj = r.best_return / h
    print(f"hdrl    {seed:>4}  {obj:.6f}  "
          f"{(oracle.average_los - obj) / oracle.average_los * 100:+.2f}%")
for seed in range(3):
    r = dql_train(network, budget,
                  DqlHyperParams(seed=seed, episodes=1200, hidden=(32, 32),
                                 capacity=20000))
    obj = r.best_return / h
    print(f"dql     {seed:>4}  {obj:.6f}  "
          f"{(oracle.average_los - obj) / oracle.average_los * 100:+.2f}%")

print("\nFor the scaling contrast, build the baseline's action table on the "
      "larger networks:")
budget5 = load_budget("data/budget_5yr.json")
for n in (10, 15, 20):
    net = load_network(f"data/network_{n}.json")
    t = build_action_table(net, budget5)
    print(f"  {n} sewersheds: Q-head width {t.size:>5,} vs actors 1 + {n}")
