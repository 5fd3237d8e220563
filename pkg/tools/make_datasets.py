"""Regenerate the JSON datasets shipped under data/.

The 10-asset network carries the published sewershed lengths and initial
average conditions; the 15- and 20-asset networks append further drainage
areas whose lengths were chosen so the annual budget window of
[$95,000, $105,000] at $3 per unit length admits exactly 364 and 7,448
subsets.  Deterioration matrices are synthetic (seeded recipe below);
flushing resets an asset to the prime state, so every maintenance matrix
has ones in its first column.

Run from the repository root:  python tools/make_datasets.py
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from maintplan.knapsack import enumerate_feasible_subsets  # noqa: E402
from maintplan.network import load_budget, load_network  # noqa: E402
from maintplan.oracle import count_feasible_plans  # noqa: E402
from maintplan.fileio import atomic_write_text  # noqa: E402

import json  # noqa: E402

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

# Published lengths for sheds 1-10; appended sheds tuned for the
# feasible-subset counts 364 (n=15) and 7,448 (n=20).
LENGTHS = [
    34643.29, 30783.54, 12934.21, 11667.71, 11423.13,
    11393.38, 8479.24, 7359.18, 6411.50, 5939.84,
    9002.19, 7457.53, 4522.20, 3688.59, 3107.64,
    2751.60, 2207.87, 1955.46, 1902.27, 1807.50,
]

# Initial length-weighted average condition per shed (1 = pristine).
INITIAL_AVG = [
    2.367, 1.346, 1.434, 1.312, 1.307,
    1.493, 1.344, 1.000, 1.327, 1.388,
    1.520, 1.260, 1.410, 1.180, 1.350,
    1.440, 1.290, 1.230, 1.310, 1.380,
]

K = 5
HORIZON = 5
UNIT_COST = 3.0
MATRIX_SEED = 20240817


def initial_distribution(avg: float) -> list:
    """Spread an average condition across its two neighbouring states."""
    base = int(avg)
    frac = round(avg - base, 6)
    probs = [0.0] * K
    if frac == 0.0:
        probs[base - 1] = 1.0
    else:
        probs[base - 1] = round(1.0 - frac, 6)
        probs[base] = frac
    return probs


def deterioration_matrix(rng: np.random.Generator) -> list:
    """Row-stochastic upper-triangular decay: stay, slip one, rarely two."""
    rows = []
    for state in range(1, K + 1):
        row = [0.0] * K
        if state == K:
            row[K - 1] = 1.0
        else:
            stay = round(float(rng.uniform(0.72, 0.90)), 3)
            slip = round((1.0 - stay) * float(rng.uniform(0.70, 0.95)), 3)
            rest = round(1.0 - stay - slip, 3)
            row[state - 1] = stay
            row[state] = slip
            if state + 1 < K:
                row[state + 1] = rest
            else:
                row[state] = round(slip + rest, 3)
        rows.append(row)
    return rows


RESET_TO_PRIME = [[1.0, 0.0, 0.0, 0.0, 0.0] for _ in range(K)]


def build_network(n: int, rng: np.random.Generator) -> dict:
    assets = []
    for i in range(n):
        assets.append({
            "id": f"shed-{i + 1:02d}",
            "weight": LENGTHS[i],
            "unit_cost": [UNIT_COST] * HORIZON,
            "deterioration": deterioration_matrix(rng),
            "maintenance": RESET_TO_PRIME,
            "initial": initial_distribution(INITIAL_AVG[i]),
        })
    return {"K": K, "horizon": HORIZON, "assets": assets}


BUDGET = {"horizon": HORIZON,
          "lower": [95000.0] * HORIZON,
          "upper": [105000.0] * HORIZON,
          "total": 500000.0}


# Small benchmark (6 assets, 4 years): tight upper bound and lifecycle cap,
# zero lower bounds so every mapped budget admits a feasible subset.
BENCH_LENGTHS = [120.0, 95.0, 80.0, 60.0, 45.0, 30.0]
BENCH_AVG = [2.6, 2.2, 1.9, 2.9, 1.5, 3.2]
BENCH_BUDGET = {"horizon": 4,
                "lower": [0.0] * 4,
                "upper": [150.0] * 4,
                "total": 480.0}


def bench_deterioration(rng: np.random.Generator) -> list:
    rows = []
    for state in range(1, K + 1):
        row = [0.0] * K
        if state == K:
            row[K - 1] = 1.0
        else:
            stay = round(float(rng.uniform(0.45, 0.70)), 3)
            slip = round((1.0 - stay) * float(rng.uniform(0.60, 0.90)), 3)
            rest = round(1.0 - stay - slip, 3)
            row[state - 1] = stay
            row[state] = slip
            if state + 1 < K:
                row[state + 1] = rest
            else:
                row[state] = round(slip + rest, 3)
        rows.append(row)
    return rows


def build_benchmark(rng: np.random.Generator) -> dict:
    assets = []
    for i, (length, avg) in enumerate(zip(BENCH_LENGTHS, BENCH_AVG)):
        assets.append({
            "id": f"asset-{i + 1}",
            "weight": length,
            "unit_cost": [1.0] * 4,
            "deterioration": bench_deterioration(rng),
            "maintenance": RESET_TO_PRIME,
            "initial": initial_distribution(avg),
        })
    return {"K": K, "horizon": 4, "assets": assets}


def main() -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    rng = np.random.default_rng(MATRIX_SEED)
    # one stream for all 20 sheds keeps the 10/15/20 files nested
    networks = build_network(20, rng)
    for n in (10, 15, 20):
        doc = {"K": K, "horizon": HORIZON, "assets": networks["assets"][:n]}
        path = os.path.join(OUT_DIR, f"network_{n}.json")
        atomic_write_text(path, json.dumps(doc, indent=1))
        print("wrote", path)
    budget_path = os.path.join(OUT_DIR, "budget_5yr.json")
    atomic_write_text(budget_path, json.dumps(BUDGET, indent=1))
    print("wrote", budget_path)

    bench_rng = np.random.default_rng(MATRIX_SEED + 1)
    bench_path = os.path.join(OUT_DIR, "bench6_network.json")
    atomic_write_text(bench_path, json.dumps(build_benchmark(bench_rng), indent=1))
    print("wrote", bench_path)
    bench_budget_path = os.path.join(OUT_DIR, "bench6_budget.json")
    atomic_write_text(bench_budget_path, json.dumps(BENCH_BUDGET, indent=1))
    print("wrote", bench_budget_path)

    # verify the headline counts
    budget = load_budget(budget_path)
    for n, want in ((10, 20), (15, 364), (20, 7448)):
        network = load_network(os.path.join(OUT_DIR, f"network_{n}.json"))
        got = len(enumerate_feasible_subsets(network.year_costs(0),
                                             float(budget.lower[0]),
                                             float(budget.upper[0])))
        print(f"n={n}: {got} feasible subsets (expected {want})")
        assert got == want
    network10 = load_network(os.path.join(OUT_DIR, "network_10.json"))
    plans = count_feasible_plans(network10, budget)
    print(f"n=10: {plans} feasible plans (expected 2249947)")
    assert plans == 2249947


if __name__ == "__main__":
    main()
