import numpy as np
import pytest

from maintplan import (KnapsackInstance, ScaleError, enumerate_feasible_subsets,
                       gain, gains, solve)
from maintplan.network import ValidationError

from helpers import brute_force_knapsack, random_network

K = 5


def _mask_of(indices):
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# -- gain -------------------------------------------------------------------


def test_gain_zero_when_dynamics_identical():
    rng = np.random.default_rng(1)
    net = random_network(rng, n=1, h=1)
    asset = net.assets[0]
    same = type(asset)(id="x", weight=asset.weight, unit_cost=asset.unit_cost,
                       deterioration=asset.deterioration,
                       maintenance=asset.deterioration, initial=asset.initial)
    dist = np.array([0.2, 0.3, 0.1, 0.3, 0.1])
    assert gain(same, dist) == pytest.approx(0.0, abs=1e-15)


def test_gain_zero_at_prime_with_identity_deterioration():
    rng = np.random.default_rng(2)
    net = random_network(rng, n=1, h=1, reset_maintenance=True)
    asset = net.assets[0]
    prime = type(asset)(id="x", weight=asset.weight, unit_cost=asset.unit_cost,
                        deterioration=np.eye(K), maintenance=asset.maintenance,
                        initial=asset.initial)
    dist = np.array([1.0, 0, 0, 0, 0])
    assert gain(prime, dist) == pytest.approx(0.0, abs=1e-15)


def test_gain_hand_value():
    rng = np.random.default_rng(3)
    net = random_network(rng, n=1, h=1, reset_maintenance=True)
    asset = net.assets[0]
    one = type(asset)(id="x", weight=1.0, unit_cost=asset.unit_cost,
                      deterioration=np.eye(K), maintenance=asset.maintenance,
                      initial=asset.initial)
    dist = np.array([0.0, 1.0, 0, 0, 0])
    # kappa(1) - kappa(2) = 1 - 0.75
    assert gain(one, dist) == pytest.approx(0.25)


def test_gains_matches_scalar_gain():
    rng = np.random.default_rng(4)
    net = random_network(rng, n=6, h=2)
    dists = rng.uniform(0, 1, (6, K))
    dists /= dists.sum(axis=1, keepdims=True)
    vec = gains(net, dists)
    for i, asset in enumerate(net.assets):
        assert vec[i] == pytest.approx(gain(asset, dists[i]), rel=1e-12)


# -- solve ------------------------------------------------------------------


def test_solve_selects_everything_when_unconstrained():
    inst = KnapsackInstance(values=np.array([3.0, 1.0, 2.0]),
                            costs=np.array([5.0, 4.0, 3.0]),
                            lower=0.0, upper=100.0)
    sol = solve(inst)
    assert sol.selected == (0, 1, 2)
    assert sol.objective == pytest.approx(6.0)
    assert not sol.relaxed_lower and sol.exact


def test_solve_binding_capacity():
    inst = KnapsackInstance(values=np.array([5.0, 4.0]),
                            costs=np.array([10.0, 10.0]),
                            lower=0.0, upper=10.0)
    sol = solve(inst)
    assert sol.selected == (0,)
    assert sol.objective == pytest.approx(5.0)


def test_solve_tie_breaks_to_smallest_bitmask():
    inst = KnapsackInstance(values=np.array([1.0, 1.0]),
                            costs=np.array([5.0, 5.0]),
                            lower=0.0, upper=5.0)
    assert solve(inst).selected == (0,)


def test_solve_twelve_items_matches_enumeration():
    rng = np.random.default_rng(12)
    values = rng.uniform(-3, 8, 12)
    costs = rng.uniform(1, 9, 12)
    lower, upper = 10.0, 26.0
    sol = solve(KnapsackInstance(values=values, costs=costs,
                                 lower=lower, upper=upper))
    best = brute_force_knapsack(values, costs, lower, upper)
    assert sol.objective == pytest.approx(best[0], abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_solve_matches_enumeration_many_instances(seed):
    # 1000+ seeded instances across the parametrized seeds, n <= 15,
    # negative values and often-binding lower bounds included
    rng = np.random.default_rng(1000 + seed)
    for _ in range(250):
        n = int(rng.integers(1, 16))
        values = rng.uniform(-5, 10, n)
        costs = rng.uniform(0.5, 10, n)
        total = costs.sum()
        lower = float(rng.uniform(0, 0.8) * total)
        upper = float(lower + rng.uniform(0.05, 0.5) * total)
        sol = solve(KnapsackInstance(values=values, costs=costs,
                                     lower=lower, upper=upper))
        best = brute_force_knapsack(values, costs, lower, upper)
        if best is None:
            assert sol.relaxed_lower
            assert sol.cost <= upper + 1e-9
        else:
            assert not sol.relaxed_lower
            assert sol.objective == pytest.approx(best[0], abs=1e-9)


def test_scale_invariance_of_selection():
    rng = np.random.default_rng(77)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        values = rng.uniform(-5, 10, n)
        costs = rng.uniform(0.5, 10, n)
        lower = float(rng.uniform(0, 0.4) * costs.sum())
        upper = float(lower + rng.uniform(0.2, 0.6) * costs.sum())
        lam = float(rng.uniform(0.1, 50))
        base = solve(KnapsackInstance(values=values, costs=costs,
                                      lower=lower, upper=upper))
        scaled = solve(KnapsackInstance(values=lam * values, costs=costs,
                                        lower=lower, upper=upper))
        assert base.selected == scaled.selected


def test_negative_values_only_when_forced():
    rng = np.random.default_rng(88)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        values = rng.uniform(-5, 10, n)
        costs = rng.uniform(0.5, 10, n)
        upper = float(rng.uniform(0.3, 1.0) * costs.sum())
        sol = solve(KnapsackInstance(values=values, costs=costs,
                                     lower=0.0, upper=upper))
        assert all(values[i] >= 0 for i in sol.selected)


def test_cost_within_upper_and_relaxed_only_when_empty():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(1, 10))
        values = rng.uniform(-5, 10, n)
        costs = rng.uniform(0.5, 10, n)
        total = costs.sum()
        lower = float(rng.uniform(0, 1.3) * total)   # sometimes unreachable
        upper = float(lower + rng.uniform(0.0, 0.3) * total)
        sol = solve(KnapsackInstance(values=values, costs=costs,
                                     lower=lower, upper=upper))
        assert sol.cost <= upper + 1e-9
        empty = len(enumerate_feasible_subsets(costs, lower, upper)) == 0
        assert sol.relaxed_lower == empty


def test_solve_scale_contract():
    n = 65
    with pytest.raises(ScaleError):
        solve(KnapsackInstance(values=np.ones(n), costs=np.ones(n),
                               lower=0.0, upper=10.0))


def test_instance_validation():
    with pytest.raises(ValidationError):
        KnapsackInstance(values=np.array([1.0]), costs=np.array([0.0]),
                         lower=0.0, upper=1.0)
    with pytest.raises(ValidationError):
        KnapsackInstance(values=np.array([np.inf]), costs=np.array([1.0]),
                         lower=0.0, upper=1.0)
    with pytest.raises(ValidationError):
        KnapsackInstance(values=np.array([1.0]), costs=np.array([1.0]),
                         lower=2.0, upper=1.0)


# -- enumerate --------------------------------------------------------------


def test_enumerate_table1_is_twenty(table1_network, budget_5yr):
    subsets = enumerate_feasible_subsets(table1_network.year_costs(0),
                                         float(budget_5yr.lower[0]),
                                         float(budget_5yr.upper[0]))
    assert len(subsets) == 20
    # ascending bitmask order
    masks = [_mask_of(s) for s in subsets]
    assert masks == sorted(masks)
    # every member satisfies the window (independent recomputation)
    costs = table1_network.year_costs(0)
    for s in subsets:
        c = float(costs[list(s)].sum())
        assert 95000.0 <= c <= 105000.0


def test_enumerate_extension_counts(data_dir, budget_5yr):
    from maintplan import load_network
    import os
    for n, want in ((15, 364), (20, 7448)):
        net = load_network(os.path.join(data_dir, f"network_{n}.json"))
        subsets = enumerate_feasible_subsets(net.year_costs(0), 95000.0, 105000.0)
        assert len(subsets) == want


def test_enumerate_matches_naive_loop():
    rng = np.random.default_rng(5)
    costs = rng.uniform(1, 10, 10)
    lower, upper = 8.0, 20.0
    fast = enumerate_feasible_subsets(costs, lower, upper)
    slow = []
    for mask in range(1 << 10):
        c = sum(costs[i] for i in range(10) if mask >> i & 1)
        if lower <= c <= upper:
            slow.append(tuple(i for i in range(10) if mask >> i & 1))
    assert fast == slow


def test_enumerate_empty_when_lower_unreachable():
    assert enumerate_feasible_subsets(np.array([1.0, 2.0]), 10.0, 20.0) == []


def test_enumerate_scale_contract():
    with pytest.raises(ScaleError):
        enumerate_feasible_subsets(np.ones(26), 0.0, 1.0)
