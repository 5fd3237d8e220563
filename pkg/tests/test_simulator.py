import csv

import numpy as np
import pytest

from maintplan import (AssetSpec, BudgetSpec, Environment, NetworkSpec,
                       ValidationError, episode_return, los)
from maintplan.network import validate_distribution, validate_transition_matrix
from maintplan.simulator import trace_rollout, write_rollout_trace

from helpers import RESET_TO_PRIME, random_network

K = 5
IDENTITY = np.eye(K)


def _asset(aid, weight, det, act, initial, h=3, unit=1.0):
    return AssetSpec(
        id=aid, weight=weight, unit_cost=np.full(h, unit),
        deterioration=validate_transition_matrix(np.asarray(det, float), K),
        maintenance=validate_transition_matrix(np.asarray(act, float), K),
        initial=validate_distribution(np.asarray(initial, float), K),
    )


def _point_mass(state):
    p = np.zeros(K)
    p[state - 1] = 1.0
    return p


def _flat_budget(h, lower, upper, total):
    return BudgetSpec(horizon=h, lower=np.full(h, float(lower)),
                      upper=np.full(h, float(upper)), total=float(total))


@pytest.fixture
def two_asset_env():
    a = _asset("a", 3.0, IDENTITY, RESET_TO_PRIME, _point_mass(1))
    b = _asset("b", 1.0, IDENTITY, RESET_TO_PRIME, _point_mass(5))
    network = NetworkSpec(assets=(a, b), K=K)
    return Environment(network, _flat_budget(3, 0, 100, 300))


def test_reset_initial_state(table1_network, budget_5yr):
    env = Environment(table1_network, budget_5yr)
    state = env.reset()
    assert state.year == 0
    assert state.spent == 0.0
    assert np.array_equal(state.dists, table1_network.initial_dists)
    assert state.los == los(table1_network, state.dists)


def test_los_point_mass_prime():
    a = _asset("a", 2.0, IDENTITY, RESET_TO_PRIME, _point_mass(1))
    net = NetworkSpec(assets=(a,), K=K)
    env = Environment(net, _flat_budget(3, 0, 10, 30))
    assert env.reset().los == 1.0


def test_los_weighted_mean(two_asset_env):
    # weights 3 and 1 with scores 1.0 and 0.0
    assert two_asset_env.reset().los == pytest.approx(0.75)


def test_los_equal_weights_half():
    a = _asset("a", 1.0, IDENTITY, RESET_TO_PRIME, _point_mass(1))
    b = _asset("b", 1.0, IDENTITY, RESET_TO_PRIME, _point_mass(5))
    net = NetworkSpec(assets=(a, b), K=K)
    assert los(net, net.initial_dists) == pytest.approx(0.5)


def test_los_uniform_distributions(table1_network):
    uniform = np.full((table1_network.n, K), 1.0 / K)
    assert los(table1_network, uniform) == pytest.approx(0.5)


def test_step_identity_no_action(two_asset_env):
    env = two_asset_env
    state = env.reset()
    result = env.step(state, [])
    assert np.array_equal(result.next.dists, state.dists)
    assert result.reward == pytest.approx(state.los)
    assert result.annual_cost == 0.0
    assert result.next.year == 1


def test_step_reset_to_prime_all(two_asset_env):
    env = two_asset_env
    result = env.step(env.reset(), ["a", "b"])
    assert np.allclose(result.next.dists, [_point_mass(1), _point_mass(1)])
    assert result.reward == pytest.approx(1.0)


def test_step_one_step_propagation():
    det = np.array([[0.6, 0.4, 0, 0, 0],
                    [0, 1, 0, 0, 0],
                    [0, 0, 1, 0, 0],
                    [0, 0, 0, 1, 0],
                    [0, 0, 0, 0, 1]], dtype=float)
    a = _asset("a", 1.0, det, RESET_TO_PRIME, _point_mass(1))
    net = NetworkSpec(assets=(a,), K=K)
    env = Environment(net, _flat_budget(3, 0, 10, 30))
    result = env.step(env.reset(), [])
    assert np.allclose(result.next.dists[0], [0.6, 0.4, 0, 0, 0])
    # E[kappa] = 0.6 * 1.0 + 0.4 * 0.75
    assert result.reward == pytest.approx(0.9)


def test_step_after_horizon_raises(two_asset_env):
    env = two_asset_env
    state = env.reset()
    for _ in range(3):
        state = env.step(state, []).next
    with pytest.raises(ValidationError, match="episode ended"):
        env.step(state, [])


def test_step_cost_and_violation_flags():
    a = _asset("a", 10.0, IDENTITY, RESET_TO_PRIME, _point_mass(3), unit=1.0)
    net = NetworkSpec(assets=(a,), K=K)
    budget = _flat_budget(3, 5, 15, 21)
    env = Environment(net, budget)
    state = env.reset()
    # cost 10 in [5, 15]: fine
    r1 = env.step(state, ["a"])
    assert not r1.violated and r1.annual_cost == 10.0
    # cost 0 < lower 5: violated
    assert env.step(state, []).violated
    # upper violation
    tight = Environment(net, _flat_budget(3, 0, 9, 100))
    assert tight.step(tight.reset(), ["a"]).violated
    # lifecycle violation on the third treatment (30 > 21)
    s = r1.next
    r2 = env.step(s, ["a"])
    assert not r2.violated
    r3 = env.step(r2.next, ["a"])
    assert r3.violated


def test_observation_layout(table1_network, budget_5yr):
    env = Environment(table1_network, budget_5yr)
    state = env.reset()
    obs = env.observe(state)
    n, Kn = table1_network.n, table1_network.K
    assert obs.shape == (n * Kn + 3,)
    assert np.array_equal(obs[:n * Kn], state.dists.ravel())
    assert obs[-3] == state.los
    assert obs[-2] == 0.0          # t/h
    assert obs[-1] == 1.0          # remaining-budget ratio
    assert np.all(obs >= 0) and np.all(obs <= 1)
    # K-blockwise stochastic prefix
    blocks = obs[:n * Kn].reshape(n, Kn)
    assert np.allclose(blocks.sum(axis=1), 1.0, atol=1e-9)


def test_observation_after_spending(table1_network, budget_5yr):
    from maintplan.simulator import EnvState
    env = Environment(table1_network, budget_5yr)
    state = env.reset()
    moved = EnvState(dists=state.dists, year=4, spent=100000.0, los=state.los)
    obs = env.observe(moved)
    assert obs[-1] == pytest.approx(0.8)   # (500000 - 100000) / 500000
    assert obs[-2] == pytest.approx(0.8)   # year 4 of 5


def test_episode_return_examples():
    total, avg = episode_return([1.0] * 5)
    assert total == 5.0 and avg == 1.0
    total, avg = episode_return([0.9, 0.8, 0.7, 0.6, 0.5])
    assert total == pytest.approx(3.5) and avg == pytest.approx(0.7)
    perm = episode_return([0.5, 0.9, 0.6, 0.8, 0.7])
    assert perm.total == pytest.approx(3.5)


def test_simplex_preserved_under_rollouts():
    rng = np.random.default_rng(21)
    for _ in range(10):
        net = random_network(rng, n=4, h=5)
        budget = _flat_budget(5, 0, 1e9, 1e12)
        env = Environment(net, budget)
        state = env.reset()
        for _ in range(5):
            selected = np.flatnonzero(rng.uniform(size=4) < 0.5)
            result = env.step(state, selected)
            state = result.next
            assert np.all(state.dists >= -1e-15)
            assert np.allclose(state.dists.sum(axis=1), 1.0, atol=1e-9)
            # reward equals recomputed los of the new state
            assert result.reward == pytest.approx(los(net, state.dists), abs=1e-12)


def test_return_equals_sum_of_los():
    rng = np.random.default_rng(22)
    net = random_network(rng, n=3, h=4)
    env = Environment(net, _flat_budget(4, 0, 1e9, 1e12))
    state = env.reset()
    rewards, los_values = [], []
    for _ in range(4):
        result = env.step(state, np.flatnonzero(rng.uniform(size=3) < 0.5))
        rewards.append(result.reward)
        state = result.next
        los_values.append(state.los)
    assert episode_return(rewards).total == pytest.approx(sum(los_values), abs=1e-9)


def test_monotone_dominance_with_reset_maintenance():
    rng = np.random.default_rng(23)
    for _ in range(20):
        net = random_network(rng, n=5, h=2, reset_maintenance=True)
        env = Environment(net, _flat_budget(2, 0, 1e9, 1e12))
        state = env.reset()
        base = set(np.flatnonzero(rng.uniform(size=5) < 0.4).tolist())
        extra = base | {int(rng.integers(0, 5))}
        r_base = env.step(state, base).reward
        r_extra = env.step(state, extra).reward
        assert r_extra >= r_base - 1e-12


def test_identical_seeds_identical_rollouts():
    def roll(seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng, n=4, h=5)
        env = Environment(net, _flat_budget(5, 0, 1e9, 1e12))
        state = env.reset()
        out = []
        for _ in range(5):
            result = env.step(state, np.flatnonzero(rng.uniform(size=4) < 0.5))
            out.append((result.reward, result.annual_cost,
                        result.next.dists.copy()))
            state = result.next
        return out

    a, b = roll(99), roll(99)
    for (ra, ca, da), (rb, cb, db) in zip(a, b):
        assert ra == rb and ca == cb and np.array_equal(da, db)


def test_trace_round_trip(tmp_path, two_asset_env):
    rows = trace_rollout(two_asset_env, [(0,), (), (0, 1)])
    path = tmp_path / "trace.csv"
    write_rollout_trace(path, rows)
    with open(path, newline="") as fh:
        parsed = list(csv.DictReader(fh))
    assert len(parsed) == 3
    assert parsed[0]["selected_ids"] == "a"
    assert parsed[2]["selected_ids"] == "a;b"
    assert float(parsed[0]["reward"]) == rows[0].reward
    assert [int(r["year"]) for r in parsed] == [0, 1, 2]
