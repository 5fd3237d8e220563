import os

import numpy as np
import pytest

from maintplan import load_budget, load_network

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def table1_network():
    return load_network(os.path.join(DATA_DIR, "network_10.json"))


@pytest.fixture(scope="session")
def budget_5yr():
    return load_budget(os.path.join(DATA_DIR, "budget_5yr.json"))


@pytest.fixture(scope="session")
def bench_network():
    return load_network(os.path.join(DATA_DIR, "bench6_network.json"))


@pytest.fixture(scope="session")
def bench_budget():
    return load_budget(os.path.join(DATA_DIR, "bench6_budget.json"))


@pytest.fixture(autouse=True)
def _no_global_seed_leak():
    # library code must never touch the legacy global RNG
    state = np.random.get_state()
    yield
    after = np.random.get_state()
    assert state[0] == after[0] and np.array_equal(state[1], after[1]), \
        "legacy global numpy RNG was consumed"
