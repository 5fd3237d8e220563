"""Deterministic environment advancing asset conditions year by year.

Each asset carries a probability distribution over condition states.  A
year's step propagates every treated asset's distribution through its
maintenance matrix and every untreated one through its deterioration
matrix (row vector times matrix), then scores the network:

    reward_t = LoS after the step = weighted mean expected kappa score.

Expectations are computed in closed form, so rollouts are noise-free and
a plan's episode return divided by the horizon equals its exact
average-LoS objective.  States are values; ``step`` never mutates its
input, which makes parallel episodes trivially safe.

The RL observation is the flat vector
``[dist_1 .. dist_n, LoS, t/h, remaining-budget ratio]`` of length nK + 3.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .fileio import atomic_write_text
from .network import (CURRENCY_TOL, BudgetSpec, NetworkSpec, ValidationError,
                      _as_indices, kappa_vector)


@dataclass(frozen=True)
class EnvState:
    """Environment snapshot: per-asset distributions plus bookkeeping."""

    dists: np.ndarray   # (n, K), rows are condition distributions
    year: int           # 0..h; h means the episode is over
    spent: float        # cumulative expenditure through ``year``
    los: float          # level of service of ``dists``


@dataclass(frozen=True)
class StepResult:
    reward: float       # LoS after the transition
    next: EnvState
    annual_cost: float
    violated: bool      # step broke an annual bound or the lifecycle cap


class EpisodeReturn(NamedTuple):
    total: float
    average: float


def los(network: NetworkSpec, dists: np.ndarray) -> float:
    """Weight-normalized expected score of the whole network, in [0, 1]."""
    scores = np.asarray(dists, dtype=float) @ kappa_vector(network.K)
    w = network.weights
    return float((w / w.sum()) @ scores)


def episode_return(rewards: Sequence[float]) -> EpisodeReturn:
    """Undiscounted sum of per-year rewards, plus the per-year average."""
    rewards = np.asarray(rewards, dtype=float)
    total = float(rewards.sum())
    return EpisodeReturn(total=total, average=total / rewards.shape[0])


class Environment:
    """Binds a network and budget; all methods are pure in the state."""

    def __init__(self, network: NetworkSpec, budget: BudgetSpec):
        if budget.horizon != network.horizon:
            raise ValidationError(
                f"budget horizon {budget.horizon} does not match "
                f"network cost schedule length {network.horizon}")
        self.network = network
        self.budget = budget

    @property
    def horizon(self) -> int:
        return self.budget.horizon

    @property
    def obs_dim(self) -> int:
        return self.network.n * self.network.K + 3

    def reset(self) -> EnvState:
        dists = self.network.initial_dists.copy()
        dists.flags.writeable = False
        return EnvState(dists=dists, year=0, spent=0.0,
                        los=los(self.network, dists))

    def step(self, state: EnvState, selected) -> StepResult:
        """Advance one year treating ``selected`` assets (ids or indices)."""
        net = self.network
        if state.year >= self.horizon:
            raise ValidationError(f"cannot step: episode ended at year {self.horizon}")
        idx = _as_indices(net, selected)
        mask = np.zeros(net.n, dtype=bool)
        mask[idx] = True
        mats = np.where(mask[:, None, None], net.act_mats, net.det_mats)
        dists = np.einsum("nk,nkj->nj", state.dists, mats)
        dists.flags.writeable = False

        cost = float(net.year_costs(state.year)[idx].sum()) if idx.size else 0.0
        spent = state.spent + cost
        t = state.year
        violated = (cost < self.budget.lower[t] - CURRENCY_TOL
                    or cost > self.budget.upper[t] + CURRENCY_TOL
                    or spent > self.budget.total + CURRENCY_TOL)

        new_los = los(net, dists)
        nxt = EnvState(dists=dists, year=t + 1, spent=spent, los=new_los)
        return StepResult(reward=new_los, next=nxt, annual_cost=cost,
                          violated=bool(violated))

    def observe(self, state: EnvState) -> np.ndarray:
        """Flat observation [all distributions, LoS, t/h, b_r]."""
        b_r = (self.budget.total - state.spent) / self.budget.total
        tail = np.array([state.los, state.year / self.horizon, b_r])
        return np.concatenate([state.dists.ravel(), tail])


# ---------------------------------------------------------------------------
# rollout traces


@dataclass(frozen=True)
class TraceRow:
    episode: int
    year: int
    annual_cost: float
    reward: float
    los: float
    b_r: float
    selected_ids: tuple[str, ...]


def trace_rollout(env: Environment, selections: Sequence[Sequence[int]],
                  episode: int = 0) -> list[TraceRow]:
    """Roll a full plan (per-year index subsets) and record a trace."""
    state = env.reset()
    rows = []
    for t, selected in enumerate(selections):
        result = env.step(state, selected)
        state = result.next
        b_r = (env.budget.total - state.spent) / env.budget.total
        ids = tuple(env.network.ids[i] for i in sorted(int(j) for j in selected))
        rows.append(TraceRow(episode=episode, year=t, annual_cost=result.annual_cost,
                             reward=result.reward, los=state.los, b_r=b_r,
                             selected_ids=ids))
    return rows


def write_rollout_trace(path: str | os.PathLike, rows: Sequence[TraceRow]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["episode", "year", "annual_cost", "reward", "los", "b_r",
                     "selected_ids"])
    for row in rows:
        writer.writerow([row.episode, row.year, repr(row.annual_cost),
                         repr(row.reward), repr(row.los), repr(row.b_r),
                         ";".join(row.selected_ids)])
    atomic_write_text(path, buf.getvalue())
