"""Deep Q-learning baseline over enumerated budget-feasible subsets.

The discrete action space is the table of asset subsets whose annual cost
lies inside the year's spending window, enumerated exhaustively up front.
That table grows combinatorially with the number of assets (its size is
the Q-network's output width), which is exactly the scaling burden the
hierarchical planner avoids.

Lifecycle feasibility is enforced by masking rather than reward
penalties: an action is allowed only if, after paying for it, every
remaining year can still afford its annual minimum.  Masking applies both
to action selection and to the bootstrapped max in the TD target.

Replay is prioritized: sampling probability follows |TD error|^alpha and
updates are weighted by normalized importance weights (beta annealed
toward 1 over training).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .knapsack import enumerate_feasible_subsets
from .network import (CURRENCY_TOL, BudgetSpec, NetworkSpec, PlanMatrix,
                      ValidationError, make_plan, plan_is_feasible)
from .nets import Adam, QNetwork, load_checkpoint, polyak_update, save_checkpoint
from .hdrl import EpisodeRecord, StepMonitorRecord, write_metrics_csv
from .simulator import Environment


@dataclass(frozen=True)
class DqlHyperParams:
    lr: float = 8e-5
    gamma: float = 1.0
    tau: float = 0.005
    batch: int = 256
    capacity: int = 100_000
    episodes: int = 5000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.4     # portion of episodes spent annealing epsilon
    per_alpha: float = 0.6
    per_beta_start: float = 0.4
    per_beta_end: float = 1.0
    per_priority_floor: float = 1e-6
    seed: int = 0
    hidden: tuple[int, int] = (256, 256)
    eval_every: int = 10


@dataclass(frozen=True)
class FeasibleActionTable:
    """Discrete action catalogue: one entry per budget-feasible subset.

    ``subsets`` is the union over years, ordered by ascending selection
    bitmask; ``costs`` holds each action's cost per year and ``valid``
    whether it sits inside that year's annual window.  When every year
    shares one cost schedule the table is identical across years and
    ``shared`` is True.
    """

    subsets: tuple[tuple[int, ...], ...]
    costs: np.ndarray   # (h, A)
    valid: np.ndarray   # (h, A) bool
    shared: bool

    @property
    def size(self) -> int:
        return len(self.subsets)

    def year_counts(self) -> list[int]:
        return [int(v.sum()) for v in self.valid]


def build_action_table(network: NetworkSpec, budget: BudgetSpec) -> FeasibleActionTable:
    """Enumerate per-year feasible subsets; error if any year has none."""
    per_year: list[list[tuple[int, ...]]] = []
    for t in range(budget.horizon):
        subsets = enumerate_feasible_subsets(network.year_costs(t),
                                             float(budget.lower[t]),
                                             float(budget.upper[t]))
        if not subsets:
            raise ValidationError(f"year {t + 1}: no feasible annual action")
        per_year.append(subsets)

    shared = all(s == per_year[0] for s in per_year[1:])
    if shared:
        union = per_year[0]
    else:
        union = sorted({s for year in per_year for s in year},
                       key=lambda s: sum(1 << i for i in s))
    union = tuple(union)

    h = budget.horizon
    costs = np.zeros((h, len(union)))
    valid = np.zeros((h, len(union)), dtype=bool)
    year_sets = [set(y) for y in per_year]
    for t in range(h):
        yc = network.year_costs(t)
        for a, subset in enumerate(union):
            costs[t, a] = float(yc[list(subset)].sum()) if subset else 0.0
        valid[t] = [s in year_sets[t] for s in union]
    costs.flags.writeable = False
    valid.flags.writeable = False
    return FeasibleActionTable(subsets=union, costs=costs, valid=valid,
                               shared=shared)


def action_mask(table: FeasibleActionTable, budget: BudgetSpec, year: int,
                spent: float) -> np.ndarray:
    """Annually valid actions that also keep the lifecycle cap reachable."""
    headroom = budget.total - spent - budget.future_minimum(year)
    return table.valid[year] & (table.costs[year] <= headroom + CURRENCY_TOL)


def select_action(q_values: np.ndarray, mask: np.ndarray, epsilon: float,
                  rng: np.random.Generator | None) -> int:
    """Epsilon-greedy over the masked actions; ties go to the lowest id."""
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise ValidationError("empty action mask: no feasible action remains")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(allowed[rng.integers(0, allowed.size)])
    masked = np.where(mask, q_values, -np.inf)
    return int(np.argmax(masked))


class PrioritizedBuffer:
    """Proportional prioritized replay over a FIFO ring."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.next_year = np.zeros(capacity, dtype=np.int64)
        self.next_spent = np.zeros(capacity)
        self.priorities = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward, next_obs, terminal,
            next_year, next_spent) -> None:
        i = self.cursor
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.terminal[i] = terminal
        self.next_year[i] = next_year
        self.next_spent[i] = next_spent
        # fresh records get the current max priority so they are seen
        self.priorities[i] = self.priorities[:self.size].max() if self.size else 1.0
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int, alpha: float,
               beta: float) -> dict:
        scaled = self.priorities[:self.size] ** alpha
        probs = scaled / scaled.sum()
        idx = rng.choice(self.size, size=batch, replace=True, p=probs)
        weights = (self.size * probs[idx]) ** -beta
        weights = weights / weights.max()
        return {
            "indices": idx,
            "weights": weights,
            "obs": self.obs[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "next_obs": self.next_obs[idx],
            "terminal": self.terminal[idx],
            "next_year": self.next_year[idx],
            "next_spent": self.next_spent[idx],
        }

    def update_priorities(self, indices: np.ndarray, values: np.ndarray) -> None:
        self.priorities[indices] = values


def q_forward(qnet: QNetwork, obs: np.ndarray) -> np.ndarray:
    """Q-values for one observation, shape (A,)."""
    q, _ = qnet.forward(np.asarray(obs, dtype=float)[None, :])
    return q[0]


def _batch_next_masks(table: FeasibleActionTable, budget: BudgetSpec,
                      next_year: np.ndarray, next_spent: np.ndarray,
                      terminal: np.ndarray) -> np.ndarray:
    """(B, A) feasibility of each action at each transition's next state."""
    B = next_year.shape[0]
    masks = np.zeros((B, table.size), dtype=bool)
    for b in range(B):
        if not terminal[b]:
            masks[b] = action_mask(table, budget, int(next_year[b]),
                                   float(next_spent[b]))
    return masks


@dataclass
class DqlTrainResult:
    qnet: QNetwork | None
    table: FeasibleActionTable | None
    best_plan: PlanMatrix | None
    best_return: float | None
    history: list[EpisodeRecord] = field(default_factory=list)


def _epsilon(hyper: DqlHyperParams, episode: int) -> float:
    anneal = max(1.0, hyper.eps_fraction * hyper.episodes)
    frac = min(1.0, (episode - 1) / anneal)
    return hyper.eps_start + (hyper.eps_end - hyper.eps_start) * frac


def _beta(hyper: DqlHyperParams, episode: int) -> float:
    if hyper.episodes <= 1:
        return hyper.per_beta_end
    frac = (episode - 1) / (hyper.episodes - 1)
    return hyper.per_beta_start + (hyper.per_beta_end - hyper.per_beta_start) * frac


def _dql_update(qnet: QNetwork, target: QNetwork, opt: Adam,
                buffer: PrioritizedBuffer, table: FeasibleActionTable,
                budget: BudgetSpec, hyper: DqlHyperParams,
                rng: np.random.Generator, beta: float) -> float:
    batch = buffer.sample(rng, hyper.batch, hyper.per_alpha, beta)
    B = hyper.batch
    q_all, cache = qnet.forward(batch["obs"])
    q_sel = q_all[np.arange(B), batch["action"]]

    tq, _ = target.forward(batch["next_obs"])
    masks = _batch_next_masks(table, budget, batch["next_year"],
                              batch["next_spent"], batch["terminal"])
    tq = np.where(masks, tq, -np.inf)
    boot = np.max(tq, axis=1)
    boot = np.where(batch["terminal"], 0.0, boot)
    y = batch["reward"] + hyper.gamma * boot

    delta = q_sel - y
    w = batch["weights"]
    loss = float(np.mean(w * delta * delta))
    grad_q = np.zeros_like(q_all)
    grad_q[np.arange(B), batch["action"]] = (2.0 / B) * w * delta
    grads, _ = qnet.backward(cache, grad_q)
    opt.step(grads)
    polyak_update(target.tensors(), qnet.tensors(), hyper.tau)
    buffer.update_priorities(batch["indices"],
                             np.abs(delta) + hyper.per_priority_floor)
    return loss


def _rollout(qnet: QNetwork, table: FeasibleActionTable, env: Environment,
             epsilon: float, rng: np.random.Generator | None,
             buffer: PrioritizedBuffer | None = None, on_step=None,
             step_monitor=None) -> tuple[float, list[tuple[int, ...]], bool]:
    budget = env.budget
    state = env.reset()
    obs = env.observe(state)
    total = 0.0
    selections: list[tuple[int, ...]] = []
    violated = False
    for _ in range(env.horizon):
        mask = action_mask(table, budget, state.year, state.spent)
        q = q_forward(qnet, obs)
        aid = select_action(q, mask, epsilon, rng)
        subset = table.subsets[aid]
        result = env.step(state, subset)
        next_obs = env.observe(result.next)
        terminal = result.next.year == env.horizon
        if buffer is not None:
            buffer.add(obs, aid, result.reward, next_obs, terminal,
                       result.next.year if not terminal else 0,
                       result.next.spent)
        if on_step is not None:
            on_step()
        if step_monitor is not None:
            # the annual window itself is the cap the table enforces
            step_monitor(StepMonitorRecord(
                year=state.year, annual_cost=result.annual_cost,
                annual_budget=float(budget.upper[state.year]),
                spent_after=result.next.spent,
                relaxed_lower=False, violated=result.violated))
        total += result.reward
        selections.append(subset)
        violated = violated or result.violated
        state = result.next
        obs = next_obs
    return total, selections, violated


def dql_train(network: NetworkSpec, budget: BudgetSpec, hyper: DqlHyperParams,
              metrics_path: str | os.PathLike | None = None,
              step_monitor=None) -> DqlTrainResult:
    """Train the baseline; tracks the best feasible plan as the HDRL loop does."""
    rng = np.random.default_rng(hyper.seed)
    env = Environment(network, budget)
    table = build_action_table(network, budget)
    qnet = QNetwork(env.obs_dim, table.size, hyper.hidden, rng)
    target = qnet.copy()
    opt = Adam(qnet.tensors(), hyper.lr)
    buffer = PrioritizedBuffer(hyper.capacity, env.obs_dim)

    best_return = -np.inf
    best_plan: PlanMatrix | None = None
    history: list[EpisodeRecord] = []

    def consider(ret: float, selections, violated: bool):
        nonlocal best_return, best_plan
        if violated or ret <= best_return:
            return
        x = np.zeros((env.horizon, network.n), dtype=np.int8)
        for t, sel in enumerate(selections):
            x[t, list(sel)] = 1
        plan = make_plan(network, x)
        if plan_is_feasible(network, budget, plan):
            best_return = ret
            best_plan = plan

    for episode in range(1, hyper.episodes + 1):
        losses: list[float] = []
        beta = _beta(hyper, episode)

        def learn():
            if len(buffer) >= hyper.batch:
                losses.append(_dql_update(qnet, target, opt, buffer, table,
                                          budget, hyper, rng, beta))

        eps = _epsilon(hyper, episode)
        ret, selections, violated = _rollout(qnet, table, env, eps, rng,
                                             buffer=buffer, on_step=learn,
                                             step_monitor=step_monitor)
        consider(ret, selections, violated)

        if episode % hyper.eval_every == 0:
            gret, gsel, gviol = _rollout(qnet, table, env, 0.0, None,
                                         step_monitor=step_monitor)
            consider(gret, gsel, gviol)

        history.append(EpisodeRecord(
            episode=episode,
            ret=ret,
            alpha=None,
            max_critic_loss=max(losses) if losses else None,
            actor1_loss=None,
            actor2_loss=None,
            best_return=best_return if np.isfinite(best_return) else None,
        ))

    if metrics_path is not None:
        write_metrics_csv(metrics_path, history)
    return DqlTrainResult(qnet=qnet, table=table, best_plan=best_plan,
                          best_return=best_return if np.isfinite(best_return) else None,
                          history=history)


def save_qnet(path: str | os.PathLike, qnet: QNetwork) -> None:
    arrays = {f"qnet.{i}": t for i, t in enumerate(qnet.tensors())}
    arrays["dims"] = np.array([qnet.in_dim, qnet.out_dim])
    save_checkpoint(path, arrays)


def load_qnet(path: str | os.PathLike, qnet: QNetwork) -> None:
    data = load_checkpoint(path)
    count = len(qnet.tensors())
    qnet.net.load_tensors([data[f"qnet.{i}"] for i in range(count)])
