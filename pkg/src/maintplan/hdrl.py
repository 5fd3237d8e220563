"""Hierarchical soft actor-critic planner.

Two stochastic actors decompose each year's decision: the budget actor
maps the observation to a scalar fraction that ``map_budget`` turns into
this year's admissible budget, and the maintenance actor maps the
observation plus that fraction to per-asset priority coefficients, which
the exact knapsack projection converts into a feasible treatment subset.
Because the projection respects the annual window and the remaining-funds
cap by construction, every executed plan is budget-compliant without any
reward penalties.

Learning is standard twin-critic SAC over the continuous actions
(a1, a2): the critics score (obs, a1, a2); targets use the elementwise
minimum of the two Polyak-averaged target critics minus the temperature-
weighted policy log-likelihoods; both actor losses are
E[alpha * log pi - min Q] with fresh reparameterized samples; the
temperature follows the analytic gradient -(log pi1 + log pi2 + target
entropy), applied in log space so alpha stays positive.  Gradients flow
through the full sampling chain, including the maintenance actor's
dependence on the sampled budget fraction, but never through the discrete
knapsack projection (the critics consume the raw continuous actions).

One gradient update runs per environment step once the replay buffer can
fill a batch.  A training run is single-threaded and fully determined by
its seed; independent seeds can run in parallel processes.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .budget import BudgetDecision, map_budget
from .fileio import atomic_write_text
from .knapsack import KnapsackInstance, KnapsackSolution, gains, solve
from .network import (BudgetSpec, NetworkSpec, PlanMatrix, make_plan,
                      plan_is_feasible)
from .nets import (Adam, GaussianPolicy, QNetwork, load_checkpoint,
                   polyak_update, save_checkpoint)
from .simulator import Environment, EnvState

ALPHA_MIN = 1e-6


@dataclass(frozen=True)
class HyperParams:
    """Training configuration; defaults are the tuned base setting."""

    lr_actor1: float = 8e-4      # budget actor
    lr_actor2: float = 8e-6      # maintenance actor
    lr_critic: float = 1.6e-3
    lr_alpha: float = 1.2e-3
    gamma: float = 1.0           # the objective is an undiscounted finite sum
    tau: float = 0.005
    batch: int = 256
    capacity: int = 100_000
    episodes: int = 5000
    target_entropy: float | None = None   # default -(1 + n)
    seed: int = 0
    hidden: tuple[int, int] = (256, 256)
    alpha_init: float = 0.1
    eval_every: int = 10         # greedy evaluation cadence, in episodes
    budget_mode: str = "clamp"


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.a1 = np.zeros(capacity)
        self.a2 = np.zeros((capacity, act_dim))
        self.reward = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, a1, a2, reward, next_obs, terminal) -> None:
        i = self.cursor
        self.obs[i] = obs
        self.a1[i] = a1
        self.a2[i] = a2
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.terminal[i] = terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int) -> dict:
        idx = rng.integers(0, self.size, size=batch)
        return {
            "obs": self.obs[idx],
            "a1": self.a1[idx],
            "a2": self.a2[idx],
            "reward": self.reward[idx],
            "next_obs": self.next_obs[idx],
            "terminal": self.terminal[idx],
        }


@dataclass
class AgentBundle:
    """Both actors, twin critics with their targets, temperature, optimizers."""

    actor1: GaussianPolicy
    actor2: GaussianPolicy
    critic1: QNetwork
    critic2: QNetwork
    target1: QNetwork
    target2: QNetwork
    log_alpha: float
    target_entropy: float
    opt_actor1: Adam
    opt_actor2: Adam
    opt_critic1: Adam
    opt_critic2: Adam
    n: int
    obs_dim: int

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    def named_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name, net in (("actor1", self.actor1), ("actor2", self.actor2),
                          ("critic1", self.critic1), ("critic2", self.critic2),
                          ("target1", self.target1), ("target2", self.target2)):
            for i, t in enumerate(net.tensors()):
                out[f"{name}.{i}"] = t
        out["log_alpha"] = np.array(self.log_alpha)
        return out

    def save(self, path: str | os.PathLike) -> None:
        save_checkpoint(path, self.named_tensors())

    def load(self, path: str | os.PathLike) -> None:
        data = load_checkpoint(path)
        for name, net in (("actor1", self.actor1), ("actor2", self.actor2),
                          ("critic1", self.critic1), ("critic2", self.critic2),
                          ("target1", self.target1), ("target2", self.target2)):
            count = len(net.tensors())
            net.net.load_tensors([data[f"{name}.{i}"] for i in range(count)])
        self.log_alpha = float(data["log_alpha"])


def build_bundle(n: int, K: int, hyper: HyperParams,
                 rng: np.random.Generator) -> AgentBundle:
    """Fresh networks and optimizers for an n-asset, K-state problem."""
    obs_dim = n * K + 3
    actor1 = GaussianPolicy(obs_dim, 1, hyper.hidden, rng)
    actor2 = GaussianPolicy(obs_dim + 1, n, hyper.hidden, rng)
    critic_in = obs_dim + 1 + n
    critic1 = QNetwork(critic_in, 1, hyper.hidden, rng)
    critic2 = QNetwork(critic_in, 1, hyper.hidden, rng)
    target_entropy = (hyper.target_entropy if hyper.target_entropy is not None
                      else -(1.0 + n))
    return AgentBundle(
        actor1=actor1, actor2=actor2,
        critic1=critic1, critic2=critic2,
        target1=critic1.copy(), target2=critic2.copy(),
        log_alpha=float(np.log(hyper.alpha_init)),
        target_entropy=float(target_entropy),
        opt_actor1=Adam(actor1.tensors(), hyper.lr_actor1),
        opt_actor2=Adam(actor2.tensors(), hyper.lr_actor2),
        opt_critic1=Adam(critic1.tensors(), hyper.lr_critic),
        opt_critic2=Adam(critic2.tensors(), hyper.lr_critic),
        n=n, obs_dim=obs_dim,
    )


def act(bundle: AgentBundle, obs: np.ndarray,
        rng: np.random.Generator | None = None, deterministic: bool = False
        ) -> tuple[float, np.ndarray, float, float]:
    """Sample (a1, a2) hierarchically; returns (a1, a2, logp1, logp2).

    Deterministic mode returns the squashed means (and their densities).
    """
    x = np.asarray(obs, dtype=float)[None, :]
    if deterministic:
        noise1 = np.zeros((1, 1))
        noise2 = np.zeros((1, bundle.n))
    else:
        if rng is None:
            raise ValueError("stochastic act() needs an rng")
        noise1 = rng.standard_normal((1, 1))
        noise2 = rng.standard_normal((1, bundle.n))
    s1, _ = bundle.actor1.sample(x, noise1)
    x2 = np.concatenate([x, s1.action], axis=1)
    s2, _ = bundle.actor2.sample(x2, noise2)
    return (float(s1.action[0, 0]), s2.action[0].copy(),
            float(s1.log_prob[0]), float(s2.log_prob[0]))


@dataclass(frozen=True)
class PlanStep:
    """One year's full decision: actions, mapped budget, projection."""

    a1: float
    a2: np.ndarray
    logp1: float
    logp2: float
    selected: tuple[int, ...]
    budget_decision: BudgetDecision
    knapsack: KnapsackSolution


def project_actions(network: NetworkSpec, budget: BudgetSpec, state: EnvState,
                    a1: float, a2: np.ndarray, mode: str = "clamp"
                    ) -> tuple[tuple[int, ...], BudgetDecision, KnapsackSolution]:
    """Deterministically turn raw actions into a feasible treatment subset."""
    decision = map_budget(a1, state.year, state.spent, budget, mode=mode)
    values = np.asarray(a2, dtype=float) * gains(network, state.dists)
    instance = KnapsackInstance(
        values=values,
        costs=network.year_costs(state.year),
        lower=float(budget.lower[state.year]),
        upper=decision.annual_budget,
    )
    solution = solve(instance)
    return solution.selected, decision, solution


def plan_year(bundle: AgentBundle, state: EnvState, network: NetworkSpec,
              budget: BudgetSpec, rng: np.random.Generator | None = None,
              deterministic: bool = False, mode: str = "clamp") -> PlanStep:
    """Sample actions for the current year and project them to a subset."""
    env = Environment(network, budget)
    obs = env.observe(state)
    a1, a2, logp1, logp2 = act(bundle, obs, rng, deterministic)
    selected, decision, solution = project_actions(network, budget, state,
                                                   a1, a2, mode=mode)
    return PlanStep(a1=a1, a2=a2, logp1=logp1, logp2=logp2, selected=selected,
                    budget_decision=decision, knapsack=solution)


def critic_targets(bundle: AgentBundle, batch: dict, rng: np.random.Generator,
                   gamma: float) -> np.ndarray:
    """Soft Bellman targets from the target critics and current actors."""
    next_obs = batch["next_obs"]
    B = next_obs.shape[0]
    noise1 = rng.standard_normal((B, 1))
    noise2 = rng.standard_normal((B, bundle.n))
    s1, _ = bundle.actor1.sample(next_obs, noise1)
    x2 = np.concatenate([next_obs, s1.action], axis=1)
    s2, _ = bundle.actor2.sample(x2, noise2)
    z = np.concatenate([next_obs, s1.action, s2.action], axis=1)
    q1, _ = bundle.target1.forward(z)
    q2, _ = bundle.target2.forward(z)
    qmin = np.minimum(q1[:, 0], q2[:, 0])
    entropy_term = bundle.alpha * (s1.log_prob + s2.log_prob)
    y = batch["reward"] + gamma * (qmin - entropy_term)
    return np.where(batch["terminal"], batch["reward"], y)


@dataclass(frozen=True)
class UpdateReport:
    loss_q1: float
    loss_q2: float
    loss_pi1: float
    loss_pi2: float
    loss_alpha: float
    alpha: float


def actor_losses_and_grads(bundle: AgentBundle, obs: np.ndarray,
                           noise1: np.ndarray, noise2: np.ndarray):
    """Both actor losses with exact gradients from one sampling chain.

    Returns (loss_pi1, loss_pi2, grads_actor1, grads_actor2, mean_log_prob)
    where mean_log_prob is the batch mean of log pi1 + log pi2, reused by
    the temperature update.  Gradients are of each actor's own loss with
    respect to its own parameters; actor 1's flow through the critic input
    directly and through actor 2's dependence on the sampled a1, but not
    through log pi2, which its loss does not contain.
    """
    B = obs.shape[0]
    s1, cache1 = bundle.actor1.sample(obs, noise1)
    x2 = np.concatenate([obs, s1.action], axis=1)
    s2, cache2 = bundle.actor2.sample(x2, noise2)
    z = np.concatenate([obs, s1.action, s2.action], axis=1)
    q1, cq1 = bundle.critic1.forward(z)
    q2, cq2 = bundle.critic2.forward(z)
    q1 = q1[:, 0]
    q2 = q2[:, 0]
    use1 = q1 <= q2           # tie routes through critic 1, deterministically
    qmin = np.where(use1, q1, q2)
    alpha = bundle.alpha

    loss_pi1 = float(np.mean(alpha * s1.log_prob - qmin))
    loss_pi2 = float(np.mean(alpha * s2.log_prob - qmin))

    # d(-mean qmin)/dq routed to whichever critic is the row minimum
    gmin = -np.ones(B) / B
    _, gz1 = bundle.critic1.backward(cq1, np.where(use1, gmin, 0.0)[:, None])
    _, gz2 = bundle.critic2.backward(cq2, np.where(use1, 0.0, gmin)[:, None])
    grad_z = gz1 + gz2
    d = bundle.obs_dim
    grad_a1_direct = grad_z[:, d:d + 1]
    grad_a2 = grad_z[:, d + 1:]

    glp = (alpha / B) * np.ones(B)
    pgrads2, _ = bundle.actor2.backward(cache2, grad_a2, glp)
    _, gx2 = bundle.actor2.backward(cache2, grad_a2, np.zeros(B))
    grad_a1 = grad_a1_direct + gx2[:, d:d + 1]
    pgrads1, _ = bundle.actor1.backward(cache1, grad_a1, glp)

    mean_log_prob = float(np.mean(s1.log_prob + s2.log_prob))
    return loss_pi1, loss_pi2, pgrads1, pgrads2, mean_log_prob


def update(bundle: AgentBundle, batch: dict, hyper: HyperParams,
           rng: np.random.Generator) -> UpdateReport:
    """One full SAC update: critics, both actors, temperature, targets."""
    obs = batch["obs"]
    B = obs.shape[0]

    # critics fit the soft Bellman target on the stored actions
    y = critic_targets(bundle, batch, rng, hyper.gamma)
    z_stored = np.concatenate([obs, batch["a1"][:, None], batch["a2"]], axis=1)
    losses_q = []
    for critic, opt in ((bundle.critic1, bundle.opt_critic1),
                        (bundle.critic2, bundle.opt_critic2)):
        q, cache = critic.forward(z_stored)
        diff = q[:, 0] - y
        losses_q.append(float(np.mean(diff * diff)))
        grads, _ = critic.backward(cache, (2.0 / B) * diff[:, None])
        opt.step(grads)

    # one fresh reparameterized chain serves both actor losses and alpha
    noise1 = rng.standard_normal((B, 1))
    noise2 = rng.standard_normal((B, bundle.n))
    alpha = bundle.alpha
    loss_pi1, loss_pi2, pgrads1, pgrads2, mean_log_prob = \
        actor_losses_and_grads(bundle, obs, noise1, noise2)
    bundle.opt_actor1.step(pgrads1)
    bundle.opt_actor2.step(pgrads2)

    # temperature: analytic gradient, stepped in log space for positivity
    grad_alpha = -(mean_log_prob + bundle.target_entropy)
    loss_alpha = alpha * grad_alpha
    bundle.log_alpha = max(float(np.log(ALPHA_MIN)),
                           bundle.log_alpha - hyper.lr_alpha * grad_alpha)

    polyak_update(bundle.target1.tensors(), bundle.critic1.tensors(), hyper.tau)
    polyak_update(bundle.target2.tensors(), bundle.critic2.tensors(), hyper.tau)

    return UpdateReport(loss_q1=losses_q[0], loss_q2=losses_q[1],
                        loss_pi1=loss_pi1, loss_pi2=loss_pi2,
                        loss_alpha=loss_alpha, alpha=bundle.alpha)


# ---------------------------------------------------------------------------
# training loop


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    ret: float
    alpha: float | None
    max_critic_loss: float | None
    actor1_loss: float | None
    actor2_loss: float | None
    best_return: float | None


@dataclass
class TrainResult:
    bundle: AgentBundle | None
    best_plan: PlanMatrix | None
    best_return: float | None
    history: list[EpisodeRecord] = field(default_factory=list)


@dataclass(frozen=True)
class StepMonitorRecord:
    """Per-executed-step feasibility facts, for external verification."""

    year: int
    annual_cost: float
    annual_budget: float     # the mapped b_t the projection ran against
    spent_after: float
    relaxed_lower: bool
    violated: bool


def _rollout(bundle: AgentBundle, env: Environment,
             rng: np.random.Generator | None, deterministic: bool,
             mode: str, buffer: ReplayBuffer | None = None,
             on_step=None, step_monitor=None
             ) -> tuple[float, list[tuple[int, ...]], bool]:
    """One episode; returns (return, per-year selections, any violation)."""
    network, budget = env.network, env.budget
    state = env.reset()
    obs = env.observe(state)
    total = 0.0
    selections: list[tuple[int, ...]] = []
    violated = False
    for _ in range(env.horizon):
        step = plan_year(bundle, state, network, budget, rng=rng,
                         deterministic=deterministic, mode=mode)
        result = env.step(state, step.selected)
        next_obs = env.observe(result.next)
        terminal = result.next.year == env.horizon
        if buffer is not None:
            buffer.add(obs, step.a1, step.a2, result.reward, next_obs, terminal)
        if on_step is not None:
            on_step()
        if step_monitor is not None:
            step_monitor(StepMonitorRecord(
                year=state.year, annual_cost=result.annual_cost,
                annual_budget=step.budget_decision.annual_budget,
                spent_after=result.next.spent,
                relaxed_lower=step.knapsack.relaxed_lower,
                violated=result.violated))
        total += result.reward
        selections.append(step.selected)
        violated = violated or result.violated or step.knapsack.relaxed_lower
        state = result.next
        obs = next_obs
    return total, selections, violated


def _selections_to_plan(network: NetworkSpec, horizon: int,
                        selections: list[tuple[int, ...]]) -> PlanMatrix:
    x = np.zeros((horizon, network.n), dtype=np.int8)
    for t, sel in enumerate(selections):
        x[t, list(sel)] = 1
    return make_plan(network, x)


def train(network: NetworkSpec, budget: BudgetSpec, hyper: HyperParams,
          metrics_path: str | os.PathLike | None = None,
          step_monitor=None) -> TrainResult:
    """Full training run; tracks the best feasible plan ever executed.

    Candidate best plans come from every stochastic episode and from a
    deterministic (squashed-mean) rollout every ``eval_every`` episodes;
    a candidate is accepted only if no step violated a constraint and an
    independent recomputation of its costs confirms feasibility.
    ``step_monitor``, if given, receives a StepMonitorRecord for every
    executed environment step (training and evaluation alike).
    """
    rng = np.random.default_rng(hyper.seed)
    env = Environment(network, budget)
    bundle = build_bundle(network.n, network.K, hyper, rng)
    buffer = ReplayBuffer(hyper.capacity, env.obs_dim, network.n)

    best_return = -np.inf
    best_plan: PlanMatrix | None = None
    history: list[EpisodeRecord] = []

    def consider(ret: float, selections, violated: bool):
        nonlocal best_return, best_plan
        if violated or ret <= best_return:
            return
        plan = _selections_to_plan(network, env.horizon, selections)
        if plan_is_feasible(network, budget, plan):
            best_return = ret
            best_plan = plan

    for episode in range(1, hyper.episodes + 1):
        reports: list[UpdateReport] = []

        def learn():
            if len(buffer) >= hyper.batch:
                batch = buffer.sample(rng, hyper.batch)
                reports.append(update(bundle, batch, hyper, rng))

        ret, selections, violated = _rollout(
            bundle, env, rng, deterministic=False, mode=hyper.budget_mode,
            buffer=buffer, on_step=learn, step_monitor=step_monitor)
        consider(ret, selections, violated)

        if episode % hyper.eval_every == 0:
            gret, gsel, gviol = _rollout(bundle, env, None, deterministic=True,
                                         mode=hyper.budget_mode,
                                         step_monitor=step_monitor)
            consider(gret, gsel, gviol)

        history.append(EpisodeRecord(
            episode=episode,
            ret=ret,
            alpha=bundle.alpha,
            max_critic_loss=max(max(r.loss_q1, r.loss_q2) for r in reports)
            if reports else None,
            actor1_loss=float(np.mean([r.loss_pi1 for r in reports]))
            if reports else None,
            actor2_loss=float(np.mean([r.loss_pi2 for r in reports]))
            if reports else None,
            best_return=best_return if np.isfinite(best_return) else None,
        ))

    if metrics_path is not None:
        write_metrics_csv(metrics_path, history)
    return TrainResult(bundle=bundle, best_plan=best_plan,
                       best_return=best_return if np.isfinite(best_return) else None,
                       history=history)


METRICS_COLUMNS = ("episode", "return", "alpha", "max_critic_loss",
                   "actor1_loss", "actor2_loss", "best_return_so_far")


def write_metrics_csv(path: str | os.PathLike,
                      history: list[EpisodeRecord]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(METRICS_COLUMNS)
    for rec in history:
        writer.writerow([
            rec.episode,
            repr(rec.ret),
            "" if rec.alpha is None else repr(rec.alpha),
            "" if rec.max_critic_loss is None else repr(rec.max_critic_loss),
            "" if rec.actor1_loss is None else repr(rec.actor1_loss),
            "" if rec.actor2_loss is None else repr(rec.actor2_loss),
            "" if rec.best_return is None else repr(rec.best_return),
        ])
    atomic_write_text(path, buf.getvalue())


def read_metrics_csv(path: str | os.PathLike) -> list[EpisodeRecord]:
    records = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            records.append(EpisodeRecord(
                episode=int(row["episode"]),
                ret=float(row["return"]),
                alpha=float(row["alpha"]) if row["alpha"] else None,
                max_critic_loss=(float(row["max_critic_loss"])
                                 if row["max_critic_loss"] else None),
                actor1_loss=(float(row["actor1_loss"])
                             if row["actor1_loss"] else None),
                actor2_loss=(float(row["actor2_loss"])
                             if row["actor2_loss"] else None),
                best_return=(float(row["best_return_so_far"])
                             if row["best_return_so_far"] else None),
            ))
    return records
