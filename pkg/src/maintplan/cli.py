"""Batch command-line interface.

Subcommands: validate, enumerate-actions, count-plans, solve-exact,
evaluate, train (hdrl or dql), study.  Exit codes: 0 success, 1 domain
error (bad data, infeasible instance, scale contract), 2 usage error.
All randomness flows from --seed; nothing reads the clock or OS entropy,
so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dql, hdrl, oracle
from .budget import InfeasibleStateError
from .fileio import atomic_write_text
from .knapsack import ScaleError, enumerate_feasible_subsets
from .network import (BudgetSpec, NetworkSpec, ValidationError, load_budget,
                      load_network, read_plan_csv, write_plan_csv)
from .simulator import Environment, trace_rollout, write_rollout_trace

_DOMAIN_ERRORS = (ValidationError, InfeasibleStateError, ScaleError,
                  FileNotFoundError, IsADirectoryError, PermissionError)


def _load_pair(args) -> tuple[NetworkSpec, BudgetSpec]:
    network = load_network(args.network)
    budget = load_budget(args.budget)
    Environment(network, budget)  # horizon consistency check
    return network, budget


def _cmd_validate(args) -> int:
    network, budget = _load_pair(args)
    print(f"network: {network.n} assets, K={network.K}, horizon={network.horizon}")
    print(f"budget: horizon={budget.horizon}, total={budget.total}")
    print("ok")
    return 0


def _cmd_enumerate_actions(args) -> int:
    network, budget = _load_pair(args)
    per_year = [enumerate_feasible_subsets(network.year_costs(t),
                                           float(budget.lower[t]),
                                           float(budget.upper[t]))
                for t in range(budget.horizon)]
    shared = all(year == per_year[0] for year in per_year[1:])
    if shared:
        print(f"feasible annual subsets (all years): {len(per_year[0])}")
    else:
        for t, year in enumerate(per_year):
            print(f"year {t + 1}: {len(year)} feasible subsets")
    if args.list:
        years = [per_year[0]] if shared else per_year
        for t, year in enumerate(years):
            label = "all years" if shared else f"year {t + 1}"
            for subset in year:
                ids = ";".join(network.ids[i] for i in subset)
                print(f"{label}: [{ids}]")
    return 0


def _cmd_count_plans(args) -> int:
    network, budget = _load_pair(args)
    count = oracle.count_feasible_plans(network, budget,
                                        truncate_costs=not args.exact_costs)
    print(count)
    return 0


def _cmd_solve_exact(args) -> int:
    network, budget = _load_pair(args)
    solution = oracle.solve_optimal_plan(network, budget)
    print(f"average LoS: {solution.average_los!r}")
    print(f"average condition: {solution.average_condition!r}")
    print(f"total cost: {solution.plan.total_cost!r}")
    if args.out:
        write_plan_csv(args.out, network, solution.plan)
        print(f"plan written to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    network, budget = _load_pair(args)
    plan = read_plan_csv(args.plan, network)
    ev = oracle.evaluate_plan(network, budget, plan)
    print(f"average LoS: {ev.average_los!r}")
    print(f"average condition: {ev.average_condition!r}")
    print("annual costs: " + " ".join(repr(float(c)) for c in ev.annual_costs))
    print(f"total cost: {ev.total_cost!r}")
    if ev.violations:
        for v in ev.violations:
            print(f"violated: {v}")
    else:
        print("feasible: yes")
    if args.trace:
        env = Environment(network, budget)
        selections = [tuple(np.flatnonzero(plan.x[t])) for t in range(budget.horizon)]
        write_rollout_trace(args.trace, trace_rollout(env, selections))
        print(f"trace written to {args.trace}")
    return 0


def _hdrl_hyper(args, n: int) -> hdrl.HyperParams:
    base = hdrl.HyperParams()
    return hdrl.HyperParams(
        lr_actor1=args.lr_actor1 if args.lr_actor1 is not None else base.lr_actor1,
        lr_actor2=args.lr_actor2 if args.lr_actor2 is not None else base.lr_actor2,
        lr_critic=args.lr_critic if args.lr_critic is not None else base.lr_critic,
        lr_alpha=args.lr_alpha if args.lr_alpha is not None else base.lr_alpha,
        gamma=args.gamma if args.gamma is not None else base.gamma,
        tau=args.tau if args.tau is not None else base.tau,
        batch=args.batch if args.batch is not None else base.batch,
        capacity=args.capacity if args.capacity is not None else base.capacity,
        episodes=args.episodes,
        target_entropy=args.target_entropy,
        seed=args.seed,
        hidden=tuple(args.hidden) if args.hidden else base.hidden,
        alpha_init=args.alpha_init if args.alpha_init is not None else base.alpha_init,
        eval_every=args.eval_every if args.eval_every is not None else base.eval_every,
    )


def _dql_hyper(args) -> dql.DqlHyperParams:
    base = dql.DqlHyperParams()
    return dql.DqlHyperParams(
        lr=args.lr if args.lr is not None else base.lr,
        gamma=args.gamma if args.gamma is not None else base.gamma,
        tau=args.tau if args.tau is not None else base.tau,
        batch=args.batch if args.batch is not None else base.batch,
        capacity=args.capacity if args.capacity is not None else base.capacity,
        episodes=args.episodes,
        eps_start=args.eps_start if args.eps_start is not None else base.eps_start,
        eps_end=args.eps_end if args.eps_end is not None else base.eps_end,
        eps_fraction=(args.eps_fraction if args.eps_fraction is not None
                      else base.eps_fraction),
        per_alpha=args.per_alpha if args.per_alpha is not None else base.per_alpha,
        seed=args.seed,
        hidden=tuple(args.hidden) if args.hidden else base.hidden,
        eval_every=args.eval_every if args.eval_every is not None else base.eval_every,
    )


def _run_one(method: str, network_path: str, budget_path: str, seed: int,
             episodes: int, out_dir: str, hidden: tuple | None,
             prefix: str = "") -> dict:
    """Train one seed and write its artifacts; returns summary fields."""
    network = load_network(network_path)
    budget = load_budget(budget_path)
    os.makedirs(out_dir, exist_ok=True)
    metrics = os.path.join(out_dir, f"{prefix}metrics.csv")
    plan_path = os.path.join(out_dir, f"{prefix}plan.csv")
    ckpt = os.path.join(out_dir, f"{prefix}checkpoint.npz")

    if method == "hdrl":
        hyper = hdrl.HyperParams(seed=seed, episodes=episodes,
                                 **({"hidden": hidden} if hidden else {}))
        result = hdrl.train(network, budget, hyper, metrics_path=metrics)
        result.bundle.save(ckpt)
    else:
        hyper = dql.DqlHyperParams(seed=seed, episodes=episodes,
                                   **({"hidden": hidden} if hidden else {}))
        result = dql.dql_train(network, budget, hyper, metrics_path=metrics)
        dql.save_qnet(ckpt, result.qnet)

    summary = {"seed": seed, "best_return": result.best_return,
               "average_los": None, "average_condition": None,
               "total_cost": None}
    if result.best_plan is not None:
        ev = oracle.evaluate_plan(network, budget, result.best_plan)
        write_plan_csv(plan_path, network, result.best_plan)
        summary.update(average_los=ev.average_los,
                       average_condition=ev.average_condition,
                       total_cost=ev.total_cost)
    return summary


def _cmd_train(args) -> int:
    network, budget = _load_pair(args)
    os.makedirs(args.out_dir, exist_ok=True)
    metrics = os.path.join(args.out_dir, "metrics.csv")
    plan_path = os.path.join(args.out_dir, "plan.csv")
    ckpt = os.path.join(args.out_dir, "checkpoint.npz")

    if args.method == "hdrl":
        result = hdrl.train(network, budget, _hdrl_hyper(args, network.n),
                            metrics_path=metrics)
        result.bundle.save(ckpt)
    else:
        result = dql.dql_train(network, budget, _dql_hyper(args),
                               metrics_path=metrics)
        dql.save_qnet(ckpt, result.qnet)

    print(f"metrics written to {metrics}")
    print(f"checkpoint written to {ckpt}")
    if result.best_plan is None:
        print("no feasible plan found")
        return 0
    ev = oracle.evaluate_plan(network, budget, result.best_plan)
    write_plan_csv(plan_path, network, result.best_plan)
    print(f"best plan written to {plan_path}")
    print(f"best return: {result.best_return!r}")
    print(f"average LoS: {ev.average_los!r}")
    print(f"average condition: {ev.average_condition!r}")
    print(f"total cost: {ev.total_cost!r}")
    return 0


def _study_worker(job):
    return _run_one(*job)


def _cmd_study(args) -> int:
    _load_pair(args)  # fail fast on bad data before spawning workers
    os.makedirs(args.out_dir, exist_ok=True)
    hidden = tuple(args.hidden) if args.hidden else None
    jobs = [(args.method, args.network, args.budget, args.seed + k,
             args.episodes, args.out_dir, hidden, f"run{args.seed + k}_")
            for k in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_study_worker, jobs))
    else:
        summaries = [_study_worker(job) for job in jobs]

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["seed", "best_return", "average_los",
                     "average_condition", "total_cost"])
    for s in summaries:  # jobs submitted in seed order; map preserves it
        writer.writerow([s["seed"]] +
                        ["" if s[k] is None else repr(s[k])
                         for k in ("best_return", "average_los",
                                   "average_condition", "total_cost")])
    summary_path = os.path.join(args.out_dir, "study_summary.csv")
    atomic_write_text(summary_path, buf.getvalue())
    print(f"summary written to {summary_path}")

    objectives = [s["average_los"] for s in summaries if s["average_los"] is not None]
    if objectives:
        print(f"mean objective (average LoS) over {len(objectives)} runs: "
              f"{float(np.mean(objectives))!r}")
        conditions = [s["average_condition"] for s in summaries
                      if s["average_condition"] is not None]
        print(f"mean average condition: {float(np.mean(conditions))!r}")
    return 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", required=True, help="network dataset JSON")
    p.add_argument("--budget", required=True, help="budget JSON")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=5000)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--capacity", type=int, default=None)
    p.add_argument("--hidden", type=int, nargs=2, default=None,
                   metavar=("H1", "H2"))
    p.add_argument("--eval-every", type=int, default=None)
    # hierarchical planner
    p.add_argument("--lr-actor1", type=float, default=None)
    p.add_argument("--lr-actor2", type=float, default=None)
    p.add_argument("--lr-critic", type=float, default=None)
    p.add_argument("--lr-alpha", type=float, default=None)
    p.add_argument("--target-entropy", type=float, default=None)
    p.add_argument("--alpha-init", type=float, default=None)
    # baseline
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--eps-start", type=float, default=None)
    p.add_argument("--eps-end", type=float, default=None)
    p.add_argument("--eps-fraction", type=float, default=None)
    p.add_argument("--per-alpha", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maintplan",
        description="Multi-year maintenance planning under budget constraints "
                    "(dataset schema version 1: see the network/budget JSON "
                    "layouts in the README)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a dataset pair")
    p.add_argument("network")
    p.add_argument("budget")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("enumerate-actions",
                       help="per-year budget-feasible subset counts")
    _add_data_args(p)
    p.add_argument("--list", action="store_true", help="also print every subset")
    p.set_defaults(func=_cmd_enumerate_actions)

    p = sub.add_parser("count-plans",
                       help="count multi-year plans meeting all constraints")
    _add_data_args(p)
    p.add_argument("--exact-costs", action="store_true",
                   help="count with unrounded costs instead of whole-currency "
                        "truncation (integer-solver convention)")
    p.set_defaults(func=_cmd_count_plans)

    p = sub.add_parser("solve-exact", help="exhaustive optimal plan")
    _add_data_args(p)
    p.add_argument("--out", default=None, help="write the optimal plan CSV here")
    p.set_defaults(func=_cmd_solve_exact)

    p = sub.add_parser("evaluate", help="score a plan file against a dataset")
    _add_data_args(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--trace", default=None, help="write a rollout trace CSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("train", help="train a planner")
    p.add_argument("method", choices=["hdrl", "dql"])
    _add_data_args(p)
    _add_train_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("study", help="train many seeds and summarize")
    p.add_argument("--method", choices=["hdrl", "dql"], required=True)
    _add_data_args(p)
    p.add_argument("--seeds", type=int, required=True, help="number of runs")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--episodes", type=int, default=5000)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--hidden", type=int, nargs=2, default=None,
                   metavar=("H1", "H2"))
    p.set_defaults(func=_cmd_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
