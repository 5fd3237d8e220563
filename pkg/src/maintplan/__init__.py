"""Multi-year infrastructure maintenance planning under budget constraints.

A numpy library with three planners over the same Markov deterioration
environment: a hierarchical soft actor-critic (budget actor + maintenance
actor + exact knapsack projection), a deep Q-learning baseline over
enumerated feasible subsets, and an exhaustive exact oracle for small
instances.  Budget feasibility (annual windows plus a lifecycle cap) is
enforced structurally, never through reward penalties.
"""

from .budget import BudgetDecision, InfeasibleStateError, map_budget
from .dql import (DqlHyperParams, DqlTrainResult, FeasibleActionTable,
                  PrioritizedBuffer, action_mask, build_action_table,
                  dql_train, q_forward, select_action)
from .hdrl import (AgentBundle, EpisodeRecord, HyperParams, PlanStep,
                   ReplayBuffer, TrainResult, UpdateReport, act, build_bundle,
                   critic_targets, plan_year, project_actions,
                   read_metrics_csv, train, update, write_metrics_csv)
from .knapsack import (KnapsackInstance, KnapsackSolution, ScaleError,
                       enumerate_feasible_subsets, gain, gains, solve)
from .nets import (Adam, GaussianPolicy, Mlp, QNetwork, SquashedSample,
                   finite_difference_gradients, load_checkpoint,
                   polyak_update, sample_squashed, save_checkpoint)
from .network import (AssetSpec, BudgetSpec, NetworkSpec, PlanMatrix,
                      ValidationError, action_cost, expected_score, kappa,
                      kappa_vector, load_budget, load_network, make_plan,
                      plan_is_feasible, read_plan_csv, save_budget,
                      save_network, write_plan_csv)
from .oracle import (ExactSolution, PlanEvaluation, count_feasible_plans,
                     evaluate_plan, solve_optimal_plan)
from .simulator import (Environment, EnvState, StepResult, episode_return,
                        los, trace_rollout, write_rollout_trace)

__version__ = "0.1.0"
