"""Domain model for budget-constrained maintenance planning.

Holds the asset network (weights, cost schedules, Markov deterioration and
maintenance matrices, initial condition distributions), the budget envelope
(annual lower/upper bounds plus a lifecycle cap), and the shared arithmetic
every planner builds on:

* ``kappa``          - converts a 1..K condition state to a 0-1 score,
                       1 being pristine and K being failed,
* ``expected_score`` - expectation of ``kappa`` under a condition
                       distribution,
* ``action_cost``    - currency cost of treating a subset of assets in a
                       given year,
* plan matrices      - binary h x n schedules with their per-year costs.

Condition distributions and transition matrices are plain numpy arrays
(rows of probabilities over states 1..K); their invariants are enforced by
the validators in this module at load time, and all loaded arrays are
frozen (read-only) afterwards so specs can be shared freely across threads.

Dataset files are JSON::

    {"K": 5, "horizon": 5,
     "assets": [{"id": ..., "weight": ..., "unit_cost": [h values],
                 "deterioration": [[K x K]], "maintenance": [[K x K]],
                 "initial": [K values]}, ...]}

    {"horizon": 5, "lower": [h values], "upper": [h values], "total": ...}

Numbers are decimal; currency is one consistent unit throughout a file.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .fileio import atomic_write_text

#: Row sums of stochastic vectors must match 1 this tightly after loading.
STOCHASTIC_TOL = 1e-9
#: Row sums within this distance of 1 are silently renormalized at load
#: (tolerates text-format rounding); beyond it the file is rejected.
RENORM_TOL = 1e-6
#: Absolute tolerance for currency comparisons.
CURRENCY_TOL = 1e-6


class ValidationError(ValueError):
    """A dataset or domain value violates a model invariant."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def validate_distribution(probs: np.ndarray, K: int, where: str = "distribution") -> np.ndarray:
    """Check a length-K probability vector; renormalize near-1 sums.

    Raises ValidationError naming ``where`` if entries are negative, the
    length is wrong, or the sum is off by more than RENORM_TOL.
    """
    probs = np.asarray(probs, dtype=float)
    if K < 2:
        raise ValidationError(f"{where}: K >= 2 required, got {K}")
    if probs.shape != (K,):
        raise ValidationError(f"{where}: expected {K} probabilities, got shape {probs.shape}")
    if np.any(probs < 0) or np.any(probs > 1 + RENORM_TOL):
        raise ValidationError(f"{where}: entries must lie in [0, 1]")
    total = float(probs.sum())
    if abs(total - 1.0) > RENORM_TOL:
        raise ValidationError(f"{where}: probabilities sum to {total:.9f}, not 1")
    if abs(total - 1.0) > STOCHASTIC_TOL:
        probs = probs / total
    return _freeze(probs)


def validate_transition_matrix(rows: np.ndarray, K: int, where: str = "matrix") -> np.ndarray:
    """Check a K x K row-stochastic matrix; renormalize near-1 rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape != (K, K):
        raise ValidationError(f"{where}: expected {K}x{K} matrix, got shape {rows.shape}")
    out = np.empty_like(rows)
    for r in range(K):
        out[r] = validate_distribution(rows[r], K, where=f"{where} row {r + 1}")
    return _freeze(out)


@dataclass(frozen=True)
class AssetSpec:
    """One maintainable asset: weight, cost schedule, and its dynamics."""

    id: str
    weight: float
    unit_cost: np.ndarray        # (h,) currency per weight unit, by year
    deterioration: np.ndarray    # (K, K) annual transition when untreated
    maintenance: np.ndarray      # (K, K) annual transition when treated
    initial: np.ndarray          # (K,) condition distribution at year 0


@dataclass(frozen=True)
class NetworkSpec:
    """A validated collection of assets sharing one K-state condition scale.

    Besides the per-asset specs, stacked numpy views are precomputed for
    the simulator and planners: ``weights`` (n,), ``unit_costs`` (n, h),
    ``det_mats``/``act_mats`` (n, K, K) and ``initial_dists`` (n, K).
    """

    assets: tuple[AssetSpec, ...]
    K: int
    weights: np.ndarray = field(repr=False, default=None)
    unit_costs: np.ndarray = field(repr=False, default=None)
    det_mats: np.ndarray = field(repr=False, default=None)
    act_mats: np.ndarray = field(repr=False, default=None)
    initial_dists: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if len(self.assets) < 1:
            raise ValidationError("n >= 1 required: asset list is empty")
        ids = [a.id for a in self.assets]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate asset ids: {dup}")
        horizons = {a.unit_cost.shape[0] for a in self.assets}
        if len(horizons) != 1:
            raise ValidationError(f"assets disagree on cost-schedule length: {sorted(horizons)}")
        object.__setattr__(self, "weights",
                           _freeze(np.array([a.weight for a in self.assets], dtype=float)))
        object.__setattr__(self, "unit_costs",
                           _freeze(np.stack([a.unit_cost for a in self.assets])))
        object.__setattr__(self, "det_mats",
                           _freeze(np.stack([a.deterioration for a in self.assets])))
        object.__setattr__(self, "act_mats",
                           _freeze(np.stack([a.maintenance for a in self.assets])))
        object.__setattr__(self, "initial_dists",
                           _freeze(np.stack([a.initial for a in self.assets])))

    @property
    def n(self) -> int:
        return len(self.assets)

    @property
    def horizon(self) -> int:
        return int(self.unit_costs.shape[1])

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.assets)

    def index_of(self, asset_id: str) -> int:
        for i, a in enumerate(self.assets):
            if a.id == asset_id:
                return i
        raise ValidationError(f"unknown asset id: {asset_id!r}")

    def year_costs(self, year: int) -> np.ndarray:
        """Per-asset treatment cost c_{i,t} * w_i for one year, shape (n,)."""
        if not 0 <= year < self.horizon:
            raise ValidationError(f"year {year} outside horizon 0..{self.horizon - 1}")
        return self.unit_costs[:, year] * self.weights


@dataclass(frozen=True)
class BudgetSpec:
    """Annual spending window per year plus a lifecycle total cap."""

    horizon: int
    lower: np.ndarray   # (h,) annual minimum spend
    upper: np.ndarray   # (h,) annual maximum spend
    total: float        # lifecycle cap

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("horizon must be a positive integer")
        lower = _freeze(np.asarray(self.lower, dtype=float))
        upper = _freeze(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != (self.horizon,) or upper.shape != (self.horizon,):
            raise ValidationError(
                f"budget bounds must have length {self.horizon}, "
                f"got {lower.shape} and {upper.shape}")
        if np.any(lower < 0):
            raise ValidationError("annual lower bounds must be >= 0")
        if np.any(lower > upper + CURRENCY_TOL):
            bad = int(np.argmax(lower > upper + CURRENCY_TOL))
            raise ValidationError(
                f"year {bad + 1}: lower bound {lower[bad]} exceeds upper bound {upper[bad]}")
        if float(lower.sum()) > self.total + CURRENCY_TOL:
            raise ValidationError(
                f"globally infeasible: sum of annual lower bounds {float(lower.sum())} "
                f"exceeds lifecycle total {self.total}")

    def future_minimum(self, year: int) -> float:
        """Sum of annual lower bounds strictly after ``year`` (0-based)."""
        return float(self.lower[year + 1:].sum())


@dataclass(frozen=True)
class PlanMatrix:
    """Binary h x n schedule with its per-year and total costs."""

    x: np.ndarray            # (h, n) of 0/1
    annual_cost: np.ndarray  # (h,)
    total_cost: float


def kappa(state: int, K: int = 5) -> float:
    """Linear 0-1 performance score of a condition state: (K - s)/(K - 1).

    State 1 (pristine) maps to 1.0 and state K (failed) to 0.0; the map is
    affine and strictly decreasing for any K >= 2.
    """
    if K < 2:
        raise ValidationError(f"K >= 2 required, got {K}")
    if not 1 <= state <= K:
        raise ValidationError(f"condition state {state} outside 1..{K}")
    return (K - state) / (K - 1)


def kappa_vector(K: int) -> np.ndarray:
    """Scores of all states 1..K as an array; see ``kappa``."""
    if K < 2:
        raise ValidationError(f"K >= 2 required, got {K}")
    return (K - np.arange(1, K + 1, dtype=float)) / (K - 1)


def expected_score(probs: np.ndarray) -> float:
    """Expected kappa score of a condition distribution."""
    probs = np.asarray(probs, dtype=float)
    return float(probs @ kappa_vector(probs.shape[0]))


def _as_indices(network: NetworkSpec, selected) -> np.ndarray:
    """Normalize a subset given as ids and/or integer indices to indices."""
    idx = []
    for item in selected:
        if isinstance(item, str):
            idx.append(network.index_of(item))
        else:
            i = int(item)
            if not 0 <= i < network.n:
                raise ValidationError(f"asset index {i} outside 0..{network.n - 1}")
            idx.append(i)
    return np.asarray(sorted(set(idx)), dtype=int)


def action_cost(network: NetworkSpec, year: int, selected) -> float:
    """Cost of treating ``selected`` assets (ids or indices) in ``year``."""
    idx = _as_indices(network, selected)
    if idx.size == 0:
        return 0.0
    return float(network.year_costs(year)[idx].sum())


def make_plan(network: NetworkSpec, x: np.ndarray) -> PlanMatrix:
    """Build a PlanMatrix from a binary h x n matrix, computing its costs."""
    x = np.asarray(x)
    h = network.horizon
    if x.shape != (h, network.n):
        raise ValidationError(f"plan shape {x.shape} does not match (h={h}, n={network.n})")
    if not np.all((x == 0) | (x == 1)):
        raise ValidationError("plan entries must be 0 or 1")
    x = _freeze(x.astype(np.int8))
    annual = np.array([action_cost(network, t, np.flatnonzero(x[t])) for t in range(h)])
    return PlanMatrix(x=x, annual_cost=_freeze(annual), total_cost=float(annual.sum()))


# ---------------------------------------------------------------------------
# dataset files


def _parse_asset(entry: dict, K: int, horizon: int, pos: int) -> AssetSpec:
    where = f"asset #{pos}"
    try:
        asset_id = str(entry["id"])
        weight = float(entry["weight"])
        unit_cost = np.asarray(entry["unit_cost"], dtype=float)
        det = entry["deterioration"]
        act = entry["maintenance"]
        initial = entry["initial"]
    except KeyError as exc:
        raise ValidationError(f"{where}: missing field {exc.args[0]!r}") from None
    where = f"asset {asset_id!r}"
    if weight <= 0:
        raise ValidationError(f"{where}: weight must be > 0, got {weight}")
    if unit_cost.shape != (horizon,):
        raise ValidationError(
            f"{where}: unit_cost needs {horizon} entries, got {unit_cost.shape}")
    if np.any(unit_cost <= 0):
        raise ValidationError(f"{where}: unit costs must be > 0")
    return AssetSpec(
        id=asset_id,
        weight=weight,
        unit_cost=_freeze(unit_cost),
        deterioration=validate_transition_matrix(np.asarray(det, dtype=float), K,
                                                 where=f"{where} deterioration"),
        maintenance=validate_transition_matrix(np.asarray(act, dtype=float), K,
                                               where=f"{where} maintenance"),
        initial=validate_distribution(np.asarray(initial, dtype=float), K,
                                      where=f"{where} initial"),
    )


def load_network(path: str | os.PathLike) -> NetworkSpec:
    """Load and validate a network dataset file."""
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    try:
        K = int(doc["K"])
        horizon = int(doc["horizon"])
        raw_assets = doc["assets"]
    except KeyError as exc:
        raise ValidationError(f"{path}: missing top-level field {exc.args[0]!r}") from None
    if not raw_assets:
        raise ValidationError("n >= 1 required: asset list is empty")
    assets = tuple(_parse_asset(entry, K, horizon, pos)
                   for pos, entry in enumerate(raw_assets))
    return NetworkSpec(assets=assets, K=K)


def save_network(path: str | os.PathLike, network: NetworkSpec) -> None:
    """Serialize a NetworkSpec back to the dataset JSON format."""
    doc = {
        "K": network.K,
        "horizon": network.horizon,
        "assets": [
            {
                "id": a.id,
                "weight": a.weight,
                "unit_cost": a.unit_cost.tolist(),
                "deterioration": a.deterioration.tolist(),
                "maintenance": a.maintenance.tolist(),
                "initial": a.initial.tolist(),
            }
            for a in network.assets
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


def load_budget(path: str | os.PathLike) -> BudgetSpec:
    """Load and validate a budget file."""
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    try:
        return BudgetSpec(
            horizon=int(doc["horizon"]),
            lower=np.asarray(doc["lower"], dtype=float),
            upper=np.asarray(doc["upper"], dtype=float),
            total=float(doc["total"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing field {exc.args[0]!r}") from None


def save_budget(path: str | os.PathLike, budget: BudgetSpec) -> None:
    doc = {
        "horizon": budget.horizon,
        "lower": budget.lower.tolist(),
        "upper": budget.upper.tolist(),
        "total": budget.total,
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


# ---------------------------------------------------------------------------
# plan files (years as rows, one 0/1 column per asset, plus annual cost)


def write_plan_csv(path: str | os.PathLike, network: NetworkSpec, plan: PlanMatrix) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(list(network.ids) + ["annual_cost"])
    for t in range(plan.x.shape[0]):
        writer.writerow([int(v) for v in plan.x[t]] + [repr(float(plan.annual_cost[t]))])
    atomic_write_text(path, buf.getvalue())


def read_plan_csv(path: str | os.PathLike, network: NetworkSpec) -> PlanMatrix:
    """Parse a plan file; costs are recomputed from the network (and must
    agree with the stored annual_cost column within CURRENCY_TOL)."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ValidationError(f"{path}: empty plan file")
    header = rows[0]
    if header[-1] != "annual_cost" or tuple(header[:-1]) != network.ids:
        raise ValidationError(f"{path}: header does not match network asset ids")
    body = rows[1:]
    if len(body) != network.horizon:
        raise ValidationError(
            f"{path}: expected {network.horizon} year rows, found {len(body)}")
    x = np.array([[int(cell) for cell in row[:-1]] for row in body], dtype=np.int8)
    plan = make_plan(network, x)
    stored = np.array([float(row[-1]) for row in body])
    if np.any(np.abs(stored - plan.annual_cost) > max(CURRENCY_TOL, 1e-9 * plan.total_cost)):
        raise ValidationError(f"{path}: stored annual costs disagree with the network's arithmetic")
    return plan


def plan_is_feasible(network: NetworkSpec, budget: BudgetSpec, plan: PlanMatrix,
                     tol: float = CURRENCY_TOL) -> bool:
    """True iff the plan satisfies every annual window and the lifecycle cap."""
    lo_ok = np.all(plan.annual_cost >= budget.lower - tol)
    hi_ok = np.all(plan.annual_cost <= budget.upper + tol)
    return bool(lo_ok and hi_ok and plan.total_cost <= budget.total + tol)
