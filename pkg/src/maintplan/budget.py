"""Mapping of the budget actor's scalar action to a feasible annual budget.

A fraction in [-1, 1] is mapped affinely onto the year's spending window
[b_l, b_u] and then clamped against the remaining-funds cap

    cap_t = total - spent - sum of future years' lower bounds,

which guarantees every later year can still afford its minimum.  As long
as each year's executed cost stays at or below the mapped budget, the cap
stays above the next year's lower bound by induction, so a whole rollout
can never strand itself.

``mode="literal-max"`` keeps the alternative semantics in which the
mapping takes the maximum of the affine value and the cap (forcing
surplus funds to be spent); it can exceed the annual upper bound and is
provided for side-by-side study only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import CURRENCY_TOL, BudgetSpec


class InfeasibleStateError(RuntimeError):
    """Remaining funds cannot cover this year's minimum spend."""


@dataclass(frozen=True)
class BudgetDecision:
    fraction: float        # the actor's raw action in [-1, 1]
    annual_budget: float   # mapped, feasibility-preserving budget b_t
    remaining_after: float # lifecycle funds left if exactly b_t is spent


def map_budget(fraction: float, year: int, spent: float, budget: BudgetSpec,
               mode: str = "clamp") -> BudgetDecision:
    """Map ``fraction`` in [-1, 1] to this year's admissible budget.

    Raises InfeasibleStateError when the remaining-funds cap falls below
    the year's lower bound (the caller overspent earlier years).
    """
    if not -1.0 - 1e-9 <= fraction <= 1.0 + 1e-9:
        raise ValueError(f"fraction {fraction} outside [-1, 1]")
    fraction = min(1.0, max(-1.0, float(fraction)))
    if not 0 <= year < budget.horizon:
        raise ValueError(f"year {year} outside horizon 0..{budget.horizon - 1}")

    lo = float(budget.lower[year])
    hi = float(budget.upper[year])
    raw = lo + (fraction + 1.0) * (hi - lo) / 2.0
    cap = budget.total - spent - budget.future_minimum(year)

    if mode == "literal-max":
        annual = max(raw, cap)
    elif mode == "clamp":
        if cap < lo - CURRENCY_TOL:
            raise InfeasibleStateError(
                f"year {year + 1}: remaining funds cap {cap:.2f} cannot cover "
                f"the annual lower bound {lo:.2f}")
        annual = min(max(raw, lo), min(hi, cap))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    return BudgetDecision(fraction=fraction, annual_budget=annual,
                          remaining_after=budget.total - spent - annual)
