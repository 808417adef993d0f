"""Deterministic fractional knapsack by greedy density order.

Given items with nonnegative rewards and positive costs and a budget D, the
greedy order (reward/cost descending) yields the exact optimum of the LP
relaxation ``max r.x  s.t.  c.x <= D, 0 <= x <= 1``: fill items whole until
the first item whose inclusion reaches the budget, take that pivot item
fractionally.  The integer prefix ending at the pivot overruns the budget by
at most one item's cost while collecting at least the LP value.

All arithmetic is exact (``fractions.Fraction``), and ties in the density
order are broken deterministically: lower cost first, then lower item id.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from typing import Optional, Sequence

from .core import Numeric, as_fraction
from .errors import InvalidInputError


@dataclass(frozen=True)
class KnapItem:
    id: int
    reward: Fraction
    cost: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "reward", as_fraction(self.reward, "reward"))
        object.__setattr__(self, "cost", as_fraction(self.cost, "cost"))
        if self.cost <= 0:
            raise InvalidInputError(f"knapsack item cost must be positive, got {self.cost}")
        if self.reward < 0:
            raise InvalidInputError(f"knapsack item reward must be nonnegative, got {self.reward}")


@dataclass(frozen=True)
class KnapResult:
    """Outcome of the greedy fractional solve at one budget.

    order       item ids in greedy density order
    pivot       position (0-based, within ``order``) of the budget-crossing
                item, or None when the whole item set costs less than D
    psi         fractional take of the pivot item (0 when D = 0)
    lp_value    exact LP optimum at budget D
    derivative  marginal LP value per unit budget at D (pivot density)
    prefix      integer solution: ids of ``order[: pivot + 1]`` (all ids
                when there is no pivot)
    """

    order: tuple[int, ...]
    pivot: Optional[int]
    psi: Optional[Fraction]
    lp_value: Fraction
    derivative: Fraction
    prefix: tuple[int, ...]


def greedy_order(items: Sequence[KnapItem]) -> list[KnapItem]:
    """Sort by reward/cost descending; ties: lower cost, then lower id."""
    return sorted(items, key=lambda it: (-(it.reward / it.cost), it.cost, it.id))


def solve_fractional(items: Sequence[KnapItem], budget: Numeric) -> KnapResult:
    """Exact greedy solve of the fractional knapsack at one budget."""
    budget = as_fraction(budget, "budget")
    if budget < 0:
        raise InvalidInputError(f"budget must be nonnegative, got {budget}")
    if not items:
        return KnapResult((), None, None, Fraction(0), Fraction(0), ())

    ordered = greedy_order(items)
    running_cost = Fraction(0)
    running_reward = Fraction(0)
    for pos, it in enumerate(ordered):
        if running_cost + it.cost >= budget:
            psi = (budget - running_cost) / it.cost
            return KnapResult(
                order=tuple(x.id for x in ordered),
                pivot=pos,
                psi=psi,
                lp_value=running_reward + psi * it.reward,
                derivative=it.reward / it.cost,
                prefix=tuple(x.id for x in ordered[: pos + 1]),
            )
        running_cost += it.cost
        running_reward += it.reward
    # Budget exceeds the total cost: everything fits with slack.
    return KnapResult(
        order=tuple(x.id for x in ordered),
        pivot=None,
        psi=None,
        lp_value=running_reward,
        derivative=Fraction(0),
        prefix=tuple(x.id for x in ordered),
    )


def lp_value_at(items: Sequence[KnapItem], budgets: Sequence[Numeric]) -> list[Fraction]:
    """LP optimum at each budget, reusing a single greedy sort."""
    budgets = [as_fraction(b, "budget") for b in budgets]
    if any(b < 0 for b in budgets):
        raise InvalidInputError("budgets must be nonnegative")
    if not items:
        return [Fraction(0) for _ in budgets]

    ordered = greedy_order(items)
    cum_cost = list(accumulate(it.cost for it in ordered))
    cum_reward = list(accumulate(it.reward for it in ordered))

    values = []
    for budget in budgets:
        t = bisect_left(cum_cost, budget)
        if t == len(ordered):
            values.append(cum_reward[-1])
            continue
        prev_cost = cum_cost[t - 1] if t else Fraction(0)
        prev_reward = cum_reward[t - 1] if t else Fraction(0)
        it = ordered[t]
        psi = (budget - prev_cost) / it.cost
        values.append(prev_reward + psi * it.reward)
    return values
