"""Non-adaptive selection for the stochastic covering knapsack.

Items have deterministic costs and Bernoulli rewards (a value that realizes
with some probability, else 0).  Given a budget B, the selector returns a
fixed subset S whose cost is at most ``(C + 1) * B``; with a multiplier C
above ``1 + 2/epsilon`` (theory mode) the realized reward of S also beats
that of any budget-B policy except with probability ``2 * epsilon``.  The
fast practical multiplier keeps the cost bound but trades the reward
guarantee for empirical performance.

The selection works on a ladder of power-of-two truncation scales: at scale
``tau`` the deterministic surrogate reward of an item is
``prob * min(value / tau, 1)``.  For each scale, the greedy fractional
knapsack is solved at budget ``C * B``; a scale is *rich* while the marginal
reward density at that budget still exceeds ``epsilon / B``.  The returned
subset is the greedy integer prefix at the *critical* scale: the smallest
non-rich scale.

When ``C * epsilon >= 1`` a non-rich scale provably exists on the ladder.
For smaller multipliers (the fast "practical" configuration) every ladder
scale can be rich; the ladder would have to be extended upward, but beyond
the largest value all truncations order items identically, so the selection
at any extended scale equals the selection at the last ladder scale.  The
implementation therefore falls back to the last scale in that case.

Scale scans reuse two precomputed orders (scale-free density order for
unsaturated items, probability-density order for saturated ones), so a call
costs two sorts plus one linear merge per scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import Numeric, as_fraction
from .errors import InvalidInputError, ParameterError

PRACTICAL_MULTIPLIER = Fraction(2)


@dataclass(frozen=True)
class BernoulliReward:
    """One candidate item: probing cost plus a Bernoulli reward description."""

    item: int
    value: int
    prob: Fraction
    cost: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "prob", as_fraction(self.prob, "probability"))
        object.__setattr__(self, "cost", as_fraction(self.cost, "cost"))
        if self.value < 0 or not isinstance(self.value, int):
            raise InvalidInputError(f"reward value must be a nonnegative integer, got {self.value!r}")
        if not 0 <= self.prob <= 1:
            raise InvalidInputError(f"reward probability must lie in [0, 1], got {self.prob}")
        if self.cost <= 0:
            raise InvalidInputError(f"cost must be positive, got {self.cost}")


def truncated_reward(entry: BernoulliReward, scale: int) -> Fraction:
    """Expected reward after capping the realized value at ``scale``, rescaled to [0, 1]."""
    return entry.prob * min(Fraction(entry.value, scale), Fraction(1))


def scale_ladder(total_value: int) -> tuple[int, ...]:
    """Powers of two from 1 up to at least twice the total reward value."""
    if total_value <= 0:
        return (1,)
    return tuple(1 << level for level in range(total_value.bit_length() + 1))


@dataclass(frozen=True)
class ScaleReport:
    """Per-scale diagnostics: surrogate rewards, marginal density, richness."""

    scale: int
    rewards: tuple[Fraction, ...]  # aligned with the entries passed in
    derivative: Fraction
    rich: bool
    prefix: tuple[int, ...]  # greedy integer solution at this scale, in greedy order


def _validate_params(budget: Fraction, epsilon: Fraction, multiplier: Fraction) -> None:
    if budget <= 0:
        raise ParameterError(f"budget must be positive, got {budget}")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if multiplier <= 1:
        raise ParameterError(f"budget multiplier must exceed 1, got {multiplier}")


def scale_table(
    entries: Sequence[BernoulliReward],
    budget: Numeric,
    epsilon: Numeric,
    multiplier: Numeric,
    stats: Optional[dict] = None,
) -> list[ScaleReport]:
    """One report per ladder scale for the eligible (cost <= budget) items."""
    budget = as_fraction(budget, "budget")
    epsilon = as_fraction(epsilon, "epsilon")
    multiplier = as_fraction(multiplier, "multiplier")
    _validate_params(budget, epsilon, multiplier)

    eligible = [e for e in entries if e.cost <= budget]
    ladder = scale_ladder(sum(e.value for e in entries))
    spend = multiplier * budget
    threshold = epsilon / budget

    # Scale-free orders: unsaturated items keep their value/cost density order
    # at every scale, saturated items their probability/cost order.
    linear = sorted(eligible, key=lambda e: (-(e.prob * e.value) / e.cost, e.cost, e.item))
    saturated = sorted(eligible, key=lambda e: (-e.prob / e.cost, e.cost, e.item))
    if stats is not None:
        stats["sorts"] = stats.get("sorts", 0) + 2

    reports = []
    for scale in ladder:
        derivative, prefix, visits = _scan_scale(linear, saturated, scale, spend)
        if stats is not None:
            stats["item_visits"] = stats.get("item_visits", 0) + visits
            stats["scale_scans"] = stats.get("scale_scans", 0) + 1
        rewards = tuple(truncated_reward(e, scale) for e in entries)
        reports.append(
            ScaleReport(
                scale=scale,
                rewards=rewards,
                derivative=derivative,
                rich=derivative > threshold,
                prefix=prefix,
            )
        )
    return reports


def _scan_scale(
    linear: Sequence[BernoulliReward],
    saturated: Sequence[BernoulliReward],
    scale: int,
    spend: Fraction,
) -> tuple[Fraction, tuple[int, ...], int]:
    """Merge the two orders at one scale and walk the greedy prefix.

    Returns (marginal density at the spend budget, integer prefix, items
    visited).  The density is 0 when the eligible items cost less than the
    spend in total.
    """
    taken: list[int] = []
    running_cost = Fraction(0)
    a = b = 0
    visits = 0
    while True:
        # Advance past items that belong to the other stream at this scale.
        while a < len(linear) and linear[a].value > scale:
            a += 1
        while b < len(saturated) and saturated[b].value <= scale:
            b += 1
        key_a = key_b = None
        if a < len(linear):
            e = linear[a]
            key_a = ((e.prob * e.value) / (scale * e.cost), e.cost, e.item)
        if b < len(saturated):
            e = saturated[b]
            key_b = (e.prob / e.cost, e.cost, e.item)
        if key_a is None and key_b is None:
            return Fraction(0), tuple(taken), visits
        # Higher density wins; ties broken by lower cost, then lower id.
        if key_b is None or (
            key_a is not None and (-key_a[0], key_a[1], key_a[2]) < (-key_b[0], key_b[1], key_b[2])
        ):
            entry, ratio = linear[a], key_a[0]
            a += 1
        else:
            entry, ratio = saturated[b], key_b[0]
            b += 1
        visits += 1
        taken.append(entry.item)
        running_cost += entry.cost
        if running_cost >= spend:
            return ratio, tuple(taken), visits


def critical_report(reports: Sequence[ScaleReport]) -> ScaleReport:
    """The report at the smallest non-rich scale, else at the last scale.

    Beyond the largest ladder scale every item is unsaturated, so the greedy
    prefix no longer changes with the scale; falling back to the last report
    returns exactly the subset an extended ladder would.
    """
    for rep in reports:
        if not rep.rich:
            return rep
    return reports[-1]


def stoch_knap(
    entries: Sequence[BernoulliReward],
    budget: Numeric,
    epsilon: Numeric,
    multiplier: Numeric,
    stats: Optional[dict] = None,
) -> tuple[int, ...]:
    """Select a fixed subset whose reward dominates any budget-limited policy.

    Returns item ids in greedy order at the critical scale.  The selection
    costs at most ``(multiplier + 1) * budget`` and is empty exactly when no
    item costs at most ``budget``.
    """
    reports = scale_table(entries, budget, epsilon, multiplier, stats=stats)
    return critical_report(reports).prefix


def theory_multiplier(epsilon: Numeric) -> Fraction:
    """Smallest budget multiplier with a proven failure bound of ``epsilon``.

    Solves ``exp(-(mu - ln mu - 1)) <= epsilon`` for the smallest
    ``mu = (C - 1) * epsilon / 2`` by bisection and returns the matching C.
    """
    epsilon = as_fraction(epsilon, "epsilon")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    target = math.log(1 / float(epsilon))

    def gap(mu: float) -> float:
        return mu - math.log(mu) - 1 - target

    lo, hi = 1.0, 2.0
    while gap(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 1 + 2 * Fraction(hi) / epsilon


@dataclass(frozen=True)
class PolicyParams:
    """Knobs shared by the list builders.

    ``mode`` picks the default budget multiplier: "practical" uses 2 (small
    constants work well empirically), "theory" uses the smallest multiplier
    with a proven per-call failure bound.  An explicit ``multiplier``
    overrides the mode default; in theory mode it must still satisfy the
    proof's requirement ``C > 1 + 2 / epsilon``.
    """

    epsilon: Fraction = Fraction(3, 20)
    mode: str = "practical"
    multiplier: Optional[Fraction] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon, "epsilon"))
        if self.multiplier is not None:
            object.__setattr__(self, "multiplier", as_fraction(self.multiplier, "multiplier"))
        if not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.mode not in ("practical", "theory"):
            raise ParameterError(f"mode must be 'practical' or 'theory', got {self.mode!r}")

    def multiplier_for(self, epsilon: Fraction) -> Fraction:
        """Budget multiplier to use with a (possibly subdivided) epsilon."""
        if self.multiplier is not None:
            if self.mode == "theory" and self.multiplier <= 1 + 2 / epsilon:
                raise ParameterError(
                    f"theory mode needs multiplier > 1 + 2/epsilon = {1 + 2 / epsilon}, "
                    f"got {self.multiplier}"
                )
            return self.multiplier
        if self.mode == "theory":
            return theory_multiplier(epsilon)
        return PRACTICAL_MULTIPLIER

    def describe(self, epsilon: Optional[Fraction] = None) -> dict:
        eps = self.epsilon if epsilon is None else epsilon
        return {
            "epsilon": float(eps),
            "multiplier": float(self.multiplier_for(eps)),
            "mode": self.mode,
        }
