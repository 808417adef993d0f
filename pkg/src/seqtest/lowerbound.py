"""Per-realization information-theoretic lower bound on probing cost.

For a fixed outcome vector with class j, any sound policy must end having
observed working weight at least ``beta1(j)`` and failed weight at least
``beta0(j)``.  Minimizing probing cost subject to those two constraints is
an integer program; since every item contributes to exactly one of the two
constraints under a fixed outcome (it either worked or failed), the program
splits exactly into two independent min-cost covering knapsacks, each solved
by dynamic programming over reward values.

Averaging the bound over realizations lower-bounds the expected cost of
every policy, adaptive or not.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Realization, SscInstance, as_fraction, check_realization, classify
from .errors import InvalidInputError

_INF = 1 << 62


@dataclass(frozen=True)
class CoverInstance:
    """Items with costs and integer rewards, plus a reward target to reach."""

    costs: tuple[Fraction, ...]
    rewards: tuple[int, ...]
    target: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "costs", tuple(as_fraction(c, "cost") for c in self.costs))
        object.__setattr__(self, "rewards", tuple(int(r) for r in self.rewards))
        if len(self.costs) != len(self.rewards):
            raise InvalidInputError("costs and rewards must align")
        if any(c <= 0 for c in self.costs):
            raise InvalidInputError("cover item costs must be positive")
        if any(r < 0 for r in self.rewards):
            raise InvalidInputError("cover item rewards must be nonnegative")
        if self.target < 0:
            raise InvalidInputError("cover target must be nonnegative")


@dataclass(frozen=True)
class CoverResult:
    feasible: bool
    cost: Optional[Fraction]
    chosen: tuple[int, ...]


def min_cost_cover(cover: CoverInstance) -> CoverResult:
    """Exact minimum-cost subset reaching the reward target, with the subset.

    Row-per-item dynamic programming over clamped reward values; the
    backtrack prefers skipping an item on ties, making the witness set
    deterministic.
    """
    target = cover.target
    if target == 0:
        return CoverResult(True, Fraction(0), ())
    if sum(cover.rewards) < target:
        return CoverResult(False, None, ())

    n = len(cover.costs)
    rows: list[list[Optional[Fraction]]] = [[Fraction(0)] + [None] * target]
    for i in range(n):
        prev = rows[-1]
        cost_i, reward_i = cover.costs[i], cover.rewards[i]
        row = list(prev)
        if reward_i > 0:
            for v in range(1, target + 1):
                src = prev[max(0, v - reward_i)]
                if src is not None and (row[v] is None or src + cost_i < row[v]):
                    row[v] = src + cost_i
        rows.append(row)

    chosen = []
    v = target
    for i in range(n, 0, -1):
        if rows[i][v] == rows[i - 1][v]:
            continue
        chosen.append(i - 1)
        v = max(0, v - cover.rewards[i - 1])
    chosen.reverse()
    return CoverResult(True, rows[n][target], tuple(chosen))


def _cover_cost(costs: Sequence[Fraction], rewards: Sequence[int], target: int) -> Fraction:
    """Cost-only covering DP; vectorized when all costs are integral."""
    if target <= 0:
        return Fraction(0)
    pairs = [(c, r) for c, r in zip(costs, rewards) if r > 0]
    if sum(r for _, r in pairs) < target:
        raise InvalidInputError("cover target exceeds the total available reward")
    if all(c.denominator == 1 for c, _ in pairs):
        dp = np.full(target + 1, _INF, dtype=np.int64)
        dp[0] = 0
        for cost, reward in pairs:
            keep = max(0, target + 1 - reward)
            shifted = np.concatenate((np.zeros(target + 1 - keep, dtype=np.int64), dp[:keep]))
            np.minimum(dp, shifted + int(cost), out=dp)
        return Fraction(int(dp[target]))
    best: list[Optional[Fraction]] = [Fraction(0)] + [None] * target
    for cost, reward in pairs:
        for v in range(target, 0, -1):
            src = best[max(0, v - reward)]
            if src is not None and (best[v] is None or src + cost < best[v]):
                best[v] = src + cost
    return best[target]


def realization_lb(instance: SscInstance, realization: Realization) -> Fraction:
    """Minimum cost any policy could pay to certify this realization's class."""
    bits = check_realization(realization, instance.size)
    j = classify(instance, bits)
    part = instance.classes
    working = [(it.cost, it.weight) for it, b in zip(instance.items, bits) if b and it.weight > 0]
    failed = [
        (it.cost, it.weight) for it, b in zip(instance.items, bits) if not b and it.weight > 0
    ]
    lb = _cover_cost([c for c, _ in working], [w for _, w in working], part.beta1(j))
    lb += _cover_cost([c for c, _ in failed], [w for _, w in failed], part.beta0(j))
    return lb
