"""Phase-doubling construction of the non-adaptive probing list.

The list is built in phases with per-phase probing budgets 1, 2, 4, ...
(in units of the cheapest test).  Each phase runs the covering-knapsack
selector twice on the not-yet-listed items: once rewarding failed weight,
once rewarding working weight, and appends both selections.  The second
selection is computed on the items left after the first, making the
no-duplicates guarantee explicit.  Within a selection, items stay in the
selector's greedy order.

The resulting order depends only on costs, probabilities and weights; the
class cutoffs enter solely through the stopping rule.  One list therefore
serves every cutoff partition over the same items.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

from .core import SscInstance
from .errors import InvalidInputError
from .stochknap import BernoulliReward, PolicyParams, stoch_knap


@dataclass(frozen=True)
class NonAdaptiveList:
    """A fixed probe order with phase boundaries.

    ``order`` never repeats an item; ``phase_marks[k]`` is the end offset
    (into ``order``) of phase k, so phase k covers
    ``order[phase_marks[k-1]:phase_marks[k]]``.  Phases may be empty.
    """

    order: tuple[int, ...]
    phase_marks: tuple[int, ...]
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise InvalidInputError("probe order repeats an item")
        marks = self.phase_marks
        if not marks or marks[-1] != len(self.order):
            raise InvalidInputError("last phase mark must equal the list length")
        if any(m2 < m1 for m1, m2 in zip(marks, marks[1:])) or marks[0] < 0:
            raise InvalidInputError("phase marks must be nondecreasing offsets")

    @property
    def num_phases(self) -> int:
        return len(self.phase_marks)

    def segments(self) -> Iterator[tuple[int, ...]]:
        """Items appended in each phase, in probe order."""
        start = 0
        for end in self.phase_marks:
            yield self.order[start:end]
            start = end

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "phase_marks": list(self.phase_marks),
            "params": dict(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(data: dict) -> "NonAdaptiveList":
        try:
            return NonAdaptiveList(
                order=tuple(int(i) for i in data["order"]),
                phase_marks=tuple(int(m) for m in data["phase_marks"]),
                params=dict(data.get("params", {})),
            )
        except KeyError as exc:
            raise InvalidInputError(f"list JSON missing key {exc}") from exc

    @staticmethod
    def from_json(text: str) -> "NonAdaptiveList":
        return NonAdaptiveList.from_dict(json.loads(text))


def build_list(instance: SscInstance, params: Optional[PolicyParams] = None) -> NonAdaptiveList:
    """Build the phase-doubled probe order for a score-classification instance."""
    params = params or PolicyParams()
    epsilon = params.epsilon
    multiplier = params.multiplier_for(epsilon)

    costs = instance.scaled_costs
    probs = instance.probs
    weights = instance.weights
    remaining = list(range(instance.size))

    order: list[int] = []
    marks: list[int] = []
    max_cost = max(costs)
    # Once the phase budget reaches the dearest item every phase lists at
    # least one item, and once the spend covers the residual total cost the
    # phase lists everything; this bounds the number of phases.
    phase_cap = math.ceil(math.log2(instance.size * float(max_cost))) + 2

    phase = 0
    while remaining:
        if phase > phase_cap:
            raise AssertionError("phase budget doubling failed to exhaust the items")
        budget = 1 << phase
        for success_bit in (0, 1):
            entries = [
                BernoulliReward(
                    item=i,
                    value=weights[i],
                    prob=probs[i] if success_bit else 1 - probs[i],
                    cost=costs[i],
                )
                for i in remaining
            ]
            chosen = stoch_knap(entries, budget, epsilon, multiplier)
            if chosen:
                order.extend(chosen)
                picked = set(chosen)
                remaining = [i for i in remaining if i not in picked]
        marks.append(len(order))
        phase += 1

    return NonAdaptiveList(tuple(order), tuple(marks), params.describe())


@dataclass(frozen=True)
class UniversalityReport:
    """Outcome of checking that lists agree across a cutoff family."""

    identical: bool
    num_instances: int
    distinct_lists: int


def universal_property_check(
    family: Sequence[SscInstance], params: Optional[PolicyParams] = None
) -> UniversalityReport:
    """Check that instances differing only in cutoffs share one probe list.

    The family must share items (costs, probabilities, weights); cutoffs may
    differ.  Returns a report rather than raising, so harnesses can record
    the result.
    """
    if not family:
        raise InvalidInputError("empty instance family")
    base = family[0].items
    for inst in family[1:]:
        if inst.items != base:
            raise InvalidInputError("family instances must share the same items")
    lists = {build_list(inst, params).order for inst in family}
    return UniversalityReport(
        identical=len(lists) == 1,
        num_instances=len(family),
        distinct_lists=len(lists),
    )
