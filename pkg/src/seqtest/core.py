"""Instance model for stochastic score classification.

An instance is a set of independently testable items (cost, success
probability, integer weight) together with a strictly increasing list of
cutoffs that partitions the achievable total weight into classes.  This
module holds the data types, the class-evaluation function, the sound
early-stopping rule, and the reduction that removes negative weights.

Conventions used throughout the package:

* weights, scores and cutoffs are exact integers;
* costs and probabilities are ``fractions.Fraction`` (floats are converted
  at their exact binary value), so no classification decision ever depends
  on floating-point rounding;
* class indices are 1-based, matching the usual "class 1 .. class B"
  phrasing of the problem;
* item indices are 0-based.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

from .errors import InvalidInputError, InvalidInstanceError

Numeric = Union[int, float, str, Fraction]


def as_fraction(value: Numeric, what: str = "value") -> Fraction:
    """Convert ``value`` to an exact Fraction.

    Floats are taken at their exact binary value; strings may use the
    ``"3/20"`` form.
    """
    try:
        if isinstance(value, bool):
            raise TypeError("booleans are not numbers here")
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"cannot interpret {value!r} as a rational {what}") from exc


@dataclass(frozen=True)
class Item:
    """One testable component: probing cost, success probability, weight."""

    cost: Fraction
    prob: Fraction
    weight: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "cost", as_fraction(self.cost, "cost"))
        object.__setattr__(self, "prob", as_fraction(self.prob, "probability"))
        if not isinstance(self.weight, int):
            raise InvalidInstanceError(f"weight must be an integer, got {self.weight!r}")
        if self.cost <= 0:
            raise InvalidInstanceError(f"item cost must be positive, got {self.cost}")
        if not 0 <= self.prob <= 1:
            raise InvalidInstanceError(f"probability must lie in [0, 1], got {self.prob}")


@dataclass(frozen=True)
class ClassPartition:
    """Strictly increasing cutoffs partitioning scores {0, ..., W} into classes.

    ``alphas`` is stored normalized: ``alphas[0] == 0`` and
    ``alphas[-1] == total_weight + 1``, so class ``j`` (1-based) covers the
    half-open score interval ``[alphas[j-1], alphas[j])``.
    """

    alphas: tuple[int, ...]
    total_weight: int

    @staticmethod
    def build(alphas: Sequence[int], total_weight: int) -> "ClassPartition":
        """Validate and normalize raw cutoffs against a total weight.

        Accepts either the ``alphas[-1] == W`` or ``alphas[-1] == W + 1``
        convention for the top cutoff (the intervals are half-open, so only
        the latter makes them cover the score W; the former is silently
        bumped).  The bottom cutoff may be any value <= 0 and is clamped
        to 0.
        """
        alphas = tuple(int(a) for a in alphas)
        if len(alphas) < 2:
            raise InvalidInstanceError("need at least two cutoffs (one class)")
        if any(a >= b for a, b in zip(alphas, alphas[1:])):
            raise InvalidInstanceError(f"cutoffs must be strictly increasing, got {alphas}")
        if alphas[0] > 0:
            raise InvalidInstanceError(
                f"lowest cutoff {alphas[0]} leaves score 0 unclassified"
            )
        if alphas[-1] < total_weight:
            raise InvalidInstanceError(
                f"highest cutoff {alphas[-1]} leaves score {total_weight} unclassified"
            )
        interior = alphas[1:-1]
        if any(not 1 <= a <= total_weight for a in interior):
            raise InvalidInstanceError(
                f"interior cutoffs must lie in [1, {total_weight}], got {interior}"
            )
        normalized = (0,) + interior + (total_weight + 1,)
        return ClassPartition(normalized, total_weight)

    @property
    def num_classes(self) -> int:
        return len(self.alphas) - 1

    def beta1(self, j: int) -> int:
        """Working-weight threshold certifying class ``j`` from below."""
        return self.alphas[j - 1]

    def beta0(self, j: int) -> int:
        """Failed-weight threshold certifying class ``j`` from above."""
        return self.total_weight - self.alphas[j] + 1

    def class_of_score(self, score: int) -> int:
        """1-based class whose interval contains ``score``."""
        if not 0 <= score <= self.total_weight:
            raise InvalidInputError(
                f"score {score} outside achievable range [0, {self.total_weight}]"
            )
        return bisect_right(self.alphas, score, 1, len(self.alphas) - 1)


@dataclass(frozen=True)
class SscInstance:
    """A score-classification instance with nonnegative weights.

    Construct via :func:`reduce_negative_weights` (or :func:`make_instance`)
    when raw weights may be negative.  ``setup_cost`` is the per-batch setup
    charge; 0 means the plain per-item cost structure.
    """

    items: tuple[Item, ...]
    classes: ClassPartition
    setup_cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "setup_cost", as_fraction(self.setup_cost, "setup cost"))
        if not self.items:
            raise InvalidInstanceError("instance needs at least one item")
        if any(it.weight < 0 for it in self.items):
            raise InvalidInstanceError(
                "instance weights must be nonnegative; apply reduce_negative_weights"
            )
        if self.setup_cost < 0:
            raise InvalidInstanceError("setup cost must be nonnegative")
        w = sum(it.weight for it in self.items)
        if w != self.classes.total_weight:
            raise InvalidInstanceError(
                f"partition built for total weight {self.classes.total_weight}, items sum to {w}"
            )

    @property
    def size(self) -> int:
        return len(self.items)

    @property
    def total_weight(self) -> int:
        return self.classes.total_weight

    @cached_property
    def cost_scale(self) -> Fraction:
        """Minimum item cost; internal budgets are expressed in this unit."""
        return min(it.cost for it in self.items)

    @cached_property
    def scaled_costs(self) -> tuple[Fraction, ...]:
        """Item costs divided by the minimum cost (so the cheapest item costs 1)."""
        scale = self.cost_scale
        return tuple(it.cost / scale for it in self.items)

    @property
    def costs(self) -> tuple[Fraction, ...]:
        return tuple(it.cost for it in self.items)

    @property
    def probs(self) -> tuple[Fraction, ...]:
        return tuple(it.prob for it in self.items)

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(it.weight for it in self.items)


# A realization is any 0/1 sequence with one outcome per item.
Realization = Sequence[int]


def check_realization(bits: Realization, size: int) -> tuple[int, ...]:
    bits = tuple(int(b) for b in bits)
    if len(bits) != size:
        raise InvalidInputError(f"realization has {len(bits)} bits, instance has {size} items")
    if any(b not in (0, 1) for b in bits):
        raise InvalidInputError("realization bits must be 0 or 1")
    return bits


@dataclass(frozen=True)
class ProbeState:
    """Knowledge after probing a set of items.

    ``working_weight`` is the total weight of probed items seen working and
    ``failed_weight`` the total weight of probed items seen failed; together
    they must account for the full weight of the probed set.
    """

    probed: frozenset[int]
    working_weight: int
    failed_weight: int

    def __post_init__(self) -> None:
        if self.working_weight < 0 or self.failed_weight < 0:
            raise InvalidInputError("probe-state weights must be nonnegative")


def reduce_negative_weights(
    items: Iterable[Item],
    alphas: Sequence[int],
    setup_cost: Numeric = 0,
) -> tuple[SscInstance, frozenset[int]]:
    """Build an equivalent all-nonnegative-weight instance.

    Every item with negative weight is replaced by its complement (weight
    negated, probability ``1 - p``); cutoffs shift up by the total absolute
    negative weight.  Returns the instance together with the set of flipped
    item indices: a realization of the original instance maps to the new one
    by flipping exactly those bits (see :func:`apply_flips`), and the class
    of every realization is unchanged by the mapping.
    """
    items = tuple(items)
    flipped = []
    shift = 0
    new_items = []
    for idx, it in enumerate(items):
        if it.weight < 0:
            flipped.append(idx)
            shift += -it.weight
            new_items.append(Item(cost=it.cost, prob=1 - it.prob, weight=-it.weight))
        else:
            new_items.append(it)
    new_alphas = [int(a) + shift for a in alphas]
    total = sum(it.weight for it in new_items)
    partition = ClassPartition.build(new_alphas, total)
    instance = SscInstance(tuple(new_items), partition, as_fraction(setup_cost, "setup cost"))
    return instance, frozenset(flipped)


def apply_flips(bits: Realization, flipped: frozenset[int]) -> tuple[int, ...]:
    """Map a realization of the original instance into the reduced one."""
    return tuple(1 - b if i in flipped else int(b) for i, b in enumerate(bits))


def classify(instance: SscInstance, realization: Realization) -> int:
    """1-based class of the full outcome vector."""
    bits = check_realization(realization, instance.size)
    score = sum(it.weight * b for it, b in zip(instance.items, bits))
    return instance.classes.class_of_score(score)


def stopping_check(instance: SscInstance, state: ProbeState) -> Optional[int]:
    """Class certified by a partial outcome, or None if testing must continue.

    A class ``j`` is certified exactly when the observed working weight meets
    its lower threshold and the observed failed weight meets its upper one.
    Implemented through the equivalent interval test: the least and greatest
    scores still possible must fall in the same class interval.
    """
    part = instance.classes
    total = part.total_weight
    probed_weight = sum(instance.items[i].weight for i in state.probed)
    if state.working_weight + state.failed_weight != probed_weight:
        raise InvalidInputError(
            "probe state inconsistent: working + failed weight must equal probed weight"
        )
    low = state.working_weight
    high = total - state.failed_weight
    j = part.class_of_score(low)
    return j if j == part.class_of_score(high) else None


class ScoreTracker:
    """Incremental probe bookkeeping with an O(log B) stopping test."""

    __slots__ = ("_partition", "_weights", "_low", "_high")

    def __init__(self, instance: SscInstance):
        self._partition = instance.classes
        self._weights = instance.weights
        self._low = 0
        self._high = instance.total_weight

    def probe(self, item: int, bit: int) -> None:
        w = self._weights[item]
        if bit:
            self._low += w
        else:
            self._high -= w

    def certified_class(self) -> Optional[int]:
        part = self._partition
        j = part.class_of_score(self._low)
        return j if j == part.class_of_score(self._high) else None


# ---------------------------------------------------------------------------
# JSON interface
#
# {"items": [{"cost": c, "prob": p, "weight": w}, ...],
#  "alphas": [...], "setup_cost": rho}
#
# Weights may be negative in files; the reduction is applied on load and the
# flipped index set is returned alongside the instance.
# ---------------------------------------------------------------------------

def instance_from_dict(data: dict) -> tuple[SscInstance, frozenset[int]]:
    try:
        raw_items = data["items"]
        alphas = data["alphas"]
    except KeyError as exc:
        raise InvalidInputError(f"instance JSON missing key {exc}") from exc
    items = []
    for entry in raw_items:
        items.append(
            Item(
                cost=as_fraction(entry["cost"], "cost"),
                prob=as_fraction(entry["prob"], "probability"),
                weight=int(entry.get("weight", 0)),
            )
        )
    setup = as_fraction(data.get("setup_cost", 0), "setup cost")
    return reduce_negative_weights(items, alphas, setup)


def instance_to_dict(instance: SscInstance) -> dict:
    return {
        "items": [
            {"cost": _num(it.cost), "prob": _num(it.prob), "weight": it.weight}
            for it in instance.items
        ],
        "alphas": list(instance.classes.alphas),
        "setup_cost": _num(instance.setup_cost),
    }


def _num(x: Fraction) -> Union[int, str]:
    """Serialize a Fraction losslessly: plain int when possible, else 'a/b'."""
    if x.denominator == 1:
        return int(x)
    return f"{x.numerator}/{x.denominator}"


def load_instance(path: str) -> tuple[SscInstance, frozenset[int]]:
    """Load an instance JSON file, reducing negative weights on the way in."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return instance_from_dict(data)
