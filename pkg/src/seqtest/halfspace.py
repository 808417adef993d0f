"""Explainable evaluation of an aggregate of weighted threshold tests.

A system is a set of ``d`` halfspaces over the same items (integer weights
of arbitrary sign, one threshold each) plus an aggregation function over
the ``d`` halfspace outcomes.  The evaluator must report the aggregate
value together with a *witness*: a probed set whose outcomes pin down the
value of some halfspace subset T, where the values on T alone force the
aggregate.  A policy may stop only once such a witness exists.

Mixed-sign weights are handled per halfspace by rewriting it over
complemented variables: negative-weight items contribute their absolute
weight when they fail.  This yields, for each halfspace, two nonnegative
reward streams (one certifying "satisfied", one "violated") with matching
certification thresholds, which plug directly into the covering-knapsack
selector used for list building.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Mapping, Optional, Sequence

from .core import Item, Realization, as_fraction, check_realization
from .errors import InvalidInputError, InvalidInstanceError
from .simulate import RunResult
from .ssclass import NonAdaptiveList
from .stochknap import BernoulliReward, PolicyParams, stoch_knap

MAX_TABLE_HALFSPACES = 20  # explicit truth tables beyond this blow up memory


@dataclass(frozen=True)
class Halfspace:
    """One weighted threshold test: satisfied when sum(w_i * x_i) >= threshold."""

    weights: tuple[int, ...]
    threshold: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        if not isinstance(self.threshold, int):
            raise InvalidInstanceError(f"threshold must be an integer, got {self.threshold!r}")

    def evaluate(self, bits: Sequence[int]) -> int:
        return int(sum(w * b for w, b in zip(self.weights, bits)) >= self.threshold)


@dataclass(frozen=True)
class Aggregator:
    """Boolean function over the d halfspace outcomes.

    Closed forms cover the common cases (all / any / at-least-p satisfied);
    anything else is an explicit truth table where bit k of the row index
    holds halfspace k's value.
    """

    kind: str
    threshold: int = 0
    table: tuple[int, ...] = ()

    @staticmethod
    def all_of() -> "Aggregator":
        return Aggregator("and")

    @staticmethod
    def any_of() -> "Aggregator":
        return Aggregator("or")

    @staticmethod
    def at_least(count: int) -> "Aggregator":
        return Aggregator("at_least", threshold=int(count))

    @staticmethod
    def from_table(bits: Sequence[int]) -> "Aggregator":
        table = tuple(int(b) for b in bits)
        if not table:
            raise InvalidInstanceError("truth table must not be empty")
        if any(b not in (0, 1) for b in table):
            raise InvalidInstanceError("truth table entries must be 0 or 1")
        d = len(table).bit_length() - 1
        if len(table) != 1 << d:
            raise InvalidInstanceError(f"truth table length {len(table)} is not a power of two")
        if d > MAX_TABLE_HALFSPACES:
            raise InvalidInstanceError(
                f"explicit truth tables are capped at {MAX_TABLE_HALFSPACES} halfspaces"
            )
        return Aggregator("table", table=table)

    def evaluate(self, values: Sequence[int]) -> int:
        if self.kind == "and":
            return int(all(values))
        if self.kind == "or":
            return int(any(values))
        if self.kind == "at_least":
            return int(sum(values) >= self.threshold)
        return self.table[_table_index(values)]

    def constant_given(self, fixed: Mapping[int, int], dim: int) -> Optional[int]:
        """The forced function value given some fixed halfspace outcomes.

        Returns 0 or 1 when every completion of the unfixed outcomes yields
        that value, else None.
        """
        if self.kind == "and":
            if any(v == 0 for v in fixed.values()):
                return 0
            return 1 if len(fixed) == dim else None
        if self.kind == "or":
            if any(v == 1 for v in fixed.values()):
                return 1
            return 0 if len(fixed) == dim else None
        if self.kind == "at_least":
            ones = sum(fixed.values())
            free = dim - len(fixed)
            if ones >= self.threshold:
                return 1
            if ones + free < self.threshold:
                return 0
            return None
        free_idx = [k for k in range(dim) if k not in fixed]
        seen = set()
        for combo in product((0, 1), repeat=len(free_idx)):
            values = [0] * dim
            for k, v in fixed.items():
                values[k] = v
            for k, v in zip(free_idx, combo):
                values[k] = v
            seen.add(self.table[_table_index(values)])
            if len(seen) == 2:
                return None
        return seen.pop()


def _table_index(values: Sequence[int]) -> int:
    idx = 0
    for k, v in enumerate(values):
        if v:
            idx |= 1 << k
    return idx


@dataclass(frozen=True)
class HalfspaceSystem:
    halfspaces: tuple[Halfspace, ...]
    aggregator: Aggregator

    def __post_init__(self) -> None:
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        if not self.halfspaces:
            raise InvalidInstanceError("system needs at least one halfspace")
        n = len(self.halfspaces[0].weights)
        if any(len(h.weights) != n for h in self.halfspaces):
            raise InvalidInstanceError("all halfspaces must weight the same items")
        if self.aggregator.kind == "table" and len(self.aggregator.table) != 1 << self.dim:
            raise InvalidInstanceError(
                f"truth table must have 2^{self.dim} rows for {self.dim} halfspaces"
            )

    @property
    def dim(self) -> int:
        return len(self.halfspaces)

    @property
    def num_items(self) -> int:
        return len(self.halfspaces[0].weights)

    def halfspace_values(self, bits: Sequence[int]) -> tuple[int, ...]:
        return tuple(h.evaluate(bits) for h in self.halfspaces)

    def evaluate(self, bits: Sequence[int]) -> int:
        return self.aggregator.evaluate(self.halfspace_values(bits))


@dataclass(frozen=True)
class ExdsheInstance:
    """Probe costs and probabilities paired with a halfspace system."""

    items: tuple[Item, ...]
    system: HalfspaceSystem
    setup_cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "setup_cost", as_fraction(self.setup_cost, "setup cost"))
        if not self.items:
            raise InvalidInstanceError("instance needs at least one item")
        if self.system.num_items != len(self.items):
            raise InvalidInstanceError(
                f"system weights {self.system.num_items} items, instance has {len(self.items)}"
            )
        if self.setup_cost < 0:
            raise InvalidInstanceError("setup cost must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.items)

    @cached_property
    def cost_scale(self) -> Fraction:
        return min(it.cost for it in self.items)

    @cached_property
    def scaled_costs(self) -> tuple[Fraction, ...]:
        scale = self.cost_scale
        return tuple(it.cost / scale for it in self.items)

    @property
    def costs(self) -> tuple[Fraction, ...]:
        return tuple(it.cost for it in self.items)

    @property
    def probs(self) -> tuple[Fraction, ...]:
        return tuple(it.prob for it in self.items)


@dataclass(frozen=True)
class ItemReward:
    """Symbolic Bernoulli reward: ``value`` realizes when the item's bit is ``active_when``."""

    item: int
    value: int
    active_when: int


def halfspace_rewards(
    system: HalfspaceSystem, k: int
) -> tuple[tuple[tuple[ItemReward, ...], tuple[ItemReward, ...]], tuple[int, int]]:
    """Reward streams and thresholds certifying halfspace ``k``.

    Returns ``((violated_rewards, satisfied_rewards), (beta0, beta1))``:
    halfspace k is violated exactly when the violated stream collects at
    least ``beta0``, and satisfied exactly when the satisfied stream
    collects at least ``beta1``.  Negative weights are absorbed by letting
    those items reward on their complementary outcome.
    """
    if not 0 <= k < system.dim:
        raise InvalidInputError(f"halfspace index {k} out of range [0, {system.dim})")
    hs = system.halfspaces[k]
    neg_total = sum(-w for w in hs.weights if w < 0)
    shifted_threshold = hs.threshold + neg_total
    shifted_total = sum(abs(w) for w in hs.weights)

    satisfied = []
    violated = []
    for i, w in enumerate(hs.weights):
        if w > 0:
            satisfied.append(ItemReward(i, w, active_when=1))
            violated.append(ItemReward(i, w, active_when=0))
        elif w < 0:
            satisfied.append(ItemReward(i, -w, active_when=0))
            violated.append(ItemReward(i, -w, active_when=1))
        else:
            satisfied.append(ItemReward(i, 0, active_when=1))
            violated.append(ItemReward(i, 0, active_when=0))
    beta1 = shifted_threshold
    beta0 = shifted_total - shifted_threshold + 1
    return (tuple(violated), tuple(satisfied)), (beta0, beta1)


class WitnessTracker:
    """Running lower/upper bounds on every halfspace during probing."""

    __slots__ = ("_system", "_low", "_high", "_thresholds")

    def __init__(self, system: HalfspaceSystem):
        self._system = system
        self._low = []
        self._high = []
        self._thresholds = []
        for hs in system.halfspaces:
            neg_total = sum(-w for w in hs.weights if w < 0)
            self._thresholds.append(hs.threshold + neg_total)
            self._low.append(0)
            self._high.append(sum(abs(w) for w in hs.weights))

    def probe(self, item: int, bit: int) -> None:
        for k, hs in enumerate(self._system.halfspaces):
            w = hs.weights[item]
            if w == 0:
                continue
            # Contribution of this outcome to the sign-shifted halfspace sum.
            gain = w if bit else 0
            if w < 0:
                gain = 0 if bit else -w
            self._low[k] += gain
            self._high[k] -= abs(w) - gain

    def determined(self) -> dict[int, int]:
        """Halfspace outcomes already forced by the probes so far."""
        forced = {}
        for k, threshold in enumerate(self._thresholds):
            if self._low[k] >= threshold:
                forced[k] = 1
            elif self._high[k] < threshold:
                forced[k] = 0
        return forced

    def forced_value(self) -> tuple[Optional[int], dict[int, int]]:
        forced = self.determined()
        value = self._system.aggregator.constant_given(forced, self._system.dim)
        return value, forced


@dataclass(frozen=True)
class Witness:
    """Probed outcomes plus the halfspace subset that pins the aggregate down."""

    probed: tuple[int, ...]
    values: tuple[int, ...]
    halfspaces: frozenset[int]
    f_value: int


def verify_witness(
    system: HalfspaceSystem,
    probed: Sequence[int],
    values: Sequence[int],
    halfspaces: Sequence[int],
) -> bool:
    """True iff the probed outcomes determine every listed halfspace and those
    halfspace values alone force the aggregate."""
    subset = set(int(k) for k in halfspaces)
    if any(not 0 <= k < system.dim for k in subset):
        raise InvalidInputError(f"halfspace subset {sorted(subset)} not within [0, {system.dim})")
    probed = tuple(int(i) for i in probed)
    values = tuple(int(v) for v in values)
    if len(probed) != len(values) or len(set(probed)) != len(probed):
        raise InvalidInputError("probed items and their values must align, without repeats")
    if any(not 0 <= i < system.num_items for i in probed):
        raise InvalidInputError("probed item index out of range")

    tracker = WitnessTracker(system)
    for i, v in zip(probed, values):
        tracker.probe(i, v)
    forced = tracker.determined()
    if any(k not in forced for k in subset):
        return False
    fixed = {k: forced[k] for k in subset}
    return system.aggregator.constant_given(fixed, system.dim) is not None


def build_list_exdshe(
    system: HalfspaceSystem,
    items: Sequence[Item],
    params: Optional[PolicyParams] = None,
) -> NonAdaptiveList:
    """Phase-doubled probe order covering all 2d certification rewards.

    Each phase cycles through the halfspaces, running the covering-knapsack
    selector on the still-unlisted items for the violated and the satisfied
    reward stream of each, with the per-call failure tolerance divided by
    the number of halfspaces.
    """
    instance = ExdsheInstance(tuple(items), system)
    params = params or PolicyParams()
    epsilon = params.epsilon / system.dim
    multiplier = params.multiplier_for(epsilon)

    costs = instance.scaled_costs
    probs = instance.probs
    reward_specs = [halfspace_rewards(system, k)[0] for k in range(system.dim)]

    remaining = list(range(instance.size))
    order: list[int] = []
    marks: list[int] = []
    phase_cap = math.ceil(math.log2(instance.size * float(max(costs)))) + 2

    phase = 0
    while remaining:
        if phase > phase_cap:
            raise AssertionError("phase budget doubling failed to exhaust the items")
        budget = 1 << phase
        for k in range(system.dim):
            for stream in reward_specs[k]:
                spec = {r.item: r for r in stream}
                entries = [
                    BernoulliReward(
                        item=i,
                        value=spec[i].value,
                        prob=probs[i] if spec[i].active_when else 1 - probs[i],
                        cost=costs[i],
                    )
                    for i in remaining
                ]
                chosen = stoch_knap(entries, budget, epsilon, multiplier)
                if chosen:
                    order.extend(chosen)
                    picked = set(chosen)
                    remaining = [i for i in remaining if i not in picked]
                if not remaining:
                    break
            if not remaining:
                break
        marks.append(len(order))
        phase += 1

    list_params = params.describe(epsilon)
    list_params["halfspaces"] = system.dim
    return NonAdaptiveList(tuple(order), tuple(marks), list_params)


def simulate_until_witness(
    instance: ExdsheInstance,
    plan: NonAdaptiveList,
    realization: Realization,
) -> RunResult:
    """Probe in list order until the observed outcomes form a witness."""
    system = instance.system
    bits = check_realization(realization, instance.size)
    tracker = WitnessTracker(system)
    probed: list[int] = []
    cost = Fraction(0)

    value, forced = tracker.forced_value()
    if value is None:
        for item in plan.order:
            tracker.probe(item, bits[item])
            probed.append(item)
            cost += instance.items[item].cost
            value, forced = tracker.forced_value()
            if value is not None:
                break
    if value is None:
        raise AssertionError("full probe order left the aggregate undetermined")
    witness = Witness(
        probed=tuple(probed),
        values=tuple(bits[i] for i in probed),
        halfspaces=frozenset(forced),
        f_value=value,
    )
    return RunResult(probes=tuple(probed), cost=cost, outcome=value, witness=witness)


# ---------------------------------------------------------------------------
# JSON interface
#
# {"items": [{"cost": c, "prob": p}, ...],
#  "halfspaces": [{"weights": [...], "alpha": a}, ...],
#  "aggregator": "AND" | "OR" | {"at_least": p} | {"table": [bits]},
#  "setup_cost": rho}
#
# Truth-table rows are indexed with halfspace k on bit k.
# ---------------------------------------------------------------------------

def aggregator_from_json(spec) -> Aggregator:
    if isinstance(spec, str):
        name = spec.strip().upper()
        if name == "AND":
            return Aggregator.all_of()
        if name == "OR":
            return Aggregator.any_of()
        raise InvalidInputError(f"unknown aggregator {spec!r}")
    if isinstance(spec, dict):
        if "at_least" in spec:
            return Aggregator.at_least(int(spec["at_least"]))
        if "table" in spec:
            return Aggregator.from_table(spec["table"])
    raise InvalidInputError(f"cannot parse aggregator from {spec!r}")


def aggregator_to_json(agg: Aggregator):
    if agg.kind == "and":
        return "AND"
    if agg.kind == "or":
        return "OR"
    if agg.kind == "at_least":
        return {"at_least": agg.threshold}
    return {"table": list(agg.table)}


def exdshe_instance_from_dict(data: dict) -> ExdsheInstance:
    try:
        raw_items = data["items"]
        raw_halfspaces = data["halfspaces"]
        raw_agg = data["aggregator"]
    except KeyError as exc:
        raise InvalidInputError(f"halfspace instance JSON missing key {exc}") from exc
    items = tuple(
        Item(cost=as_fraction(e["cost"], "cost"), prob=as_fraction(e["prob"], "probability"))
        for e in raw_items
    )
    halfspaces = tuple(
        Halfspace(weights=tuple(int(w) for w in h["weights"]), threshold=int(h["alpha"]))
        for h in raw_halfspaces
    )
    system = HalfspaceSystem(halfspaces, aggregator_from_json(raw_agg))
    setup = as_fraction(data.get("setup_cost", 0), "setup cost")
    return ExdsheInstance(items, system, setup)
