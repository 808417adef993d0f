"""Batch execution of a phased probe list under a per-batch setup cost.

Testing a set in one step costs the setup charge plus the items' costs, so
with setup cost rho it only pays to look at outcomes once roughly rho worth
of testing has been queued.  The batched runner therefore merges all phases
with budget up to rho into one opening batch (start phase floor(log2 rho)
in minimum-cost units) and afterwards tests one phase per batch, checking
the stopping rule only between batches.

Empty phase segments are skipped without charge: no setup is paid when
nothing is tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .core import (
    Numeric,
    Realization,
    ScoreTracker,
    SscInstance,
    as_fraction,
    check_realization,
)
from .errors import InvalidInputError
from .halfspace import ExdsheInstance, Witness, WitnessTracker
from .simulate import RunResult
from .ssclass import NonAdaptiveList


def start_phase(setup_cost: Fraction, cost_scale: Fraction) -> int:
    """First phase worth batching: floor(log2(setup / min cost)), floored at 0."""
    if setup_cost <= 0:
        return 0
    scaled = setup_cost / cost_scale
    if scaled < 1:
        return 0
    k = scaled.numerator.bit_length() - scaled.denominator.bit_length()
    if 2**k > scaled:
        k -= 1
    return k


@dataclass(frozen=True)
class BatchedPolicy:
    """A phased probe list executed batch-wise from ``start_phase`` on."""

    plan: NonAdaptiveList
    setup_cost: Fraction
    start_phase: int

    @staticmethod
    def build(plan: NonAdaptiveList, setup_cost: Numeric, cost_scale: Numeric) -> "BatchedPolicy":
        setup = as_fraction(setup_cost, "setup cost")
        if setup < 0:
            raise InvalidInputError("setup cost must be nonnegative")
        return BatchedPolicy(plan, setup, start_phase(setup, as_fraction(cost_scale, "cost scale")))

    def batches(self) -> list[tuple[int, ...]]:
        """Nonempty item batches: phases up to the start phase merged, then one per phase."""
        segments = list(self.plan.segments())
        head = tuple(i for seg in segments[: self.start_phase + 1] for i in seg)
        tail = segments[self.start_phase + 1 :]
        return [batch for batch in [head, *tail] if batch]


def run_batched(
    instance: Union[SscInstance, ExdsheInstance],
    policy: Union[BatchedPolicy, NonAdaptiveList],
    realization: Realization,
    setup_cost: Optional[Numeric] = None,
) -> RunResult:
    """Execute batch by batch, paying setup per executed batch.

    ``policy`` may be a plain probe list, in which case the batching is
    derived from ``setup_cost`` (default: the instance's own).  Total cost
    is exactly (number of executed batches) * setup + tested item costs.
    """
    if isinstance(policy, NonAdaptiveList):
        rho = instance.setup_cost if setup_cost is None else setup_cost
        policy = BatchedPolicy.build(policy, rho, instance.cost_scale)
    elif setup_cost is not None:
        raise InvalidInputError("setup_cost override requires passing a plain list")

    bits = check_realization(realization, instance.size)
    is_ssc = isinstance(instance, SscInstance)
    tracker = ScoreTracker(instance) if is_ssc else WitnessTracker(instance.system)

    def stopped():
        if is_ssc:
            return tracker.certified_class(), None
        value, forced = tracker.forced_value()
        return value, forced

    probed: list[int] = []
    cost = Fraction(0)
    batch_count = 0
    outcome, forced = stopped()
    if outcome is None:
        for batch in policy.batches():
            batch_count += 1
            cost += policy.setup_cost
            for item in batch:
                tracker.probe(item, bits[item])
                probed.append(item)
                cost += instance.items[item].cost
            outcome, forced = stopped()
            if outcome is not None:
                break
    if outcome is None:
        raise InvalidInputError("probe list does not resolve this realization")
    witness = None
    if not is_ssc:
        witness = Witness(
            probed=tuple(probed),
            values=tuple(bits[i] for i in probed),
            halfspaces=frozenset(forced),
            f_value=outcome,
        )
    return RunResult(
        probes=tuple(probed),
        cost=cost,
        outcome=outcome,
        witness=witness,
        batch_count=batch_count,
    )
