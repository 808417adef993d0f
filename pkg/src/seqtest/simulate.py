"""Policy execution: single runs, exact expectations, sampling, baselines.

Sampling is reproducible and splittable: realization ``t`` for seed ``s``
is drawn from ``PCG64(SeedSequence(entropy=s, spawn_key=(t,)))``, so runs
can be distributed without changing the stream.  Cost aggregation is exact
(Fractions end to end, converted to float only in the returned summary),
which makes summaries bitwise reproducible regardless of summation order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Iterator, Optional

import numpy as np

from .core import Realization, ScoreTracker, SscInstance, check_realization
from .errors import InvalidInputError
from .ssclass import NonAdaptiveList

EXACT_ENUMERATION_CAP = 20


@dataclass(frozen=True)
class RunResult:
    """Execution record of one policy run on one realization.

    ``outcome`` is the class index for score classification and the
    aggregate value for halfspace systems (then ``witness`` is set).
    ``batch_count`` stays 0 for item-by-item runs; for batched runs the
    cost includes ``batch_count`` setup charges.
    """

    probes: tuple[int, ...]
    cost: Fraction
    outcome: int
    witness: Optional[object] = None
    batch_count: int = 0

    @property
    def num_probes(self) -> int:
        return len(self.probes)


def run_list(instance: SscInstance, plan: NonAdaptiveList, realization: Realization) -> RunResult:
    """Probe in list order until some class is certified."""
    bits = check_realization(realization, instance.size)
    tracker = ScoreTracker(instance)
    probed: list[int] = []
    cost = Fraction(0)
    certified = tracker.certified_class()
    if certified is None:
        for item in plan.order:
            tracker.probe(item, bits[item])
            probed.append(item)
            cost += instance.items[item].cost
            certified = tracker.certified_class()
            if certified is not None:
                break
    if certified is None:
        raise InvalidInputError("probe list does not resolve this realization")
    return RunResult(probes=tuple(probed), cost=cost, outcome=certified)


def exact_expected_cost(
    instance: SscInstance, plan: NonAdaptiveList, max_items: int = EXACT_ENUMERATION_CAP
) -> Fraction:
    """Expected probing cost of the list, exactly, over all realizations.

    Walks the list once, tracking the distribution of the observed working
    weight among still-running realizations; this aggregates the full
    outcome enumeration without materializing it.
    """
    if instance.size > max_items:
        raise InvalidInputError(
            f"exact expectation capped at {max_items} items, instance has {instance.size}"
        )
    part = instance.classes
    total = part.total_weight
    if part.class_of_score(0) == part.class_of_score(total):
        return Fraction(0)

    # working-weight-so-far -> probability of reaching this probe still running
    alive: dict[int, Fraction] = {0: Fraction(1)}
    expected = Fraction(0)
    spent = Fraction(0)
    probed_weight = 0
    for item in plan.order:
        it = instance.items[item]
        spent += it.cost
        probed_weight += it.weight
        step: dict[int, Fraction] = {}
        for seen, prob in alive.items():
            for bit, chance in ((1, it.prob), (0, 1 - it.prob)):
                if chance == 0:
                    continue
                now = seen + it.weight * bit
                mass = prob * chance
                low = now
                high = total - (probed_weight - now)
                if part.class_of_score(low) == part.class_of_score(high):
                    expected += mass * spent
                else:
                    step[now] = step.get(now, Fraction(0)) + mass
        alive = step
        if not alive:
            break
    if alive:
        raise InvalidInputError("probe list does not resolve every realization")
    return expected


def random_baseline(instance, seed: int) -> NonAdaptiveList:
    """Uniform random probe order from a seeded generator (single phase)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = tuple(int(i) for i in rng.permutation(instance.size))
    return NonAdaptiveList(order, (len(order),), {"algorithm": "random_order", "seed": seed})


def sample_realizations(instance, count: int, seed: int) -> Iterator[tuple[int, ...]]:
    """Independent product-Bernoulli outcome vectors, one substream each."""
    probs = [float(p) for p in instance.probs]
    n = len(probs)
    for t in range(count):
        child = np.random.SeedSequence(entropy=seed, spawn_key=(t,))
        rng = np.random.Generator(np.random.PCG64(child))
        draws = rng.random(n)
        yield tuple(int(draws[i] < probs[i]) for i in range(n))


@dataclass(frozen=True)
class CostSummary:
    mean_cost: float
    std_err: float
    lb_mean: Optional[float]
    ratio: Optional[float]
    runtime_seconds: float
    num_realizations: int


def estimate(
    instance,
    plan: NonAdaptiveList,
    num_realizations: int,
    seed: int,
    batched: bool = False,
    with_lower_bound: Optional[bool] = None,
) -> CostSummary:
    """Sample realizations, run the policy on each, aggregate cost stats.

    Works for score-classification and halfspace instances alike; the
    per-realization information-theoretic lower bound (and the cost/LB
    ratio) is attached for score classification unless disabled.
    """
    if num_realizations < 1:
        raise InvalidInputError("need at least one realization")
    is_ssc = isinstance(instance, SscInstance)
    if with_lower_bound is None:
        with_lower_bound = is_ssc
    if with_lower_bound and not is_ssc:
        raise InvalidInputError("lower bound is only defined for score classification")

    from .lowerbound import realization_lb

    runner = _resolve_runner(instance, batched)
    start = time.perf_counter()
    costs: list[Fraction] = []
    lbs: list[Fraction] = []
    for bits in sample_realizations(instance, num_realizations, seed):
        result = runner(instance, plan, bits)
        costs.append(result.cost)
        if with_lower_bound:
            lbs.append(realization_lb(instance, bits))
    runtime = time.perf_counter() - start

    m = len(costs)
    mean = sum(costs, Fraction(0)) / m
    if m > 1:
        var = sum((c - mean) ** 2 for c in costs) / (m - 1)
        std_err = sqrt(float(var) / m)
    else:
        std_err = 0.0
    lb_mean = None
    ratio = None
    if with_lower_bound:
        lb_mean_frac = sum(lbs, Fraction(0)) / m
        lb_mean = float(lb_mean_frac)
        ratio = float(mean / lb_mean_frac) if lb_mean_frac > 0 else None
    return CostSummary(
        mean_cost=float(mean),
        std_err=std_err,
        lb_mean=lb_mean,
        ratio=ratio,
        runtime_seconds=runtime,
        num_realizations=m,
    )


def _resolve_runner(instance, batched: bool):
    is_ssc = isinstance(instance, SscInstance)
    if batched:
        from .batched import run_batched

        return run_batched
    if is_ssc:
        return run_list
    from .halfspace import simulate_until_witness

    return simulate_until_witness


@dataclass(frozen=True)
class PhaseSurvival:
    """Empirical phase-survival row: how often the run outlives phase ``phase``."""

    phase: int
    survival: float
    prior_survival: float
    optimum_survival: float
    bound: float
    within_bound: bool


def phase_survival_report(
    instance: SscInstance,
    plan: NonAdaptiveList,
    num_realizations: int,
    seed: int,
    decay: float = 0.3,
) -> list[PhaseSurvival]:
    """Measure the per-phase survival recursion on sampled realizations.

    ``survival[k]`` is the fraction of runs not finished by the end of phase
    k; ``optimum_survival[k]`` is the fraction whose per-realization lower
    bound (in minimum-cost units) reaches the phase budget 2^k.  The rows
    report whether ``survival[k] <= decay * survival[k-1] +
    optimum_survival[k]`` held empirically; the lower bound stands in for
    the optimal policy, so occasional misses are expected rather than fatal.
    """
    from .lowerbound import realization_lb

    marks = plan.phase_marks
    finishes: list[int] = []
    lb_scaled: list[Fraction] = []
    for bits in sample_realizations(instance, num_realizations, seed):
        result = run_list(instance, plan, bits)
        finishes.append(result.num_probes)
        lb_scaled.append(realization_lb(instance, bits) / instance.cost_scale)

    rows = []
    prior = 1.0
    for phase, mark in enumerate(marks):
        survival = sum(1 for f in finishes if f > mark) / len(finishes)
        budget = 1 << phase
        opt_survival = sum(1 for lb in lb_scaled if lb >= budget) / len(lb_scaled)
        bound = decay * prior + opt_survival
        rows.append(
            PhaseSurvival(
                phase=phase,
                survival=survival,
                prior_survival=prior,
                optimum_survival=opt_survival,
                bound=bound,
                within_bound=survival <= bound + 1e-12,
            )
        )
        prior = survival
    return rows
