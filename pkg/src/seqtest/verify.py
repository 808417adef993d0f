"""Self-contained correctness checks against brute-force oracles.

Each check recomputes expected answers by direct enumeration (subsets,
outcomes, prefixes) on instances small enough to enumerate, then compares
the library's fast paths against them.  The CLI ``verify`` subcommand runs
everything here; the pytest suite runs larger versions of the same ideas.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Optional

from .batched import run_batched
from .core import (
    ClassPartition,
    Item,
    ProbeState,
    SscInstance,
    classify,
    reduce_negative_weights,
    stopping_check,
)
from .halfspace import (
    Aggregator,
    ExdsheInstance,
    Halfspace,
    HalfspaceSystem,
    simulate_until_witness,
    verify_witness,
)
from .knapsack import KnapItem, solve_fractional
from .lowerbound import CoverInstance, min_cost_cover, realization_lb
from .simulate import exact_expected_cost, run_list
from .ssclass import NonAdaptiveList, build_list
from .stochknap import BernoulliReward, critical_report, scale_table, stoch_knap, theory_multiplier


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def brute_lp_optimum(items: list[KnapItem], budget: Fraction) -> Fraction:
    """Exact LP optimum by enumerating supports with at most one fractional item."""
    best = Fraction(0)
    n = len(items)
    for r in range(n + 1):
        for subset in combinations(range(n), r):
            cost = sum(items[i].cost for i in subset)
            reward = sum(items[i].reward for i in subset)
            if cost <= budget:
                best = max(best, reward)
            for extra in range(n):
                if extra in subset:
                    continue
                slack = budget - cost
                if 0 < slack < items[extra].cost:
                    best = max(best, reward + slack / items[extra].cost * items[extra].reward)
    return best


def brute_reward_dominance(
    entries: list[BernoulliReward], chosen: tuple[int, ...], budget: Fraction
) -> Fraction:
    """Max over all budget-feasible subsets A of Pr[reward(S) < reward(A)], exact."""
    by_id = {e.item: e for e in entries}
    ids = sorted(by_id)
    worst = Fraction(0)
    chosen_set = set(chosen)
    for r in range(len(ids) + 1):
        for subset in combinations(ids, r):
            if sum(by_id[i].cost for i in subset) > budget:
                continue
            # Common items cancel; enumerate the symmetric difference jointly.
            ours = [by_id[i] for i in chosen_set - set(subset)]
            theirs = [by_id[i] for i in set(subset) - chosen_set]
            prob = Fraction(0)
            relevant = ours + theirs
            split = len(ours)
            for outcome in product((0, 1), repeat=len(relevant)):
                mass = Fraction(1)
                ours_reward = theirs_reward = 0
                for pos, (e, bit) in enumerate(zip(relevant, outcome)):
                    mass *= e.prob if bit else 1 - e.prob
                    if bit:
                        if pos < split:
                            ours_reward += e.value
                        else:
                            theirs_reward += e.value
                if ours_reward < theirs_reward:
                    prob += mass
            worst = max(worst, prob)
    return worst


def brute_min_cover(costs, rewards, target) -> Optional[Fraction]:
    best = None
    n = len(costs)
    for r in range(n + 1):
        for subset in combinations(range(n), r):
            if sum(rewards[i] for i in subset) >= target:
                cost = sum((costs[i] for i in subset), Fraction(0))
                if best is None or cost < best:
                    best = cost
    return best


def brute_lb_program(instance: SscInstance, bits) -> Fraction:
    """Optimum of the two-constraint certification program by subset enumeration."""
    j = classify(instance, bits)
    beta1 = instance.classes.beta1(j)
    beta0 = instance.classes.beta0(j)
    n = instance.size
    best = None
    for mask in range(1 << n):
        s1 = s0 = 0
        cost = Fraction(0)
        for i in range(n):
            if mask >> i & 1:
                it = instance.items[i]
                cost += it.cost
                if bits[i]:
                    s1 += it.weight
                else:
                    s0 += it.weight
        if s1 >= beta1 and s0 >= beta0 and (best is None or cost < best):
            best = cost
    return best


def sound_prefix_oracle(instance: SscInstance, plan: NonAdaptiveList, bits) -> int:
    """Minimal number of probes (along the list) after which stopping is sound.

    Soundness of a prefix is judged independently of the stopping rule: the
    all-fail and all-work completions of the unprobed items must land in the
    same class.
    """
    part = instance.classes
    low = 0
    high = part.total_weight
    if part.class_of_score(low) == part.class_of_score(high):
        return 0
    for count, item in enumerate(plan.order, start=1):
        w = instance.items[item].weight
        if bits[item]:
            low += w
        else:
            high -= w
        if part.class_of_score(low) == part.class_of_score(high):
            return count
    raise AssertionError("full information must always be sound")


def witness_prefix_oracle(instance: ExdsheInstance, plan: NonAdaptiveList, bits) -> int:
    """Minimal prefix after which some halfspace subset forms a valid witness."""
    system = instance.system
    subsets = [list(c) for r in range(system.dim + 1) for c in combinations(range(system.dim), r)]
    for count in range(len(plan.order) + 1):
        probed = plan.order[:count]
        values = [bits[i] for i in probed]
        if any(verify_witness(system, probed, values, t) for t in subsets):
            return count
    raise AssertionError("full information must always yield a witness")


# ---------------------------------------------------------------------------
# Bundled instances
# ---------------------------------------------------------------------------

def risk_instance() -> SscInstance:
    """Five identical unit-weight components, classes High / Medium / Low."""
    items = tuple(Item(cost=1, prob=Fraction(1, 2), weight=1) for _ in range(5))
    return SscInstance(items, ClassPartition.build((0, 2, 5, 6), 5))


def mixed_weight_input() -> tuple[list[Item], list[int]]:
    items = [
        Item(cost=1, prob=Fraction(1, 2), weight=2),
        Item(cost=2, prob=Fraction(1, 4), weight=-3),
        Item(cost=1, prob=Fraction(3, 4), weight=1),
        Item(cost=3, prob=Fraction(1, 2), weight=-1),
    ]
    return items, [-4, -1, 2, 4]


def two_halfspace_instance() -> ExdsheInstance:
    items = tuple(
        Item(cost=c, prob=p)
        for c, p in [
            (1, Fraction(1, 2)),
            (2, Fraction(3, 4)),
            (1, Fraction(1, 4)),
            (1, Fraction(1, 2)),
            (2, Fraction(1, 2)),
        ]
    )
    system = HalfspaceSystem(
        (
            Halfspace((2, 1, -2, 0, 1), 1),
            Halfspace((1, 1, 1, 1, 1), 3),
        ),
        Aggregator.all_of(),
    )
    return ExdsheInstance(items, system)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def _random_knap_items(rng: random.Random, n: int) -> list[KnapItem]:
    return [
        KnapItem(id=i, reward=Fraction(rng.randint(0, 20)), cost=Fraction(rng.randint(1, 10)))
        for i in range(n)
    ]


def check_knapsack_lp(rng: random.Random) -> CheckResult:
    for trial in range(300):
        items = _random_knap_items(rng, rng.randint(1, 6))
        budget = Fraction(rng.randint(0, 40), rng.randint(1, 3))
        res = solve_fractional(items, budget)
        if res.lp_value != brute_lp_optimum(items, budget):
            return CheckResult("knapsack-lp-exactness", False, f"trial {trial}")
        prefix_cost = sum(items[i].cost for i in res.prefix)
        prefix_reward = sum(items[i].reward for i in res.prefix)
        if prefix_cost > budget + max(it.cost for it in items):
            return CheckResult("knapsack-lp-exactness", False, f"prefix cost, trial {trial}")
        if prefix_reward < res.lp_value:
            return CheckResult("knapsack-lp-exactness", False, f"prefix reward, trial {trial}")
    return CheckResult("knapsack-lp-exactness", True, "300 random instances")


def _random_reward_entries(rng: random.Random, n: int) -> list[BernoulliReward]:
    return [
        BernoulliReward(
            item=i,
            value=rng.randint(0, 8),
            prob=Fraction(rng.randint(0, 16), 16),
            cost=Fraction(rng.randint(1, 5)),
        )
        for i in range(n)
    ]


def check_stochknap_cost(rng: random.Random) -> CheckResult:
    for trial in range(400):
        entries = _random_reward_entries(rng, rng.randint(1, 10))
        budget = Fraction(rng.randint(1, 6))
        epsilon = Fraction(rng.randint(2, 90), 100)
        mult = theory_multiplier(epsilon) * (1 + Fraction(rng.randint(0, 10), 10))
        reports = scale_table(entries, budget, epsilon, mult)
        if not any(not rep.rich for rep in reports):
            return CheckResult("stochknap-cost-and-scale", False, f"no poor scale, trial {trial}")
        chosen = critical_report(reports).prefix
        cost = sum(e.cost for e in entries if e.item in chosen)
        if cost > (mult + 1) * budget:
            return CheckResult("stochknap-cost-and-scale", False, f"cost bound, trial {trial}")
    return CheckResult("stochknap-cost-and-scale", True, "400 fuzzed runs")


def check_stochknap_dominance(rng: random.Random) -> CheckResult:
    cases = []
    fixed = [
        BernoulliReward(0, 8, Fraction(9, 10), Fraction(1)),
        BernoulliReward(1, 4, Fraction(9, 10), Fraction(1)),
        BernoulliReward(2, 2, Fraction(1, 2), Fraction(1)),
        BernoulliReward(3, 1, Fraction(1, 2), Fraction(1)),
    ]
    cases.append((fixed, Fraction(2), Fraction(3, 20), Fraction(2)))
    for _ in range(20):
        entries = _random_reward_entries(rng, rng.randint(1, 6))
        epsilon = Fraction(rng.randint(10, 40), 100)
        cases.append((entries, Fraction(rng.randint(1, 4)), epsilon, theory_multiplier(epsilon)))
    for i, (entries, budget, epsilon, mult) in enumerate(cases):
        chosen = stoch_knap(entries, budget, epsilon, mult)
        worst = brute_reward_dominance(entries, chosen, budget)
        if worst > 2 * epsilon:
            return CheckResult("stochknap-reward-dominance", False, f"case {i}: Pr={worst}")
    return CheckResult("stochknap-reward-dominance", True, f"{len(cases)} exact enumerations")


def check_stopping_rule(rng: random.Random) -> CheckResult:
    instances = [risk_instance()]
    for _ in range(2):
        items = tuple(
            Item(cost=1, prob=Fraction(1, 2), weight=rng.randint(0, 4)) for _ in range(6)
        )
        total = sum(it.weight for it in items)
        cuts = sorted(rng.sample(range(1, total), min(2, total - 1))) if total > 1 else []
        instances.append(SscInstance(items, ClassPartition.build((0, *cuts, total + 1), total)))
    for inst in instances:
        n = inst.size
        for mask in range(1 << n):
            probed = [i for i in range(n) if mask >> i & 1]
            free = [i for i in range(n) if not mask >> i & 1]
            for outcome in product((0, 1), repeat=len(probed)):
                s1 = sum(inst.items[i].weight for i, b in zip(probed, outcome) if b)
                s0 = sum(inst.items[i].weight for i, b in zip(probed, outcome) if not b)
                state = ProbeState(frozenset(probed), s1, s0)
                got = stopping_check(inst, state)
                # Threshold form of the rule, straight from the definitions.
                expected = None
                for j in range(1, inst.classes.num_classes + 1):
                    if s1 >= inst.classes.beta1(j) and s0 >= inst.classes.beta0(j):
                        expected = j
                        break
                if got != expected:
                    return CheckResult("stopping-rule-equivalence", False, f"state {state}")
                if got is not None:
                    # Soundness: every completion must classify as `got`.
                    for completion in product((0, 1), repeat=len(free)):
                        bits = [0] * n
                        for i, b in zip(probed, outcome):
                            bits[i] = b
                        for i, b in zip(free, completion):
                            bits[i] = b
                        if classify(inst, bits) != got:
                            return CheckResult(
                                "stopping-rule-equivalence", False, f"unsound at {state}"
                            )
    return CheckResult("stopping-rule-equivalence", True, f"{len(instances)} instances, all states")


def check_reduction(rng: random.Random) -> CheckResult:
    items, alphas = mixed_weight_input()
    reduced, flips = reduce_negative_weights(items, alphas)
    raw_partition = sorted(alphas)
    for bits in product((0, 1), repeat=len(items)):
        score = sum(it.weight * b for it, b in zip(items, bits))
        original = max(j for j in range(len(raw_partition) - 1) if raw_partition[j] <= score) + 1
        mapped = tuple(1 - b if i in flips else b for i, b in enumerate(bits))
        if classify(reduced, mapped) != original:
            return CheckResult("negative-weight-reduction", False, f"bits {bits}")
    return CheckResult("negative-weight-reduction", True, "16 realizations")


def check_run_list(rng: random.Random) -> CheckResult:
    instances = [risk_instance()]
    for _ in range(3):
        n = rng.randint(2, 8)
        items = tuple(
            Item(
                cost=Fraction(rng.randint(1, 9)),
                prob=Fraction(rng.randint(0, 16), 16),
                weight=rng.randint(0, 5),
            )
            for _ in range(n)
        )
        total = sum(it.weight for it in items)
        k = rng.randint(0, min(3, max(total - 1, 0)))
        cuts = sorted(rng.sample(range(1, total), k)) if k else []
        instances.append(SscInstance(items, ClassPartition.build((0, *cuts, total + 1), total)))
    for inst in instances:
        plan = build_list(inst)
        expected = exact_expected_cost(inst, plan)
        accumulated = Fraction(0)
        for bits in product((0, 1), repeat=inst.size):
            result = run_list(inst, plan, bits)
            if result.outcome != classify(inst, bits):
                return CheckResult("list-execution-soundness", False, f"class at {bits}")
            if result.num_probes != sound_prefix_oracle(inst, plan, bits):
                return CheckResult("list-execution-soundness", False, f"stop time at {bits}")
            mass = Fraction(1)
            for it, b in zip(inst.items, bits):
                mass *= it.prob if b else 1 - it.prob
            accumulated += mass * result.cost
        if accumulated != expected:
            return CheckResult("list-execution-soundness", False, "expected-cost mismatch")
    return CheckResult("list-execution-soundness", True, f"{len(instances)} instances, exhaustive")


def check_witness_runs(rng: random.Random) -> CheckResult:
    from .halfspace import build_list_exdshe

    inst = two_halfspace_instance()
    plan = build_list_exdshe(inst.system, inst.items)
    for bits in product((0, 1), repeat=inst.size):
        result = simulate_until_witness(inst, plan, bits)
        w = result.witness
        if not verify_witness(inst.system, w.probed, w.values, sorted(w.halfspaces)):
            return CheckResult("witness-validity", False, f"invalid witness at {bits}")
        if result.outcome != inst.system.evaluate(bits):
            return CheckResult("witness-validity", False, f"wrong value at {bits}")
        if result.num_probes != witness_prefix_oracle(inst, plan, bits):
            return CheckResult("witness-validity", False, f"late stop at {bits}")
    return CheckResult("witness-validity", True, "32 realizations, exhaustive")


def check_lower_bound(rng: random.Random) -> CheckResult:
    for trial in range(100):
        n = rng.randint(2, 10)
        items = tuple(
            Item(
                cost=Fraction(rng.randint(1, 9)),
                prob=Fraction(rng.randint(1, 15), 16),
                weight=rng.randint(0, 6),
            )
            for _ in range(n)
        )
        total = sum(it.weight for it in items)
        k = rng.randint(0, min(3, max(total - 1, 0)))
        cuts = sorted(rng.sample(range(1, total), k)) if k else []
        inst = SscInstance(items, ClassPartition.build((0, *cuts, total + 1), total))
        bits = tuple(rng.randint(0, 1) for _ in range(n))
        if realization_lb(inst, bits) != brute_lb_program(inst, bits):
            return CheckResult("lower-bound-exactness", False, f"trial {trial}")
    cover = CoverInstance((Fraction(1), Fraction(1), Fraction(1)), (2, 1, 1), 3)
    res = min_cost_cover(cover)
    if res.cost != brute_min_cover(cover.costs, cover.rewards, cover.target):
        return CheckResult("lower-bound-exactness", False, "cover DP mismatch")
    return CheckResult("lower-bound-exactness", True, "100 realizations vs subset enumeration")


def check_batched(rng: random.Random) -> CheckResult:
    for trial in range(150):
        n = rng.randint(2, 8)
        items = tuple(
            Item(
                cost=Fraction(rng.randint(1, 9)),
                prob=Fraction(rng.randint(0, 16), 16),
                weight=rng.randint(0, 5),
            )
            for _ in range(n)
        )
        total = sum(it.weight for it in items)
        k = rng.randint(0, min(3, max(total - 1, 0)))
        cuts = sorted(rng.sample(range(1, total), k)) if k else []
        rho = Fraction(rng.randint(0, 12))
        inst = SscInstance(items, ClassPartition.build((0, *cuts, total + 1), total), rho)
        plan = build_list(inst)
        bits = tuple(rng.randint(0, 1) for _ in range(n))
        batched = run_batched(inst, plan, bits)
        tested = sum((inst.items[i].cost for i in batched.probes), Fraction(0))
        if batched.cost != batched.batch_count * rho + tested:
            return CheckResult("batched-accounting", False, f"identity, trial {trial}")
        plain = run_list(inst, plan, bits)
        if batched.outcome != plain.outcome:
            return CheckResult("batched-accounting", False, f"class mismatch, trial {trial}")
        if tested < plain.cost:
            return CheckResult("batched-accounting", False, f"tested < plain, trial {trial}")
        if rho == 0 and batched.cost < plain.cost:
            return CheckResult("batched-accounting", False, f"zero-setup cost, trial {trial}")
    return CheckResult("batched-accounting", True, "150 fuzzed triples")


CHECKS: list[Callable[[random.Random], CheckResult]] = [
    check_knapsack_lp,
    check_stochknap_cost,
    check_stochknap_dominance,
    check_stopping_rule,
    check_reduction,
    check_run_list,
    check_witness_runs,
    check_lower_bound,
    check_batched,
]


def run_all(seed: int = 20260809) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        results.append(check(random.Random(seed)))
        seed += 1
    return results
