"""Instance model: classification, stopping rule, negative-weight reduction."""

import random
from fractions import Fraction
from itertools import product

import pytest

from seqtest import (
    ClassPartition,
    InvalidInstanceError,
    Item,
    ProbeState,
    SscInstance,
    apply_flips,
    classify,
    instance_from_dict,
    instance_to_dict,
    reduce_negative_weights,
    stopping_check,
)
from oracles import random_ssc_instance


def risk_instance() -> SscInstance:
    items = tuple(Item(cost=1, prob=Fraction(1, 2), weight=1) for _ in range(5))
    return SscInstance(items, ClassPartition.build((0, 2, 5, 6), 5))


class TestReduction:
    def test_single_negative_item(self):
        items = [Item(cost=1, prob=Fraction(1, 5), weight=-3)]
        inst, flips = reduce_negative_weights(items, (-3, 0, 1))
        assert inst.items[0].weight == 3
        assert inst.items[0].prob == Fraction(4, 5)
        assert inst.classes.alphas == (0, 3, 4)
        assert flips == {0}

    def test_all_positive_is_identity(self):
        items = [Item(cost=2, prob=Fraction(1, 2), weight=4), Item(cost=1, prob=Fraction(1, 4), weight=1)]
        inst, flips = reduce_negative_weights(items, (0, 3, 5))
        assert inst.items == tuple(items)
        assert flips == frozenset()

    def test_classification_commutes_exhaustively(self):
        items = [
            Item(cost=1, prob=Fraction(1, 2), weight=2),
            Item(cost=2, prob=Fraction(1, 4), weight=-3),
            Item(cost=1, prob=Fraction(3, 4), weight=1),
            Item(cost=3, prob=Fraction(1, 2), weight=-1),
        ]
        raw_alphas = (-4, -1, 2, 4)
        inst, flips = reduce_negative_weights(items, raw_alphas)
        for bits in product((0, 1), repeat=4):
            score = sum(it.weight * b for it, b in zip(items, bits))
            expected = max(j for j in range(3) if raw_alphas[j] <= score) + 1
            assert classify(inst, apply_flips(bits, flips)) == expected

    def test_larger_mixed_instances_commute(self):
        rng = random.Random(7)
        for _ in range(20):
            n = rng.randint(2, 10)
            items = [
                Item(
                    cost=Fraction(rng.randint(1, 5)),
                    prob=Fraction(rng.randint(0, 8), 8),
                    weight=rng.randint(-5, 5),
                )
                for _ in range(n)
            ]
            lo = sum(min(it.weight, 0) for it in items)
            hi = sum(max(it.weight, 0) for it in items)
            k = rng.randint(0, min(3, max(hi - lo - 1, 0)))
            cuts = sorted(rng.sample(range(lo + 1, hi), k)) if k else []
            raw = [lo, *cuts, hi + 1]
            inst, flips = reduce_negative_weights(items, raw)
            for bits in product((0, 1), repeat=n):
                score = sum(it.weight * b for it, b in zip(items, bits))
                expected = max(j for j in range(len(raw) - 1) if raw[j] <= score) + 1
                assert classify(inst, apply_flips(bits, flips)) == expected

    def test_non_increasing_alphas_rejected(self):
        items = [Item(cost=1, prob=Fraction(1, 2), weight=1)]
        with pytest.raises(InvalidInstanceError):
            reduce_negative_weights(items, (0, 0, 2))


class TestClassify:
    def test_two_of_five_working_is_medium(self):
        assert classify(risk_instance(), (1, 1, 0, 0, 0)) == 2

    def test_all_working_is_low(self):
        assert classify(risk_instance(), (1, 1, 1, 1, 1)) == 3

    def test_single_class_instance(self):
        items = (Item(cost=1, prob=Fraction(1, 2), weight=3),)
        inst = SscInstance(items, ClassPartition.build((0, 4), 3))
        for bits in ((0,), (1,)):
            assert classify(inst, bits) == 1


class TestStoppingCheck:
    def test_certifies_medium(self):
        state = ProbeState(frozenset({0, 1, 2}), working_weight=2, failed_weight=1)
        assert stopping_check(risk_instance(), state) == 2

    def test_unresolved_between_medium_and_low(self):
        state = ProbeState(frozenset({0, 1, 2}), working_weight=3, failed_weight=0)
        assert stopping_check(risk_instance(), state) is None

    def test_constant_function_stops_immediately(self):
        items = (Item(cost=1, prob=Fraction(1, 2), weight=3),)
        inst = SscInstance(items, ClassPartition.build((0, 4), 3))
        assert stopping_check(inst, ProbeState(frozenset(), 0, 0)) == 1

    def test_threshold_and_interval_forms_agree_on_values(self):
        # The rule only sees (working, failed) weight totals; sweep them all.
        rng = random.Random(3)
        for _ in range(30):
            total = rng.randint(0, 40)
            k = rng.randint(0, min(6, max(total - 1, 0)))
            cuts = sorted(rng.sample(range(1, total), k)) if k else []
            part = ClassPartition.build((0, *cuts, total + 1), total)
            for s1 in range(total + 1):
                for s0 in range(total - s1 + 1):
                    by_threshold = None
                    for j in range(1, part.num_classes + 1):
                        if s1 >= part.beta1(j) and s0 >= part.beta0(j):
                            by_threshold = j
                            break
                    low, high = s1, total - s0
                    by_interval = (
                        part.class_of_score(low)
                        if part.class_of_score(low) == part.class_of_score(high)
                        else None
                    )
                    assert by_threshold == by_interval

    def test_exhaustive_state_equivalence_and_soundness(self):
        rng = random.Random(11)
        instances = [risk_instance()] + [
            random_ssc_instance(rng, max_items=9, min_items=2) for _ in range(6)
        ]
        for inst in instances:
            n = inst.size
            part = inst.classes
            for mask in range(1 << n):
                probed = [i for i in range(n) if mask >> i & 1]
                free = [i for i in range(n) if not mask >> i & 1]
                for outcome in product((0, 1), repeat=len(probed)):
                    s1 = sum(inst.items[i].weight for i, b in zip(probed, outcome) if b)
                    s0 = sum(inst.items[i].weight for i, b in zip(probed, outcome) if not b)
                    got = stopping_check(inst, ProbeState(frozenset(probed), s1, s0))
                    expected = None
                    for j in range(1, part.num_classes + 1):
                        if s1 >= part.beta1(j) and s0 >= part.beta0(j):
                            expected = j
                            break
                    assert got == expected
                    if got is not None and len(free) <= 6:
                        for completion in product((0, 1), repeat=len(free)):
                            bits = [0] * n
                            for i, b in zip(probed, outcome):
                                bits[i] = b
                            for i, b in zip(free, completion):
                                bits[i] = b
                            assert classify(inst, bits) == got

    def test_sampled_states_at_twelve_items(self):
        rng = random.Random(5)
        inst = random_ssc_instance(rng, max_items=12, min_items=12)
        part = inst.classes
        for _ in range(4000):
            bits = [rng.randint(0, 1) for _ in range(12)]
            probed = [i for i in range(12) if rng.random() < 0.5]
            s1 = sum(inst.items[i].weight for i in probed if bits[i])
            s0 = sum(inst.items[i].weight for i in probed if not bits[i])
            got = stopping_check(inst, ProbeState(frozenset(probed), s1, s0))
            expected = None
            for j in range(1, part.num_classes + 1):
                if s1 >= part.beta1(j) and s0 >= part.beta0(j):
                    expected = j
                    break
            assert got == expected

    def test_monotone_in_probes(self):
        rng = random.Random(13)
        for _ in range(50):
            inst = random_ssc_instance(rng, max_items=10)
            bits = [rng.randint(0, 1) for _ in range(inst.size)]
            order = list(range(inst.size))
            rng.shuffle(order)
            certified = None
            s1 = s0 = 0
            for probes in range(inst.size + 1):
                state = ProbeState(frozenset(order[:probes]), s1, s0)
                got = stopping_check(inst, state)
                if certified is not None:
                    assert got == certified
                elif got is not None:
                    certified = got
                if probes < inst.size:
                    item = order[probes]
                    if bits[item]:
                        s1 += inst.items[item].weight
                    else:
                        s0 += inst.items[item].weight


class TestPartitionNormalization:
    def test_top_cutoff_bumped_to_cover_max_score(self):
        part = ClassPartition.build((0, 2, 5), 5)
        assert part.alphas == (0, 2, 6)
        assert part.class_of_score(5) == 2

    def test_top_cutoff_already_exclusive(self):
        part = ClassPartition.build((0, 2, 6), 5)
        assert part.alphas == (0, 2, 6)

    def test_unreachable_interior_cutoff_rejected(self):
        with pytest.raises(InvalidInstanceError):
            ClassPartition.build((0, 7, 8), 5)

    def test_gap_below_rejected(self):
        with pytest.raises(InvalidInstanceError):
            ClassPartition.build((1, 3), 5)

    def test_betas_match_definitions(self):
        part = ClassPartition.build((0, 2, 5, 6), 5)
        assert [part.beta1(j) for j in (1, 2, 3)] == [0, 2, 5]
        assert [part.beta0(j) for j in (1, 2, 3)] == [5 - 2 + 1, 5 - 5 + 1, 5 - 6 + 1]


class TestZeroWeightItems:
    def test_never_affect_classification(self):
        items = (
            Item(cost=1, prob=Fraction(1, 2), weight=0),
            Item(cost=1, prob=Fraction(1, 2), weight=2),
        )
        inst = SscInstance(items, ClassPartition.build((0, 1, 3), 2))
        assert classify(inst, (0, 1)) == classify(inst, (1, 1)) == 2
        assert classify(inst, (0, 0)) == classify(inst, (1, 0)) == 1


class TestJsonInterface:
    def test_round_trip(self):
        inst = risk_instance()
        data = instance_to_dict(inst)
        again, flips = instance_from_dict(data)
        assert again == inst
        assert flips == frozenset()

    def test_negative_weights_reduced_on_load(self):
        data = {
            "items": [{"cost": 1, "prob": 0.25, "weight": -2}],
            "alphas": [-2, 0, 1],
        }
        inst, flips = instance_from_dict(data)
        assert inst.items[0].weight == 2
        assert inst.items[0].prob == Fraction(3, 4)
        assert flips == {0}

    def test_rational_costs_survive(self):
        data = {
            "items": [{"cost": "7/2", "prob": "1/3", "weight": 1}],
            "alphas": [0, 1, 2],
        }
        inst, _ = instance_from_dict(data)
        assert inst.items[0].cost == Fraction(7, 2)
        assert inst.items[0].prob == Fraction(1, 3)
        assert instance_to_dict(inst)["items"][0]["cost"] == "7/2"


class TestScaling:
    def test_min_cost_becomes_one(self):
        items = (
            Item(cost=Fraction(5), prob=Fraction(1, 2), weight=1),
            Item(cost=Fraction(15, 2), prob=Fraction(1, 2), weight=1),
        )
        inst = SscInstance(items, ClassPartition.build((0, 1, 3), 2))
        assert inst.cost_scale == 5
        assert inst.scaled_costs == (Fraction(1), Fraction(3, 2))
        assert min(inst.scaled_costs) == 1
