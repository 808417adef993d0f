"""Synthetic-instance generator and benchmark harness.

Instance protocol: item success probabilities uniform on (0, 1), integer
costs uniform in [10, 100]; weights are 1 for the unweighted variant and
uniform integers in [1, 10] otherwise; class cutoffs are distinct uniform
integers strictly inside the achievable score range (halfspace evaluation
is the two-class special case with a single cutoff).

The harness exploits that the probe order ignores cutoffs: items (and the
built lists) are generated once per (size, instance index) and reused for
every class count in the grid, which the harness also asserts via a build
counter.  All randomness derives from the master seed through fixed spawn
keys, so outputs are byte-identical across runs (timing columns aside).

Per instance and algorithm the harness reports mean cost over sampled
realizations, its standard error, the mean per-realization lower bound,
and their ratio; the aggregate table averages per-instance ratios over a
(kind, class count) cell.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .core import ClassPartition, Item, SscInstance, as_fraction
from .batched import run_batched
from .errors import InvalidInputError, InvalidInstanceError
from .halfspace import (
    ExdsheInstance,
    Halfspace,
    HalfspaceSystem,
    aggregator_from_json,
    build_list_exdshe,
    simulate_until_witness,
)
from .lowerbound import realization_lb
from .simulate import random_baseline, run_list, sample_realizations
from .ssclass import NonAdaptiveList, build_list
from .stochknap import PolicyParams

CSV_SCHEMA_VERSION = 1
KINDS = ("she", "ssclass", "ssclass_unweighted", "batched", "exdshe")
ALGORITHMS = ("ours", "random")

RESULT_COLUMNS = (
    "schema_version",
    "kind",
    "n",
    "num_classes",
    "instance",
    "algorithm",
    "mean_cost",
    "std_err",
    "lb_mean",
    "ratio",
    "build_seconds",
    "simulate_seconds",
)
AGGREGATE_COLUMNS = (
    "schema_version",
    "kind",
    "num_classes",
    "algorithm",
    "mean_ratio",
    "num_instances",
)
TIMING_COLUMNS = ("build_seconds", "simulate_seconds")

# Spawn-key stream tags (see _rng / _int_seed).
_STREAM_ITEMS = 0
_STREAM_CUTOFFS = 1
_STREAM_SYSTEM = 2
_STREAM_REALIZATIONS = 3
_STREAM_BASELINE = 4


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "ssclass"
    sizes: tuple[int, ...] = (100, 200)
    class_counts: tuple[int, ...] = (5, 10)
    instances_per_cell: int = 10
    realizations: int = 50
    seed: int = 0
    algorithms: tuple[str, ...] = ALGORITHMS
    epsilon: Fraction = Fraction(3, 20)
    mode: str = "practical"
    multiplier: Optional[Fraction] = None
    setup_cost: Fraction = Fraction(0)
    halfspaces: int = 2
    aggregator: Union[str, dict] = "AND"
    output_dir: str = "bench-out"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "she" and tuple(self.class_counts) != (2,):
            raise InvalidInputError("halfspace evaluation forces exactly two classes")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise InvalidInputError("sizes must be positive")
        if self.kind != "exdshe" and (
            not self.class_counts or any(b < 1 for b in self.class_counts)
        ):
            raise InvalidInputError("class counts must be positive")
        if self.instances_per_cell < 1:
            raise InvalidInputError("need at least one instance per cell")
        if self.realizations < 0:
            raise InvalidInputError("realization count must be nonnegative")
        if any(a not in ALGORITHMS for a in self.algorithms):
            raise InvalidInputError(f"algorithms must be among {ALGORITHMS}")
        if self.kind == "exdshe" and self.halfspaces < 1:
            raise InvalidInputError("need at least one halfspace")

    def policy_params(self) -> PolicyParams:
        return PolicyParams(epsilon=self.epsilon, mode=self.mode, multiplier=self.multiplier)


_CONFIG_KEYS = {
    "kind",
    "sizes",
    "class_counts",
    "instances_per_cell",
    "realizations",
    "seed",
    "algorithms",
    "epsilon",
    "mode",
    "multiplier",
    "setup_cost",
    "halfspaces",
    "aggregator",
    "output_dir",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    for key in ("sizes", "class_counts", "algorithms"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    for key in ("epsilon", "setup_cost", "multiplier"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = as_fraction(kwargs[key], key)
    if data.get("kind") == "she" and "class_counts" not in data:
        kwargs["class_counts"] = (2,)
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    """Read a TOML or JSON experiment config."""
    p = Path(path)
    try:
        if p.suffix == ".json":
            data = json.loads(p.read_text())
        else:
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(p.read_text())
    except (json.JSONDecodeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: cannot parse config: {exc}") from exc
    return config_from_dict(data)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def _int_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def generate_items(n: int, rng: np.random.Generator, weighted: bool) -> tuple[Item, ...]:
    probs = rng.random(n)
    costs = rng.integers(10, 101, size=n)
    weights = rng.integers(1, 11, size=n) if weighted else np.ones(n, dtype=int)
    return tuple(
        Item(cost=Fraction(int(c)), prob=Fraction(float(p)), weight=int(w))
        for c, p, w in zip(costs, probs, weights)
    )


def generate_cutoffs(total_weight: int, num_classes: int, rng: np.random.Generator) -> tuple[int, ...]:
    """num_classes - 1 distinct uniform cutoffs strictly inside [1, W-1]."""
    need = num_classes - 1
    if need == 0:
        return ()
    if need > total_weight - 1:
        raise InvalidInstanceError(
            f"cannot place {need} distinct cutoffs inside [1, {total_weight - 1}]"
        )
    for _ in range(1000):
        draw = rng.integers(1, total_weight, size=need)
        if len(set(int(x) for x in draw)) == need:
            return tuple(sorted(int(x) for x in draw))
    # Rejection is hopeless only when the cutoffs nearly fill the range.
    draw = rng.choice(np.arange(1, total_weight), size=need, replace=False)
    return tuple(sorted(int(x) for x in draw))


def generate_instance(
    kind: str,
    n: int,
    num_classes: int,
    seed: int,
    instance_index: int = 0,
    setup_cost: Fraction = Fraction(0),
    halfspaces: int = 2,
    aggregator: Union[str, dict] = "AND",
) -> Union[SscInstance, ExdsheInstance]:
    """One synthetic instance; items depend on (kind, n, index, seed) only.

    Regenerating with a different ``num_classes`` keeps the same items and
    redraws cutoffs, matching the universality of the probe order.
    """
    if kind not in KINDS:
        raise InvalidInputError(f"kind must be one of {KINDS}, got {kind!r}")
    kind_code = KINDS.index(kind)
    weighted = kind != "ssclass_unweighted"
    items = generate_items(n, _rng(seed, kind_code, n, instance_index, _STREAM_ITEMS), weighted)

    if kind == "exdshe":
        rng = _rng(seed, kind_code, n, instance_index, _STREAM_SYSTEM)
        rows = []
        for _ in range(halfspaces):
            weights = tuple(int(w) for w in rng.integers(1, 11, size=n))
            threshold = int(rng.integers(1, sum(weights)))
            rows.append(Halfspace(weights, threshold))
        system = HalfspaceSystem(tuple(rows), aggregator_from_json(aggregator))
        plain_items = tuple(Item(cost=it.cost, prob=it.prob) for it in items)
        return ExdsheInstance(plain_items, system, setup_cost)

    if kind == "she":
        num_classes = 2
    total = sum(it.weight for it in items)
    rng = _rng(seed, kind_code, n, instance_index, _STREAM_CUTOFFS, num_classes)
    cutoffs = generate_cutoffs(total, num_classes, rng)
    partition = ClassPartition.build((0, *cutoffs, total + 1), total)
    rho = setup_cost if kind == "batched" else Fraction(0)
    return SscInstance(items, partition, rho)


@dataclass
class ExperimentReport:
    rows: list[dict]
    aggregate: list[dict]
    results_path: Optional[Path]
    aggregate_path: Optional[Path]
    table_path: Optional[Path]
    list_builds: int


def run_experiment(config: ExperimentConfig, write_files: bool = True) -> ExperimentReport:
    """Run the full grid and write results.csv, aggregate.csv, aggregate.txt."""
    params = config.policy_params()
    kind_code = KINDS.index(config.kind)
    batched = config.kind == "batched"
    class_counts = (config.halfspaces,) if config.kind == "exdshe" else tuple(config.class_counts)

    rows: list[dict] = []
    list_builds = 0
    for n in config.sizes:
        for idx in range(config.instances_per_cell):
            # Build each algorithm's order once per item set; cutoffs only
            # move the stopping rule, never the order.
            plans: dict[str, tuple[NonAdaptiveList, float]] = {}
            base_instance = generate_instance(
                config.kind,
                n,
                class_counts[0],
                config.seed,
                idx,
                setup_cost=config.setup_cost,
                halfspaces=config.halfspaces,
                aggregator=config.aggregator,
            )
            for algorithm in config.algorithms:
                start = time.perf_counter()
                if algorithm == "ours":
                    if isinstance(base_instance, ExdsheInstance):
                        plan = build_list_exdshe(
                            base_instance.system, base_instance.items, params
                        )
                    else:
                        plan = build_list(base_instance, params)
                    list_builds += 1
                else:
                    plan = random_baseline(
                        base_instance, _int_seed(config.seed, kind_code, n, idx, _STREAM_BASELINE)
                    )
                plans[algorithm] = (plan, time.perf_counter() - start)

            for num_classes in class_counts:
                if isinstance(base_instance, ExdsheInstance):
                    instance = base_instance
                else:
                    instance = generate_instance(
                        config.kind,
                        n,
                        num_classes,
                        config.seed,
                        idx,
                        setup_cost=config.setup_cost,
                    )
                    if instance.items != base_instance.items:
                        raise AssertionError("item regeneration must be cutoff-independent")
                realization_seed = _int_seed(
                    config.seed, kind_code, n, idx, _STREAM_REALIZATIONS, num_classes
                )
                rows.extend(
                    _evaluate_instance(
                        config, instance, n, num_classes, idx, plans, realization_seed, batched
                    )
                )

    aggregate = _aggregate(rows)
    report = ExperimentReport(rows, aggregate, None, None, None, list_builds)
    if write_files:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.results_path = out / "results.csv"
        report.aggregate_path = out / "aggregate.csv"
        report.table_path = out / "aggregate.txt"
        _write_csv(report.results_path, RESULT_COLUMNS, rows)
        _write_csv(report.aggregate_path, AGGREGATE_COLUMNS, aggregate)
        report.table_path.write_text(format_aggregate_table(aggregate))
    return report


def _evaluate_instance(
    config: ExperimentConfig,
    instance,
    n: int,
    num_classes: int,
    idx: int,
    plans: dict,
    realization_seed: int,
    batched: bool,
) -> list[dict]:
    """Shared realizations and lower bounds, one result row per algorithm."""
    is_ssc = isinstance(instance, SscInstance)
    realizations = list(sample_realizations(instance, config.realizations, realization_seed))
    if not realizations:
        return []  # dry run: exercise generation and list building only

    lbs: list[Fraction] = []
    if is_ssc:
        for bits in realizations:
            lb = realization_lb(instance, bits)
            if batched and lb > 0:
                # Any policy that must probe at all pays at least one setup.
                lb += instance.setup_cost
            lbs.append(lb)

    rows = []
    for algorithm, (plan, build_seconds) in plans.items():
        start = time.perf_counter()
        costs: list[Fraction] = []
        for bits in realizations:
            if batched:
                result = run_batched(instance, plan, bits)
            elif is_ssc:
                result = run_list(instance, plan, bits)
            else:
                result = simulate_until_witness(instance, plan, bits)
            costs.append(result.cost)
        sim_seconds = time.perf_counter() - start

        row = {
            "schema_version": CSV_SCHEMA_VERSION,
            "kind": config.kind,
            "n": n,
            "num_classes": num_classes,
            "instance": idx,
            "algorithm": algorithm,
            "mean_cost": "",
            "std_err": "",
            "lb_mean": "",
            "ratio": "",
            "build_seconds": repr(build_seconds),
            "simulate_seconds": repr(sim_seconds),
        }
        if costs:
            m = len(costs)
            mean = sum(costs, Fraction(0)) / m
            row["mean_cost"] = repr(float(mean))
            if m > 1:
                var = sum((c - mean) ** 2 for c in costs) / (m - 1)
                row["std_err"] = repr(float(var / m) ** 0.5)
            else:
                row["std_err"] = repr(0.0)
            if lbs:
                lb_mean = sum(lbs, Fraction(0)) / m
                row["lb_mean"] = repr(float(lb_mean))
                if lb_mean > 0:
                    row["ratio"] = repr(float(mean / lb_mean))
        rows.append(row)
    return rows


def _aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean per-instance ratio over each (kind, class count, algorithm) cell."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        if row["ratio"] == "":
            continue
        key = (row["kind"], row["num_classes"], row["algorithm"])
        groups.setdefault(key, []).append(float(row["ratio"]))
    out = []
    for (kind, num_classes, algorithm), ratios in sorted(groups.items()):
        out.append(
            {
                "schema_version": CSV_SCHEMA_VERSION,
                "kind": kind,
                "num_classes": num_classes,
                "algorithm": algorithm,
                "mean_ratio": repr(sum(ratios) / len(ratios)),
                "num_instances": len(ratios),
            }
        )
    return out


def format_aggregate_table(aggregate: Sequence[dict]) -> str:
    """Plain-text table: one row per (kind, class count), one column per algorithm."""
    algorithms = sorted({row["algorithm"] for row in aggregate})
    cells: dict[tuple, dict[str, str]] = {}
    for row in aggregate:
        key = (row["kind"], row["num_classes"])
        cells.setdefault(key, {})[row["algorithm"]] = f"{float(row['mean_ratio']):.2f}"
    lines = ["Average performance ratio vs. per-realization lower bound", ""]
    header = f"{'instance type':<28}" + "".join(f"{a:>10}" for a in algorithms)
    lines.append(header)
    lines.append("-" * len(header))
    for (kind, num_classes), by_alg in sorted(cells.items()):
        label = f"{kind}, B={num_classes}"
        lines.append(
            f"{label:<28}" + "".join(f"{by_alg.get(a, '-'):>10}" for a in algorithms)
        )
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
