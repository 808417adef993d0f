"""Command-line interface.

Subcommands:

* ``build-list``  instance JSON -> probe-list JSON
* ``simulate``    instance (+ optional list) -> per-realization CSV
* ``lowerbound``  instance + realizations -> per-realization lower-bound CSV
* ``bench``       experiment config (TOML/JSON) -> results + aggregate table
* ``verify``      run the bundled brute-force oracle checks

Instance files are dispatched on their keys: ``alphas`` marks a score
classification instance, ``halfspaces`` a halfspace system.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .batched import run_batched
from .bench import format_aggregate_table, load_config, run_experiment
from .core import SscInstance, apply_flips, as_fraction, instance_from_dict
from .errors import InvalidInputError, SeqtestError
from .halfspace import (
    ExdsheInstance,
    build_list_exdshe,
    exdshe_instance_from_dict,
    simulate_until_witness,
)
from .lowerbound import realization_lb
from .simulate import run_list, sample_realizations
from .ssclass import NonAdaptiveList, build_list
from .stochknap import PolicyParams
from .verify import run_all


def load_problem(path: str) -> tuple[Union[SscInstance, ExdsheInstance], frozenset[int]]:
    """Load either instance flavor; returns the flipped-index set (empty for halfspaces)."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if "halfspaces" in data:
        return exdshe_instance_from_dict(data), frozenset()
    if "alphas" in data:
        return instance_from_dict(data)
    raise InvalidInputError(f"{path}: expected an 'alphas' or 'halfspaces' key")


def _params(args: argparse.Namespace) -> PolicyParams:
    kwargs = {}
    if args.epsilon is not None:
        kwargs["epsilon"] = as_fraction(args.epsilon, "epsilon")
    if args.multiplier is not None:
        kwargs["multiplier"] = as_fraction(args.multiplier, "multiplier")
    if args.mode is not None:
        kwargs["mode"] = args.mode
    return PolicyParams(**kwargs)


def _build(problem, params: PolicyParams) -> NonAdaptiveList:
    if isinstance(problem, ExdsheInstance):
        return build_list_exdshe(problem.system, problem.items, params)
    return build_list(problem, params)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_build_list(args) -> int:
    problem, _ = load_problem(args.instance)
    plan = _build(problem, _params(args))
    _emit(json.dumps(plan.to_dict(), indent=2) + "\n", args.output)
    return 0


def _load_realizations(args, problem, flips) -> list[tuple[int, ...]]:
    if args.realization_file:
        with open(args.realization_file) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(
                    f"{args.realization_file}:{exc.lineno}: invalid JSON: {exc.msg}"
                ) from exc
        if not isinstance(data, list):
            raise InvalidInputError("realization file must hold a JSON array of bit arrays")
        return [apply_flips(bits, flips) for bits in data]
    return list(sample_realizations(problem, args.realizations, args.seed))


def _cmd_simulate(args) -> int:
    problem, flips = load_problem(args.instance)
    if args.list:
        plan = NonAdaptiveList.from_json(Path(args.list).read_text())
    else:
        plan = _build(problem, _params(args))
    realizations = _load_realizations(args, problem, flips)

    rows = []
    for t, bits in enumerate(realizations):
        if args.batched:
            override = (
                as_fraction(args.setup_cost, "setup cost") if args.setup_cost else None
            )
            result = run_batched(problem, plan, bits, setup_cost=override)
        elif isinstance(problem, SscInstance):
            result = run_list(problem, plan, bits)
        else:
            result = simulate_until_witness(problem, plan, bits)
        rows.append(
            {
                "realization": t,
                "probes": result.num_probes,
                "cost": str(result.cost),
                "result": result.outcome,
                "batches": result.batch_count,
            }
        )
    _write_csv(args.output, ("realization", "probes", "cost", "result", "batches"), rows)
    return 0


def _cmd_lowerbound(args) -> int:
    problem, flips = load_problem(args.instance)
    if not isinstance(problem, SscInstance):
        raise InvalidInputError("the lower bound is defined for score classification instances")
    realizations = _load_realizations(args, problem, flips)
    if not realizations:
        raise InvalidInputError("no realizations to evaluate")
    rows = []
    total = Fraction(0)
    for t, bits in enumerate(realizations):
        lb = realization_lb(problem, bits)
        total += lb
        rows.append({"realization": t, "lower_bound": str(lb)})
    rows.append({"realization": "mean", "lower_bound": str(total / len(realizations))})
    _write_csv(args.output, ("realization", "lower_bound"), rows)
    return 0


def _cmd_bench(args) -> int:
    config = load_config(args.config)
    if args.output:
        config = type(config)(**{**config.__dict__, "output_dir": args.output})
    report = run_experiment(config)
    sys.stdout.write(format_aggregate_table(report.aggregate))
    sys.stdout.write(f"\nwrote {report.results_path} and {report.aggregate_path}\n")
    return 0


def _cmd_verify(args) -> int:
    results = run_all()
    failures = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name}: {res.detail}")
        failures += not res.passed
    print(f"\n{len(results) - failures}/{len(results)} checks passed")
    return 1 if failures else 0


def _write_csv(output: Optional[str], columns: Sequence[str], rows) -> None:
    def dump(fh):
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)

    if output:
        with open(output, "w", newline="") as fh:
            dump(fh)
    else:
        dump(sys.stdout)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqtest",
        description="Non-adaptive sequential testing policies and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_policy_flags(p):
        p.add_argument("--epsilon", help="per-call failure tolerance (default 3/20)")
        p.add_argument("--capital-c", dest="multiplier", help="budget multiplier override")
        p.add_argument("--mode", choices=("practical", "theory"), help="multiplier mode")

    p = sub.add_parser("build-list", help="build the non-adaptive probe list")
    p.add_argument("instance")
    p.add_argument("-o", "--output")
    add_policy_flags(p)
    p.set_defaults(func=_cmd_build_list)

    p = sub.add_parser("simulate", help="run a probe list over realizations")
    p.add_argument("instance")
    p.add_argument("--list", help="probe-list JSON (default: build it)")
    p.add_argument("--batched", action="store_true", help="batch phases, paying the setup cost")
    p.add_argument("--setup-cost", help="override the instance's per-batch setup cost")
    p.add_argument("--realizations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--realization-file", help="JSON array of outcome bit arrays")
    p.add_argument("-o", "--output")
    add_policy_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("lowerbound", help="per-realization information-theoretic lower bounds")
    p.add_argument("instance")
    p.add_argument("--realizations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--realization-file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_lowerbound)

    p = sub.add_parser("bench", help="run a benchmark grid from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory override")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="run the bundled oracle checks")
    p.set_defaults(func=_cmd_verify)

    return parser


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SeqtestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
