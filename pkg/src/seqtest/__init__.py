"""Non-adaptive sequential testing for score classification and halfspace evaluation."""

from .batched import BatchedPolicy, run_batched, start_phase
from .core import (
    ClassPartition,
    Item,
    ProbeState,
    SscInstance,
    apply_flips,
    classify,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    reduce_negative_weights,
    stopping_check,
)
from .errors import InvalidInputError, InvalidInstanceError, ParameterError, SeqtestError
from .halfspace import (
    Aggregator,
    ExdsheInstance,
    Halfspace,
    HalfspaceSystem,
    Witness,
    build_list_exdshe,
    exdshe_instance_from_dict,
    halfspace_rewards,
    simulate_until_witness,
    verify_witness,
)
from .knapsack import KnapItem, KnapResult, lp_value_at, solve_fractional
from .lowerbound import CoverInstance, CoverResult, min_cost_cover, realization_lb
from .simulate import (
    CostSummary,
    RunResult,
    estimate,
    exact_expected_cost,
    phase_survival_report,
    random_baseline,
    run_list,
    sample_realizations,
)
from .ssclass import NonAdaptiveList, build_list, universal_property_check
from .stochknap import (
    BernoulliReward,
    PolicyParams,
    ScaleReport,
    scale_ladder,
    scale_table,
    stoch_knap,
    theory_multiplier,
    truncated_reward,
)
from .bench import (
    ExperimentConfig,
    generate_instance,
    load_config,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "Aggregator",
    "BatchedPolicy",
    "BernoulliReward",
    "ClassPartition",
    "CostSummary",
    "CoverInstance",
    "CoverResult",
    "ExdsheInstance",
    "ExperimentConfig",
    "Halfspace",
    "HalfspaceSystem",
    "InvalidInputError",
    "InvalidInstanceError",
    "Item",
    "KnapItem",
    "KnapResult",
    "NonAdaptiveList",
    "ParameterError",
    "PolicyParams",
    "ProbeState",
    "RunResult",
    "ScaleReport",
    "SeqtestError",
    "SscInstance",
    "Witness",
    "apply_flips",
    "build_list",
    "build_list_exdshe",
    "classify",
    "estimate",
    "exact_expected_cost",
    "exdshe_instance_from_dict",
    "generate_instance",
    "halfspace_rewards",
    "instance_from_dict",
    "instance_to_dict",
    "load_config",
    "load_instance",
    "lp_value_at",
    "min_cost_cover",
    "phase_survival_report",
    "random_baseline",
    "realization_lb",
    "reduce_negative_weights",
    "run_batched",
    "run_experiment",
    "run_list",
    "sample_realizations",
    "scale_ladder",
    "scale_table",
    "simulate_until_witness",
    "solve_fractional",
    "start_phase",
    "stoch_knap",
    "stopping_check",
    "theory_multiplier",
    "truncated_reward",
    "universal_property_check",
    "verify_witness",
]
