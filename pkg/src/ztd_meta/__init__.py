"""Meta-learned trust-threshold policies for zero-trust account defense."""

__version__ = "0.1.0"

from .config import (ParseError, RunConfig, ValidationError, config_from_dict,
                     load_config)
from .estimator import MetaThresholdDefense
from .evaluate import (EvaluationReport, PolicyRow, ScenarioDetail,
                       avg_baseline_threshold, config_digest,
                       evaluate_policies, find_worst_scenario,
                       optimal_threshold, sampled_baseline_threshold,
                       sweep_adapted_thresholds, worst_case_report)
from .meta import (MetaTrainerState, ScenarioSet, TrainResult, adapt,
                   foml_step, mc_objective, sga_step, simplex_project, train)
from .pomdp import (BASELINE_CONFIG, BASELINE_SCENARIO, Belief,
                    HorizonTooLarge, PomdpConfig, RolloutRecord, Scenario,
                    ThresholdPolicy, ZeroLikelihood, belief_update,
                    exact_value, mc_value_estimate, observation_matrix,
                    policy_act, rollout, transition_matrix)
from .scenarios import (DegenerateHistogram, EmpiricalScenarioDist,
                        MeanOutOfSupport, NegativeCount, ScaledBeta,
                        ValidityExhausted, ingest_histogram, sample_scenarios,
                        scaled_beta_from_mean, validity_interval)
from .spsa import SpsaSchedule, project_unit_interval, spsa_gradient

__all__ = [
    "BASELINE_CONFIG", "BASELINE_SCENARIO", "Belief", "DegenerateHistogram",
    "EmpiricalScenarioDist", "EvaluationReport", "HorizonTooLarge",
    "MeanOutOfSupport", "MetaThresholdDefense", "MetaTrainerState",
    "NegativeCount", "ParseError", "PolicyRow", "PomdpConfig",
    "RolloutRecord", "RunConfig", "ScaledBeta", "Scenario", "ScenarioDetail",
    "ScenarioSet", "SpsaSchedule", "ThresholdPolicy", "TrainResult",
    "ValidationError", "ValidityExhausted", "ZeroLikelihood", "adapt",
    "avg_baseline_threshold", "belief_update", "config_digest",
    "config_from_dict", "evaluate_policies", "exact_value",
    "find_worst_scenario", "foml_step", "ingest_histogram", "load_config",
    "mc_objective", "mc_value_estimate", "observation_matrix", "optimal_threshold",
    "policy_act", "project_unit_interval", "rollout", "sample_scenarios",
    "sampled_baseline_threshold", "scaled_beta_from_mean", "sga_step",
    "simplex_project", "spsa_gradient", "sweep_adapted_thresholds", "train",
    "transition_matrix", "validity_interval", "worst_case_report",
]
