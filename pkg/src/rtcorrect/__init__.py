"""Reproduction-number estimation with group-dependent case detection.

When the probability of detecting a case varies across population groups and
the epidemic shifts between those groups, R_t estimated from detected cases
alone is biased. This package provides the simulator that reproduces the
effect, a corrected closed-form estimator using known per-group detection
rates, and a latent-count MCMC for full posterior inference (with or without
known rates).
"""

from .core import (
    GenerationInterval,
    GroupedSeries,
    RtSeries,
    SymptomaticRates,
    derive_seed,
    renewal_denominator,
    renewal_denominators,
    validate_generation_interval,
    weighted_totals,
)
from .estimators import (
    ErrorSummary,
    EstimatorOptions,
    estimate_rt_corrected,
    estimate_rt_naive,
    estimate_rt_true,
    rt_error_summary,
)
from .experiments import (
    Figure1Bundle,
    ReplicateReport,
    find_transition_window,
    run_figure1,
    run_replicates,
    scenario_config,
    write_report,
)
from .latent import (
    BetaPrior,
    LatentPosterior,
    McmcConfig,
    draw_rates_conditional,
    rt_posterior,
    sample_joint_unknown_rates,
    sample_latent_known_rates,
)
from .simulate import (
    ScenarioConfig,
    SimulationOutput,
    simulate,
    symptomatic_fraction,
    thin_symptomatics,
)

__version__ = "0.1.0"

__all__ = [
    "BetaPrior",
    "ErrorSummary",
    "EstimatorOptions",
    "Figure1Bundle",
    "GenerationInterval",
    "GroupedSeries",
    "LatentPosterior",
    "McmcConfig",
    "ReplicateReport",
    "RtSeries",
    "ScenarioConfig",
    "SimulationOutput",
    "SymptomaticRates",
    "derive_seed",
    "draw_rates_conditional",
    "estimate_rt_corrected",
    "estimate_rt_naive",
    "estimate_rt_true",
    "find_transition_window",
    "renewal_denominator",
    "renewal_denominators",
    "rt_error_summary",
    "rt_posterior",
    "run_figure1",
    "run_replicates",
    "sample_joint_unknown_rates",
    "sample_latent_known_rates",
    "scenario_config",
    "simulate",
    "symptomatic_fraction",
    "thin_symptomatics",
    "validate_generation_interval",
    "weighted_totals",
    "write_report",
]
