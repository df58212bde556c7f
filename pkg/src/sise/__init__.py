"""Smoothed nonparametric survival estimation for censored screening data.

The package estimates the distribution of an event time that is only known
to lie between consecutive screening visits (or before the first / after the
last). A self-consistency NPMLE supplies the raw step estimate, a Gaussian
kernel smooths it on a uniform grid, and the bandwidth is chosen by a
penalized likelihood score that charges each turning point of the density
the log of a sample-size measure.

Quick start::

    import numpy as np
    from sise import SmoothedSurvivalEstimator

    intervals = np.array([[40.0, 52.5], [61.0, np.inf], [0.0, 38.2]])
    est = SmoothedSurvivalEstimator().fit(intervals)
    grid, survival = est.survival_curve()
"""

from .bandwidth import BandwidthResult, OptimizerConfig, bic_objective, optimize_bandwidth
from .data import (
    INF,
    CensoredInterval,
    ObservationRecord,
    TimeFrame,
    estimate_time_frame,
    frame_from_intervals,
    summarize_all,
    summarize_observations,
    validate_records,
)
from .estimator import PipelineResult, SmoothedSurvivalEstimator, smooth_step_fit
from .exceptions import (
    AllCensoredWarning,
    DegenerateDensityError,
    EmptyDataError,
    EmptyFrameError,
    EmptyIntervalError,
    EstimationError,
    InvalidConfigError,
    LengthMismatchError,
    MonotonicityViolation,
    NegativeBandwidthError,
    NegativeTimeError,
    NoFeasibleSupportError,
    NonConvergenceWarning,
    ParseError,
    PenaltyFloorWarning,
    StepTooCoarseWarning,
    TooFewBinsError,
    ZeroLikelihoodError,
    ZeroPrevalenceError,
)
from .inference import (
    ConfidenceBands,
    PrevalenceEstimate,
    band_coverage,
    bootstrap_bands,
    impute_event_time,
    impute_event_times,
    observed_prevalence,
    prevalence_from_fit,
)
from .npmle import (
    GriddedDensity,
    KaplanMeierEstimator,
    StepEstimate,
    TurnbullEstimator,
    grid_to_survival,
    km_fit,
    step_to_grid,
    turnbull_fit,
    turnbull_intervals,
)
from .simbench import (
    ScenarioConfig,
    ScenarioResult,
    SimulatedCohort,
    lognormal_params,
    presets,
    rise,
    rmse_imputation,
    run_scenario,
    run_split_evaluation,
    s1_cell,
    s1_grid,
    simulate_cohort,
    true_cdf,
    true_survival,
)
from .smoothing import (
    FitReport,
    count_turning_points,
    effective_sample_size,
    interval_log_likelihood,
    nw_smooth,
    penalty_weight,
    smoothing_bic,
)

__version__ = "0.1.0"

__all__ = [
    "AllCensoredWarning",
    "BandwidthResult",
    "CensoredInterval",
    "ConfidenceBands",
    "DegenerateDensityError",
    "EmptyDataError",
    "EmptyFrameError",
    "EmptyIntervalError",
    "EstimationError",
    "FitReport",
    "GriddedDensity",
    "INF",
    "InvalidConfigError",
    "KaplanMeierEstimator",
    "LengthMismatchError",
    "MonotonicityViolation",
    "NegativeBandwidthError",
    "NegativeTimeError",
    "NoFeasibleSupportError",
    "NonConvergenceWarning",
    "ObservationRecord",
    "OptimizerConfig",
    "ParseError",
    "PenaltyFloorWarning",
    "PipelineResult",
    "ScenarioConfig",
    "ScenarioResult",
    "SimulatedCohort",
    "SmoothedSurvivalEstimator",
    "StepEstimate",
    "StepTooCoarseWarning",
    "TimeFrame",
    "TooFewBinsError",
    "TurnbullEstimator",
    "ZeroLikelihoodError",
    "ZeroPrevalenceError",
    "band_coverage",
    "bic_objective",
    "bootstrap_bands",
    "count_turning_points",
    "effective_sample_size",
    "estimate_time_frame",
    "frame_from_intervals",
    "grid_to_survival",
    "impute_event_time",
    "impute_event_times",
    "interval_log_likelihood",
    "km_fit",
    "lognormal_params",
    "nw_smooth",
    "observed_prevalence",
    "PrevalenceEstimate",
    "prevalence_from_fit",
    "optimize_bandwidth",
    "penalty_weight",
    "presets",
    "rise",
    "rmse_imputation",
    "run_scenario",
    "run_split_evaluation",
    "s1_cell",
    "s1_grid",
    "simulate_cohort",
    "smooth_step_fit",
    "smoothing_bic",
    "step_to_grid",
    "summarize_all",
    "summarize_observations",
    "true_cdf",
    "true_survival",
    "turnbull_fit",
    "turnbull_intervals",
    "validate_records",
    "__version__",
]
