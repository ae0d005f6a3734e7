"""Training-dynamics example scoring, ratio-adaptive coreset sampling, and a
two-point gradient-descent test bench."""

from .coreset import (
    CoresetManifest,
    NoiseReport,
    moon_export,
    noise_report,
    select,
    stability_report,
)
from .dynlog import DynamicsLog, EpochRecord, read_log, slice_epochs, write_log
from .sampler import (
    BetaParams,
    PruneConfig,
    Strategy,
    beta_params,
    beta_pdf,
    coreset_size,
    mu_top,
    sample_without_replacement,
    sampling_weights,
)
from .scores import (
    Metric,
    PRESETS,
    ScoreTable,
    aum_score,
    dual_score,
    dyn_unc,
    el2n_score,
    entropy_score,
    forgetting_score,
    spearman,
    windowed_uncertainty,
)
from .synthetic import (
    TwoPointConfig,
    TwoPointTrajectory,
    assumption_check,
    crossing_times,
    eta_stability_bound,
    generate_linear_log,
    simulate_two_point,
    two_gaussian_points,
    window_stats,
)

__version__ = "0.1.0"

__all__ = [
    "BetaParams",
    "CoresetManifest",
    "DynamicsLog",
    "EpochRecord",
    "Metric",
    "NoiseReport",
    "PRESETS",
    "PruneConfig",
    "ScoreTable",
    "Strategy",
    "TwoPointConfig",
    "TwoPointTrajectory",
    "assumption_check",
    "aum_score",
    "beta_params",
    "beta_pdf",
    "coreset_size",
    "crossing_times",
    "dual_score",
    "dyn_unc",
    "el2n_score",
    "entropy_score",
    "eta_stability_bound",
    "forgetting_score",
    "generate_linear_log",
    "moon_export",
    "mu_top",
    "noise_report",
    "read_log",
    "sample_without_replacement",
    "sampling_weights",
    "select",
    "simulate_two_point",
    "slice_epochs",
    "spearman",
    "stability_report",
    "two_gaussian_points",
    "window_stats",
    "windowed_uncertainty",
    "write_log",
]
