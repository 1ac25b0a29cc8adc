"""Distributionally robust state and mode estimation for Markov jump linear systems."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateEvidenceError, DrgpbError, FilterStepError,
                     ModelError, NumericalError, SingularInnovationError)
from .filter import (FilterConfig, FilterState, FilterTrace, RobustnessSchedule, check_state,
                     compute_mode_losses, drgpb_step, init_filter, merge_estimates, run_filter)
from .kalman import GaussianBelief, ModeStepOutput, gaussian_logpdf, kf_step
from .model import (MjlsModel, ScheduledModel, Trajectory, ValidationReport, make_rng,
                    sample_trajectory, validate_model)
from .modes import predict_mode_prior, update_mode_posterior
from .tvd import (LevelPartition, WaterfillResult, brute_force_oracle, partition_levels,
                  robust_value_equivalent, tvd_distance, waterfill)

__all__ = [
    "ConfigError", "DegenerateEvidenceError", "DrgpbError", "FilterConfig", "FilterState",
    "FilterStepError", "FilterTrace", "GaussianBelief", "LevelPartition", "MjlsModel",
    "ModeStepOutput", "ModelError", "NumericalError", "RobustnessSchedule", "ScheduledModel",
    "SingularInnovationError", "Trajectory", "ValidationReport", "WaterfillResult",
    "brute_force_oracle", "check_state", "compute_mode_losses", "drgpb_step",
    "gaussian_logpdf", "init_filter", "kf_step", "make_rng", "merge_estimates",
    "partition_levels", "predict_mode_prior", "robust_value_equivalent", "run_filter",
    "sample_trajectory", "tvd_distance", "update_mode_posterior", "validate_model", "waterfill",
]
