"""Network survival estimates of adult death rates from survey network reports."""

from ._netsurv import (
    AdjustmentFactors,
    Error,
    __version__,
    apply_sensitivity,
    conditional_q,
    deaths_per_interview,
    estimate,
    imperfect_sampling_index,
    percentile_interval,
    rate_to_prob,
    run_command,
    simulate_truth,
)

__all__ = [
    "AdjustmentFactors",
    "Error",
    "__version__",
    "apply_sensitivity",
    "conditional_q",
    "deaths_per_interview",
    "estimate",
    "imperfect_sampling_index",
    "percentile_interval",
    "rate_to_prob",
    "run_command",
    "simulate_truth",
]
