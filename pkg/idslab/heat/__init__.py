from .lab import (
    check_domain_monotonicity,
    check_potential_monotonicity,
    fit_decay,
    kernel,
    kernel_moments,
    margin_self_consistency,
    metric_distances,
    nftb_experiment,
    required_thickness,
)

__all__ = [
    "check_domain_monotonicity",
    "check_potential_monotonicity",
    "fit_decay",
    "kernel",
    "kernel_moments",
    "margin_self_consistency",
    "metric_distances",
    "nftb_experiment",
    "required_thickness",
]
