"""Grushin heat kernel: bridge Monte Carlo densities and large-deviation rates."""

from ._core import (
    DensityEstimate,
    GrushinParams,
    asymptotic_rate_constant,
    besov_norm_linear,
    bridge_max_tail,
    c_gamma,
    c_gamma_upper_bound,
    conditional_density,
    degenerate_bounds,
    estimate_density,
    minimize_phi,
    on_diagonal_experiment,
    psi_minimize,
    sample_bridge,
)

__all__ = [
    "DensityEstimate",
    "GrushinParams",
    "asymptotic_rate_constant",
    "besov_norm_linear",
    "bridge_max_tail",
    "c_gamma",
    "c_gamma_upper_bound",
    "conditional_density",
    "degenerate_bounds",
    "estimate_density",
    "minimize_phi",
    "on_diagonal_experiment",
    "psi_minimize",
    "sample_bridge",
]
