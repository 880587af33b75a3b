"""Equilibrium asset pricing for an alpha-maxmin representative agent.

A two-tree pure-exchange economy (stock dividend plus labor income summing
to the aggregate endowment) is priced under ambiguity about the endowment
growth rate.  The package computes the closed-form equilibrium constants,
solves the degenerate pricing equation for the price-endowment ratios,
derives conditional and stationary return moments, and calibrates the
structural and preference parameters to data — with every nontrivial
output cross-checked by an independent Monte-Carlo or closed-form oracle.
"""

__version__ = "0.1.0"

from .equilibrium import (
    EquilibriumConstants,
    boundary_ambiguity_config,
    build_equilibrium,
    constants_from_theta,
    consumption_propensity,
    risk_free_rate,
    theta_star,
    value_constants,
)
from .errors import AlphaMeuError
from .ode import (
    Grid,
    PriceSolution,
    closed_form_elasticity,
    closed_form_phi_h,
    closed_form_phi_s,
    elasticity,
    phi_h_from_phi_s,
    solve_phi_s,
    solve_prices,
)
from .params import (
    AmbiguityParams,
    EndowmentParams,
    MeanRevertingQuadratic,
    ModelConfig,
    PreferenceParams,
    ShareDynamics,
    ValidationReport,
    table_config,
    validate_all,
    validate_assumption_sde,
    validate_ellipticity,
    validate_growth,
)
from .returns import Action, ConditionalReturns, conditional_returns, foc_residual, gamma_functional
from .stochastic import (
    FkEstimate,
    PathBundle,
    StationaryDensity,
    density_moments,
    feynman_kac_curve,
    feynman_kac_estimate,
    simulate_paths,
    stationary_density,
)
from .moments import ShareMoments, UnconditionalMoments, unconditional_moments

__all__ = [name for name in dir() if not name.startswith("_")]
