"""Unconditional (stationary) return moments and their closed-form proxies.

Exact moments integrate the conditional formulas against the stationary
share density on the solution grid:

* premium  = E[mu_S(w)] - r_f
* vol      = sqrt(E[ ||sigma_S(w)||^2 ])   (root of the mean squared
  loading, not the mean loading)
* pd       = exp(E[ log(phi_S(w)/w) ])
* sd_log_pd = sqrt(Var[ log(phi_S(w)/w) ])

The calibration proxies replace the elasticity with its first-order
expansion around the long-run mean share, which needs only three density
moments (E[w], E[w(1-w)], E[w^2(1-w)]) and is exact when rho = 0:

    premium ~ gamma*sigma_c^2
              + gamma*rho*sigma_c*nu * E[w(1-w)] / wbar * (1+lam/delta)^-2 * (2+lam/delta)
              - gamma*rho*sigma_c*nu * E[w^2(1-w)] / (wbar*(1+lam/delta))^2
              - sigma_c*theta_star

    pd      ~ (1/delta) * exp( -(lam*wbar/(lam+delta)) * (E[w]-wbar) )

Both are linear in gamma given delta, which is what makes the calibration
solve in :mod:`alphameu.calibration` nearly closed form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

_log = logging.getLogger(__name__)

from .equilibrium import EquilibriumConstants
from .errors import ConfigError, GridMismatch
from .ode import PriceSolution
from .params import EndowmentParams, MeanRevertingQuadratic, ModelConfig
from .stochastic import StationaryDensity, density_moments


@dataclass(frozen=True)
class UnconditionalMoments:
    premium: float
    vol: float
    pd: float
    sd_log_pd: float
    r_f: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ShareMoments:
    """Density moments feeding the calibration proxies (preference-free)."""

    mean: float
    mean_w_1mw: float
    mean_w2_1mw: float

    @classmethod
    def from_density(cls, density: StationaryDensity) -> "ShareMoments":
        return cls(
            mean=density_moments(density, lambda x: x),
            mean_w_1mw=density_moments(density, lambda x: x * (1.0 - x)),
            mean_w2_1mw=density_moments(density, lambda x: x**2 * (1.0 - x)),
        )


def unconditional_moments(
    config: ModelConfig,
    constants: EquilibriumConstants,
    solution: PriceSolution,
    density: StationaryDensity,
) -> UnconditionalMoments:
    """All five stationary moments by quadrature on the shared grid."""
    if solution.grid.n != density.grid.n or not np.array_equal(
        solution.grid.points, density.grid.points
    ):
        raise GridMismatch("solution and density must share the same grid")
    if solution.phi_h is None:
        raise GridMismatch("solution must be completed with phi_h before moments")

    e = config.endowment
    gamma = config.preferences.gamma
    x = solution.grid.points
    p = density.p
    sig_w = np.asarray(config.share.sigma(x), dtype=float)
    elast = solution.d_phi_s / solution.phi_s

    premium_cond = (
        gamma * e.sigma_c**2
        + gamma * config.rho * e.sigma_c * sig_w * elast
        - e.sigma_c * constants.theta_star
    )
    vol2_cond = (
        e.sigma_c**2 + 2.0 * config.rho * e.sigma_c * sig_w * elast + (sig_w * elast) ** 2
    )
    log_pd = np.log(solution.phi_s / x)

    premium = float(np.trapezoid(premium_cond * p, x))
    vol2 = float(np.trapezoid(vol2_cond * p, x))
    e_log_pd = float(np.trapezoid(log_pd * p, x))
    var_log_pd = float(np.trapezoid((log_pd - e_log_pd) ** 2 * p, x))

    # log(pd) diverges toward the left boundary; verify (not assume) that the
    # density kills the tail's contribution to the mean
    k = max(2, x.size // 100)
    tail = abs(float(np.trapezoid(log_pd[: k + 1] * p[: k + 1], x[: k + 1])))
    if tail > 1e-8 * max(1.0, abs(e_log_pd)):
        _log.warning(
            "near-zero tail contributes %.2e to E[log pd] (mean %.4f)", tail, e_log_pd
        )
    return UnconditionalMoments(
        premium=premium,
        vol=math.sqrt(vol2),
        pd=math.exp(e_log_pd),
        sd_log_pd=math.sqrt(max(0.0, var_log_pd)),
        r_f=constants.r_f,
    )


def approx_premium(
    endowment: EndowmentParams,
    rho: float,
    share: MeanRevertingQuadratic,
    share_moments: ShareMoments,
    gamma: float,
    delta: float,
    theta_star: float,
) -> float:
    """First-order proxy of the unconditional premium (exact when rho = 0)."""
    ratio = share.lam / delta
    elasticity_part = (
        share_moments.mean_w_1mw / share.omega_bar * (1.0 + ratio) ** -2 * (2.0 + ratio)
        - share_moments.mean_w2_1mw / (share.omega_bar * (1.0 + ratio)) ** 2
    )
    return (
        gamma * endowment.sigma_c**2
        + gamma * rho * endowment.sigma_c * share.nu * elasticity_part
        - endowment.sigma_c * theta_star
    )


def approx_pd_ratio(
    share: MeanRevertingQuadratic, share_moments: ShareMoments, delta: float
) -> float:
    """First-order proxy of exp(E[log price-dividend ratio])."""
    slope = share.lam * share.omega_bar / (share.lam + delta)
    return math.exp(-slope * (share_moments.mean - share.omega_bar)) / delta


def approx_premium_from_config(
    config: ModelConfig, constants: EquilibriumConstants, share_moments: ShareMoments
) -> float:
    """Proxy premium at a full configuration's own constants."""
    if not isinstance(config.share, MeanRevertingQuadratic):
        raise ConfigError("the premium proxy is specific to MeanRevertingQuadratic dynamics")
    return approx_premium(
        config.endowment,
        config.rho,
        config.share,
        share_moments,
        config.preferences.gamma,
        constants.delta,
        constants.theta_star,
    )


def approx_pd_from_config(
    config: ModelConfig, constants: EquilibriumConstants, share_moments: ShareMoments
) -> float:
    """Proxy price-dividend level at a full configuration's own constants."""
    if not isinstance(config.share, MeanRevertingQuadratic):
        raise ConfigError("the pd proxy is specific to MeanRevertingQuadratic dynamics")
    return approx_pd_ratio(config.share, share_moments, constants.delta)
