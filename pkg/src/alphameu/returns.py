"""Conditional asset returns and the intra-personal optimality check.

Given a price solution, Ito's lemma turns the ratios into per-asset drifts
and volatility loadings:

    mu_S(w)    = mu_c + [w + (mu(w) + rho*sigma_c*sigma(w)) phi_S'(w)
                 + sigma(w)^2/2 phi_S''(w)] / phi_S(w)
    sigma_S(w) = (sigma_c, sigma(w) phi_S'(w) / phi_S(w))

and symmetrically for human capital with cash-flow share 1-w.  The first
volatility loading of both assets is sigma_c identically: prices are
proportional to the endowment.

The equilibrium is characterized by a one-shot deviation payoff
Gamma(x, w; c, u_S, u_H): the rate of change of the agent's preference
value when she deviates to action (c, u_S, u_H) over an infinitesimal
window.  It is strictly concave on { c > 0, u_S + u_H >= 0 } and factors
as x^(1-gamma) times an action-dependent expression, so the market
clearing action

    (c, u_S, u_H) = (delta, delta*phi_S(w), delta*phi_H(w))

must zero its gradient for every w; :func:`foc_residual` measures that
gradient by central finite differences.  Gradients are reported relative
to delta^(-gamma), the factor multiplying the return terms inside Gamma,
which makes the stock-weight component equal (up to rounding) to the
pricing-equation residual divided by phi_S — a corrupted solution is
immediately visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import EquilibriumConstants
from .errors import DomainError
from .ode import PriceSolution
from .params import ModelConfig

FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class ConditionalReturns:
    omega: float
    mu_s: float
    mu_h: float
    sigma_s1: float
    sigma_s2: float
    sigma_h1: float
    sigma_h2: float
    premium: float
    vol_norm: float
    pd_ratio: float


@dataclass(frozen=True)
class Action:
    """Consumption propensity and portfolio weights of a one-shot deviation."""

    c: float
    u_s: float
    u_h: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"consumption propensity must be positive, got {self.c}")
        if self.u_s + self.u_h < 0:
            raise DomainError(
                f"u_s + u_h = {self.u_s + self.u_h:.6g} outside the closed-form domain"
            )


def _crra(c: float, gamma: float) -> float:
    if gamma == 1.0:
        return math.log(c)
    return (c ** (1.0 - gamma) - 1.0) / (1.0 - gamma)


def conditional_returns(
    config: ModelConfig,
    constants: EquilibriumConstants,
    solution: PriceSolution,
    omega: float,
) -> ConditionalReturns:
    """Drifts, volatility loadings, premium, and price-dividend ratio at omega."""
    e = config.endowment
    om = float(omega)
    phi_s = solution.phi_s_at(om)
    phi_h = solution.phi_h_at(om)
    d1 = solution.d_phi_s_at(om)
    d2 = solution.d2_phi_s_at(om)
    mu_w = float(config.share.mu(om))
    sig_w = float(config.share.sigma(om))

    adj_drift = mu_w + config.rho * e.sigma_c * sig_w
    mu_s = e.mu_c + (om + adj_drift * d1 + 0.5 * sig_w**2 * d2) / phi_s
    mu_h = e.mu_c + ((1.0 - om) + adj_drift * (-d1) + 0.5 * sig_w**2 * (-d2)) / phi_h
    sigma_s2 = sig_w * d1 / phi_s
    sigma_h2 = -sig_w * d1 / phi_h
    vol_norm = math.sqrt(
        e.sigma_c**2 + 2.0 * config.rho * e.sigma_c * sigma_s2 + sigma_s2**2
    )
    return ConditionalReturns(
        omega=om,
        mu_s=mu_s,
        mu_h=mu_h,
        sigma_s1=e.sigma_c,
        sigma_s2=sigma_s2,
        sigma_h1=e.sigma_c,
        sigma_h2=sigma_h2,
        premium=mu_s - constants.r_f,
        vol_norm=vol_norm,
        pd_ratio=phi_s / om,
    )


def returns_curve(
    config: ModelConfig, constants: EquilibriumConstants, solution: PriceSolution
) -> dict[str, np.ndarray]:
    """Premium, volatility, and price-dividend ratio at every grid point."""
    e = config.endowment
    x = solution.grid.points
    sig_w = np.asarray(config.share.sigma(x), dtype=float)
    elast = solution.d_phi_s / solution.phi_s
    premium = (
        config.preferences.gamma * e.sigma_c**2
        + config.preferences.gamma * config.rho * e.sigma_c * sig_w * elast
        - e.sigma_c * constants.theta_star
    )
    vol = np.sqrt(
        e.sigma_c**2 + 2.0 * config.rho * e.sigma_c * sig_w * elast + (sig_w * elast) ** 2
    )
    return {
        "omega": x,
        "premium": premium,
        "vol_norm": vol,
        "pd_ratio": solution.phi_s / x,
        "elasticity": elast,
    }


def gamma_functional(
    config: ModelConfig,
    constants: EquilibriumConstants,
    returns_at_omega: ConditionalReturns,
    x: float,
    action: Action,
) -> float:
    """One-shot deviation payoff Gamma(x, omega; c, u_S, u_H), exactly as displayed.

    Requires u_s + u_h >= 0 (enforced by :class:`Action`), where the
    worst/best-prior inner optimizations collapse to the endpoint tilts.
    """
    if not x > 0:
        raise DomainError(f"wealth must be positive, got {x}")
    p, a = config.preferences, config.ambiguity
    gamma = p.gamma
    delta = constants.delta
    ret = returns_at_omega

    v_mix = a.alpha * constants.v_lower + (1.0 - a.alpha) * constants.v_upper
    p_coef = (1.0 - gamma) * v_mix + 1.0 / p.phi
    k_coef = a.kappa * (
        -a.alpha * ((1.0 - gamma) * constants.v_lower + 1.0 / p.phi)
        + (1.0 - a.alpha) * ((1.0 - gamma) * constants.v_upper + 1.0 / p.phi)
    )
    dpow = delta ** (1.0 - gamma)

    u_sum = action.u_s + action.u_h
    w2 = action.u_s * ret.sigma_s2 + action.u_h * ret.sigma_h2
    drift_term = (
        -action.c
        + (1.0 - u_sum) * constants.r_f
        + action.u_s * ret.mu_s
        + action.u_h * ret.mu_h
    )
    quad = (
        (u_sum * config.endowment.sigma_c) ** 2
        + w2**2
        + 2.0 * config.rho * u_sum * config.endowment.sigma_c * w2
    )
    braces = (
        _crra(action.c, gamma)
        - (p.phi * dpow * v_mix + _crra(delta, gamma))
        + drift_term * p_coef * dpow
        + u_sum * config.endowment.sigma_c * k_coef * dpow
        - 0.5 * quad * gamma * p_coef * dpow
    )
    return x ** (1.0 - gamma) * braces


def equilibrium_action(solution: PriceSolution, omega: float) -> Action:
    """Market-clearing action (delta, delta*phi_S, delta*phi_H) at omega."""
    d = solution.delta
    return Action(
        c=d, u_s=d * solution.phi_s_at(omega), u_h=d * solution.phi_h_at(omega)
    )


def foc_residual(
    config: ModelConfig,
    constants: EquilibriumConstants,
    solution: PriceSolution,
    omega: float,
    rel_step: float = FD_REL_STEP,
) -> tuple[float, float, float]:
    """Scaled finite-difference gradient of Gamma at the market-clearing action.

    All three components vanish (to solver precision) exactly when the
    price solution satisfies the pricing equation at omega.  Wealth is
    fixed at 1; by homogeneity the maximizer does not depend on it.
    """
    ret = conditional_returns(config, constants, solution, omega)
    base = equilibrium_action(solution, omega)
    scale = solution.delta ** (-config.preferences.gamma)

    def g(c, u_s, u_h):
        return gamma_functional(config, constants, ret, 1.0, Action(c, u_s, u_h))

    out = []
    for i, val in enumerate((base.c, base.u_s, base.u_h)):
        h = rel_step * max(abs(val), 1e-3)
        args_p = [base.c, base.u_s, base.u_h]
        args_m = [base.c, base.u_s, base.u_h]
        args_p[i] = val + h
        args_m[i] = val - h
        out.append((g(*args_p) - g(*args_m)) / (2.0 * h * scale))
    return tuple(out)
