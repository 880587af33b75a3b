"""Closed-form equilibrium constants.

Everything scalar about the equilibrium is closed form.  With the extreme
consumption propensities delta_pm from the growth condition, the
ambiguity-implied drift tilt is the delta-weighted combination

    theta_star = (-alpha*kappa/delta_minus + (1-alpha)*kappa/delta_plus)
                 / (alpha/delta_minus + (1-alpha)/delta_plus),

the equilibrium consumption propensity is

    delta = phi - (1-gamma) * (mu_c + theta_star*sigma_c - gamma/2*sigma_c^2)

(equivalently the weighted harmonic mean of delta_plus and delta_minus),
and the risk-free rate is

    r_f = phi + gamma*mu_c - gamma*(1+gamma)/2*sigma_c^2 + gamma*theta_star*sigma_c.

The value constants v_lower/v_upper enter the deviation-payoff functional
in :mod:`alphameu.returns`; they satisfy (1-gamma)*v + 1/phi = 1/delta_pm,
which is what makes the harmonic-mean identity for delta hold.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConditionViolated, ConfigError, NonpositivePropensity
from .params import AmbiguityParams, ModelConfig, ellipticity_sups, validate_growth


@dataclass(frozen=True)
class EquilibriumConstants:
    delta_plus: float
    delta_minus: float
    theta_star: float
    delta: float
    v_lower: float
    v_upper: float
    r_f: float

    def to_dict(self) -> dict:
        return asdict(self)


def theta_star(alpha: float, kappa: float, delta_plus: float, delta_minus: float) -> float:
    """Constant drift tilt that reproduces the ambiguous agent's prices.

    Exactly zero when kappa is zero; -kappa at alpha=1 and +kappa at alpha=0.
    """
    if not (delta_plus > 0 and delta_minus > 0):
        raise NonpositivePropensity(min(delta_plus, delta_minus), "delta_pm")
    if not 0 <= alpha <= 1:
        raise ConfigError(f"alpha must lie in [0,1], got {alpha}")
    if not kappa >= 0:
        raise ConfigError(f"kappa must be nonnegative, got {kappa}")
    if kappa == 0.0:
        return 0.0
    wm = alpha / delta_minus
    wp = (1.0 - alpha) / delta_plus
    return kappa * (wp - wm) / (wm + wp)


def consumption_propensity(config: ModelConfig, theta: float) -> float:
    """Equilibrium percentage of wealth consumed (per year)."""
    e, p = config.endowment, config.preferences
    delta = p.phi - (1.0 - p.gamma) * (e.mu_c + theta * e.sigma_c - 0.5 * p.gamma * e.sigma_c**2)
    if not delta > 0:
        raise NonpositivePropensity(delta)
    return delta


def risk_free_rate(config: ModelConfig, theta: float) -> float:
    """Constant risk-free rate; independent of the share state."""
    e, p = config.endowment, config.preferences
    return (
        p.phi
        + p.gamma * e.mu_c
        - 0.5 * p.gamma * (1.0 + p.gamma) * e.sigma_c**2
        + p.gamma * theta * e.sigma_c
    )


def value_constants(config: ModelConfig) -> tuple[float, float]:
    """Value constants (v_lower, v_upper) of the deviation-payoff closed form.

    For gamma != 1 these are (1/delta_pm - 1/phi) / (1-gamma), with the
    pessimistic prior (delta_minus) giving v_lower.  Writing
    m_pm = mu_c +- kappa*sigma_c - gamma/2*sigma_c^2, the identical form

        v = m / (phi * delta)

    holds for every gamma and is the analytic gamma -> 1 limit, so a single
    expression serves both branches.  phi = 0 is rejected: the constants
    contain 1/phi.
    """
    e, p, a = config.endowment, config.preferences, config.ambiguity
    if p.phi == 0.0:
        raise ConfigError("phi = 0 is outside the domain of the value constants")
    dplus, dminus = validate_growth(config)
    m_minus = e.mu_c - a.kappa * e.sigma_c - 0.5 * p.gamma * e.sigma_c**2
    m_plus = e.mu_c + a.kappa * e.sigma_c - 0.5 * p.gamma * e.sigma_c**2
    v_lower = m_minus / (p.phi * dminus)
    v_upper = m_plus / (p.phi * dplus)
    return v_lower, v_upper


def build_equilibrium(config: ModelConfig, validate: bool = True) -> EquilibriumConstants:
    """Assemble all equilibrium constants for a configuration.

    With ``validate`` (default) the drift-dominance condition is enforced;
    growth positivity is always enforced because the constants need it.
    """
    dplus, dminus = validate_growth(config)
    if validate:
        sup1, sup2 = ellipticity_sups(config)
        if not min(dplus, dminus) > max(sup1, sup2):
            raise ConditionViolated(min(dplus, dminus), max(sup1, sup2))
    theta = theta_star(config.ambiguity.alpha, config.ambiguity.kappa, dplus, dminus)
    delta = consumption_propensity(config, theta)
    v_lower, v_upper = value_constants(config)
    return EquilibriumConstants(
        delta_plus=dplus,
        delta_minus=dminus,
        theta_star=theta,
        delta=delta,
        v_lower=v_lower,
        v_upper=v_upper,
        r_f=risk_free_rate(config, theta),
    )


def boundary_ambiguity_config(config: ModelConfig, theta: float) -> ModelConfig:
    """Config whose ambiguity block reproduces a directly chosen tilt.

    Radius |theta| with full aversion (alpha = 1) for a pessimistic tilt or
    full seeking (alpha = 0) for an optimistic one; build_equilibrium on the
    result yields theta_star == theta exactly.  Deviation-payoff evaluations
    need this consistent pairing of config and constants.
    """
    from dataclasses import replace

    ambiguity = AmbiguityParams(kappa=abs(theta), alpha=1.0 if theta < 0 else 0.0)
    return replace(config, ambiguity=ambiguity)


def constants_from_theta(config: ModelConfig, theta: float) -> EquilibriumConstants:
    """Constants for a directly chosen drift tilt.

    Sweeps and calibrated tables treat theta_star as the primitive instead
    of (alpha, kappa).  The implied ambiguity radius is |theta|, putting the
    tilt at one endpoint of its admissible interval, so all invariants of
    :class:`EquilibriumConstants` still hold.  Pair these constants with
    :func:`boundary_ambiguity_config` when evaluating the deviation payoff,
    whose closed form reads (alpha, kappa) from the config.
    """
    e, p = config.endowment, config.preferences
    base = e.mu_c - 0.5 * p.gamma * e.sigma_c**2
    kappa = abs(theta)
    dplus = p.phi - (1.0 - p.gamma) * (base + kappa * e.sigma_c)
    dminus = p.phi - (1.0 - p.gamma) * (base - kappa * e.sigma_c)
    if not dplus > 0:
        raise NonpositivePropensity(dplus, "delta_plus")
    if not dminus > 0:
        raise NonpositivePropensity(dminus, "delta_minus")
    delta = consumption_propensity(config, theta)
    if p.phi == 0.0:
        raise ConfigError("phi = 0 is outside the domain of the value constants")
    v_lower = (e.mu_c - kappa * e.sigma_c - 0.5 * p.gamma * e.sigma_c**2) / (p.phi * dminus)
    v_upper = (e.mu_c + kappa * e.sigma_c - 0.5 * p.gamma * e.sigma_c**2) / (p.phi * dplus)
    return EquilibriumConstants(
        delta_plus=dplus,
        delta_minus=dminus,
        theta_star=theta,
        delta=delta,
        v_lower=v_lower,
        v_upper=v_upper,
        r_f=risk_free_rate(config, theta),
    )
