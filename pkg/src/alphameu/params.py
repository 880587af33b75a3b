"""Model parameters and standing-assumption validation.

The economy has two structural blocks: a geometric-Brownian aggregate
endowment (drift ``mu_c``, volatility ``sigma_c``) and a dividend-endowment
share process on (0,1) with state-dependent drift ``mu_omega`` and
volatility ``sigma_omega``.  Preferences add a discount rate, relative risk
aversion, and the ambiguity pair (radius ``kappa``, aversion weight
``alpha``).

Three validations must pass before anything downstream runs:

* share-dynamics regularity: positive volatility inside (0,1), vanishing
  volatility and inward-pointing drift at the boundaries, bounded
  derivatives;
* positive consumption propensities under the two extreme priors,

      delta_pm = phi - (1 - gamma) * (mu_c +- kappa*sigma_c - gamma/2*sigma_c^2) > 0;

* drift dominance for the pricing equation,

      min(delta_plus, delta_minus) > max( sup[b'(x)], sup[2 b'(x) + sigma_omega'(x)^2] ),

  where b' = mu_omega' + (1-gamma)*rho*sigma_c*sigma_omega'.

For the canonical mean-reverting quadratic dynamics the suprema are
analytic; custom dynamics fall back to probe-grid maximization, which can
only certify the bounds on the probe set.
"""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonpositivePropensity

# Offset used when a boundary limit has to be probed numerically.
_LIMIT_EPS = 1e-9
# |sigma_omega| below this at the probes counts as a vanishing boundary limit.
_SIGMA_LIMIT_TOL = 1e-6


@dataclass(frozen=True)
class EndowmentParams:
    """Aggregate endowment drift (per year) and volatility (per sqrt-year)."""

    mu_c: float
    sigma_c: float

    def __post_init__(self):
        if not self.sigma_c > 0:
            raise ConfigError(f"sigma_c must be positive, got {self.sigma_c}")


class ShareDynamics(abc.ABC):
    """Evaluable specification of the share process on (0,1).

    Implementations must be vectorized over numpy arrays.  Boundary limits
    default to evaluation near 0 and 1; override them when analytic values
    are available.
    """

    @abc.abstractmethod
    def mu(self, x):
        """Drift at x."""

    @abc.abstractmethod
    def sigma(self, x):
        """Volatility at x."""

    @abc.abstractmethod
    def mu_prime(self, x):
        """d(drift)/dx at x."""

    @abc.abstractmethod
    def sigma_prime(self, x):
        """d(volatility)/dx at x."""

    def mu_limit_at_zero(self) -> float:
        return float(self.mu(_LIMIT_EPS))

    def mu_limit_at_one(self) -> float:
        return float(self.mu(1.0 - _LIMIT_EPS))

    def sigma_limit_at_zero(self) -> float:
        return float(self.sigma(_LIMIT_EPS))

    def sigma_limit_at_one(self) -> float:
        return float(self.sigma(1.0 - _LIMIT_EPS))


@dataclass(frozen=True)
class MeanRevertingQuadratic(ShareDynamics):
    """Canonical share dynamics: mu(x) = lam*(omega_bar - x), sigma(x) = nu*x*(1-x)."""

    lam: float
    omega_bar: float
    nu: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if not 0 < self.omega_bar < 1:
            raise ConfigError(f"omega_bar must lie in (0,1), got {self.omega_bar}")
        if not self.nu > 0:
            raise ConfigError(f"nu must be positive, got {self.nu}")

    def mu(self, x):
        return self.lam * (self.omega_bar - np.asarray(x, dtype=float))

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        return self.nu * x * (1.0 - x)

    def mu_prime(self, x):
        return np.full_like(np.asarray(x, dtype=float), -self.lam)

    def sigma_prime(self, x):
        return self.nu * (1.0 - 2.0 * np.asarray(x, dtype=float))

    def mu_limit_at_zero(self) -> float:
        return self.lam * self.omega_bar

    def mu_limit_at_one(self) -> float:
        return self.lam * (self.omega_bar - 1.0)

    def sigma_limit_at_zero(self) -> float:
        return 0.0

    def sigma_limit_at_one(self) -> float:
        return 0.0

    def derivative_sups(self, drift_shift: float) -> tuple[float, float]:
        """Analytic suprema over (0,1) of b' and 2 b' + sigma'^2.

        ``drift_shift`` is the constant (1-gamma)*rho*sigma_c multiplying
        sigma_omega in the pricing drift.  With mu' = -lam constant and
        sigma' = nu*(1-2x) ranging over (-nu, nu):

            sup b'              = -lam + |drift_shift| * nu
            sup 2 b' + sigma'^2 = -2 lam + 2 |drift_shift| nu + nu^2

        (the quadratic in sigma' is convex, so the sup sits at sigma' = +-nu).
        """
        s = abs(drift_shift) * self.nu
        return -self.lam + s, -2.0 * self.lam + 2.0 * s + self.nu**2


@dataclass(frozen=True)
class PreferenceParams:
    """Subjective discount rate (may be negative) and relative risk aversion."""

    phi: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class AmbiguityParams:
    """Ambiguity radius kappa >= 0 and aversion weight alpha in [0,1]."""

    kappa: float
    alpha: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ConfigError(f"kappa must be nonnegative, got {self.kappa}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0,1], got {self.alpha}")


@dataclass(frozen=True)
class ModelConfig:
    endowment: EndowmentParams
    share: ShareDynamics
    rho: float
    preferences: PreferenceParams
    ambiguity: AmbiguityParams

    def __post_init__(self):
        if not abs(self.rho) <= 1:
            raise ConfigError(f"|rho| must be at most 1, got {self.rho}")

    @property
    def drift_shift(self) -> float:
        """(1-gamma)*rho*sigma_c, the share-drift tilt in the pricing equation."""
        return (1.0 - self.preferences.gamma) * self.rho * self.endowment.sigma_c

    def to_json_dict(self) -> dict:
        if not isinstance(self.share, MeanRevertingQuadratic):
            raise ConfigError("only MeanRevertingQuadratic share dynamics serialize to JSON")
        return {
            "endowment": {"mu_c": self.endowment.mu_c, "sigma_c": self.endowment.sigma_c},
            "share": {
                "lambda": self.share.lam,
                "omega_bar": self.share.omega_bar,
                "nu": self.share.nu,
            },
            "rho": self.rho,
            "preferences": {"phi": self.preferences.phi, "gamma": self.preferences.gamma},
            "ambiguity": {"kappa": self.ambiguity.kappa, "alpha": self.ambiguity.alpha},
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @staticmethod
    def from_json_dict(doc: dict) -> "ModelConfig":
        def take(obj: dict, where: str, keys: tuple[str, ...]) -> dict:
            if not isinstance(obj, dict):
                raise ConfigError(f"{where} must be a JSON object")
            unknown = set(obj) - set(keys)
            if unknown:
                raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
            missing = set(keys) - set(obj)
            if missing:
                raise ConfigError(f"missing keys in {where}: {sorted(missing)}")
            return {k: _as_number(obj[k], f"{where}.{k}") for k in keys}

        top = ("endowment", "share", "rho", "preferences", "ambiguity")
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - set(top)
        if unknown:
            raise ConfigError(f"unknown keys in config: {sorted(unknown)}")
        missing = set(top) - set(doc)
        if missing:
            raise ConfigError(f"missing keys in config: {sorted(missing)}")

        endow = take(doc["endowment"], "endowment", ("mu_c", "sigma_c"))
        share = take(doc["share"], "share", ("lambda", "omega_bar", "nu"))
        prefs = take(doc["preferences"], "preferences", ("phi", "gamma"))
        ambig = take(doc["ambiguity"], "ambiguity", ("kappa", "alpha"))
        return ModelConfig(
            endowment=EndowmentParams(**endow),
            share=MeanRevertingQuadratic(
                lam=share["lambda"], omega_bar=share["omega_bar"], nu=share["nu"]
            ),
            rho=_as_number(doc["rho"], "rho"),
            preferences=PreferenceParams(**prefs),
            ambiguity=AmbiguityParams(**ambig),
        )

    @staticmethod
    def from_json(text: str) -> "ModelConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return ModelConfig.from_json_dict(doc)


def _as_number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [
            f"[{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks
        ]

    def __str__(self) -> str:
        return "\n".join(self.lines())


def default_probe_grid(n: int = 4096) -> np.ndarray:
    """Uniform interior probes on [1e-4, 1 - 1e-4]."""
    return np.linspace(1e-4, 1.0 - 1e-4, n)


def _check_probe_grid(probe_grid) -> np.ndarray:
    grid = np.asarray(probe_grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("probe grid must be nonempty")
    if grid.min() <= 0.0 or grid.max() >= 1.0:
        raise ConfigError("probe grid must lie strictly inside (0,1)")
    return grid


def validate_assumption_sde(share: ShareDynamics, probe_grid=None) -> ValidationReport:
    """Check share-dynamics regularity and the four boundary-limit signs.

    Boundedness of the first derivatives is certified on the probe grid
    only; for the canonical quadratic dynamics the limits are analytic.
    """
    grid = default_probe_grid() if probe_grid is None else _check_probe_grid(probe_grid)

    sig = np.asarray(share.sigma(grid), dtype=float)
    mup = np.asarray(share.mu_prime(grid), dtype=float)
    sigp = np.asarray(share.sigma_prime(grid), dtype=float)

    checks = []
    pos = bool(np.all(sig > 0))
    checks.append(
        ValidationCheck("sigma_positive", pos, f"min sigma on probes = {sig.min():.3g}")
    )
    bounded = bool(np.all(np.isfinite(mup)) and np.all(np.isfinite(sigp)))
    checks.append(
        ValidationCheck(
            "derivatives_bounded",
            bounded,
            f"sup|mu'| = {np.max(np.abs(mup)):.3g}, sup|sigma'| = {np.max(np.abs(sigp)):.3g} on probes",
        )
    )
    mu0 = share.mu_limit_at_zero()
    mu1 = share.mu_limit_at_one()
    s0 = share.sigma_limit_at_zero()
    s1 = share.sigma_limit_at_one()
    checks.append(ValidationCheck("mu_limit_zero_positive", mu0 > 0, f"lim mu at 0 = {mu0:.3g}"))
    checks.append(ValidationCheck("mu_limit_one_negative", mu1 < 0, f"lim mu at 1 = {mu1:.3g}"))
    checks.append(
        ValidationCheck(
            "sigma_vanishes_at_zero", abs(s0) < _SIGMA_LIMIT_TOL, f"lim sigma at 0 = {s0:.3g}"
        )
    )
    checks.append(
        ValidationCheck(
            "sigma_vanishes_at_one", abs(s1) < _SIGMA_LIMIT_TOL, f"lim sigma at 1 = {s1:.3g}"
        )
    )
    return ValidationReport(tuple(checks))


def growth_propensities(config: ModelConfig) -> tuple[float, float]:
    """delta_plus, delta_minus without the positivity check."""
    e, p, a = config.endowment, config.preferences, config.ambiguity
    base = e.mu_c - 0.5 * p.gamma * e.sigma_c**2
    dplus = p.phi - (1.0 - p.gamma) * (base + a.kappa * e.sigma_c)
    dminus = p.phi - (1.0 - p.gamma) * (base - a.kappa * e.sigma_c)
    return dplus, dminus


def validate_growth(config: ModelConfig) -> tuple[float, float]:
    """Consumption propensities under the extreme priors; both must be positive."""
    dplus, dminus = growth_propensities(config)
    if not dplus > 0:
        raise NonpositivePropensity(dplus, "delta_plus")
    if not dminus > 0:
        raise NonpositivePropensity(dminus, "delta_minus")
    return dplus, dminus


def ellipticity_sups(config: ModelConfig, probe_grid=None) -> tuple[float, float]:
    """Suprema of b' and 2 b' + sigma'^2 for the pricing drift.

    Analytic for MeanRevertingQuadratic, otherwise grid maximization.
    """
    shift = config.drift_shift
    share = config.share
    if isinstance(share, MeanRevertingQuadratic):
        return share.derivative_sups(shift)
    grid = default_probe_grid() if probe_grid is None else _check_probe_grid(probe_grid)
    bprime = np.asarray(share.mu_prime(grid), dtype=float) + shift * np.asarray(
        share.sigma_prime(grid), dtype=float
    )
    sp2 = np.asarray(share.sigma_prime(grid), dtype=float) ** 2
    return float(np.max(bprime)), float(np.max(2.0 * bprime + sp2))


def validate_ellipticity(
    config: ModelConfig, delta_plus: float, delta_minus: float, probe_grid=None
) -> ValidationReport:
    """Drift-dominance condition required for a classical pricing solution."""
    if not (delta_plus > 0 and delta_minus > 0):
        raise NonpositivePropensity(min(delta_plus, delta_minus), "min(delta_plus, delta_minus)")
    sup1, sup2 = ellipticity_sups(config, probe_grid)
    lhs = min(delta_plus, delta_minus)
    rhs = max(sup1, sup2)
    ok = lhs > rhs
    detail = f"min(delta+,delta-) = {lhs:.6g} vs max sup = {rhs:.6g} (sup1={sup1:.6g}, sup2={sup2:.6g})"
    return ValidationReport((ValidationCheck("drift_dominance", ok, detail),))


def validate_all(config: ModelConfig, probe_grid=None) -> ValidationReport:
    """Full validation suite; growth failures are folded into the report."""
    report = validate_assumption_sde(config.share, probe_grid)
    checks = list(report.checks)
    try:
        dplus, dminus = validate_growth(config)
        checks.append(
            ValidationCheck(
                "growth_condition", True, f"delta_plus = {dplus:.6g}, delta_minus = {dminus:.6g}"
            )
        )
        checks.extend(validate_ellipticity(config, dplus, dminus, probe_grid).checks)
    except NonpositivePropensity as exc:
        checks.append(ValidationCheck("growth_condition", False, str(exc)))
    return ValidationReport(tuple(checks))


def table_config(
    gamma: float = 1.0,
    alpha: float = 0.5,
    phi: float = 0.0984,
    kappa: float = 0.2,
    mu_c: float = 0.0231,
    sigma_c: float = 0.0286,
    lam: float = 0.2232,
    omega_bar: float = 0.0662,
    nu: float = 0.1546,
    rho: float = 0.4637,
) -> ModelConfig:
    """Convenience constructor with the package's calibrated defaults."""
    return ModelConfig(
        endowment=EndowmentParams(mu_c=mu_c, sigma_c=sigma_c),
        share=MeanRevertingQuadratic(lam=lam, omega_bar=omega_bar, nu=nu),
        rho=rho,
        preferences=PreferenceParams(phi=phi, gamma=gamma),
        ambiguity=AmbiguityParams(kappa=kappa, alpha=alpha),
    )
