import json

import numpy as np
import pytest

from alphameu.errors import ConfigError, NonpositivePropensity
from alphameu.params import (
    AmbiguityParams,
    EndowmentParams,
    MeanRevertingQuadratic,
    ModelConfig,
    PreferenceParams,
    ShareDynamics,
    default_probe_grid,
    ellipticity_sups,
    table_config,
    validate_all,
    validate_assumption_sde,
    validate_ellipticity,
    validate_growth,
)


class ZeroDrift(ShareDynamics):
    """Custom dynamics violating the inward-drift boundary conditions."""

    def mu(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        return 0.1 * x * (1 - x)

    def mu_prime(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def sigma_prime(self, x):
        return 0.1 * (1 - 2 * np.asarray(x, dtype=float))


def test_assumption_sde_table_dynamics_pass():
    share = MeanRevertingQuadratic(lam=0.2232, omega_bar=0.0662, nu=0.1546)
    assert validate_assumption_sde(share).passed


def test_assumption_sde_simple_quadratic_pass():
    assert validate_assumption_sde(MeanRevertingQuadratic(lam=1, omega_bar=0.5, nu=1)).passed


def test_assumption_sde_zero_drift_fails_boundary_signs():
    report = validate_assumption_sde(ZeroDrift())
    assert not report.passed
    failed = {c.name for c in report.checks if not c.passed}
    assert "mu_limit_zero_positive" in failed
    assert "mu_limit_one_negative" in failed


def test_assumption_sde_rejects_grid_touching_boundary():
    share = MeanRevertingQuadratic(lam=1, omega_bar=0.5, nu=1)
    with pytest.raises(ConfigError):
        validate_assumption_sde(share, np.array([0.0, 0.5]))
    with pytest.raises(ConfigError):
        validate_assumption_sde(share, np.array([0.5, 1.0]))
    with pytest.raises(ConfigError):
        validate_assumption_sde(share, np.array([]))


def test_growth_table_values():
    dplus, dminus = validate_growth(table_config(gamma=10.0))
    assert dplus == pytest.approx(0.32097, abs=5e-6)
    assert dminus == pytest.approx(0.21801, abs=5e-6)


@pytest.mark.parametrize("kappa", [0.0, 0.1, 0.5, 2.0])
def test_growth_gamma_one_gives_phi(kappa):
    dplus, dminus = validate_growth(table_config(gamma=1.0, kappa=kappa))
    assert dplus == dminus == 0.0984


def test_growth_negative_phi_raises():
    with pytest.raises(NonpositivePropensity):
        validate_growth(table_config(gamma=10.0, phi=-10.0))


@pytest.mark.parametrize("gamma", [0.5, 1.0, 5.0, 10.0])
def test_ellipticity_table_parameters_pass(gamma):
    cfg = table_config(gamma=gamma)
    dplus, dminus = validate_growth(cfg)
    assert validate_ellipticity(cfg, dplus, dminus).passed


def test_ellipticity_violating_dynamics_fail():
    cfg = table_config(
        gamma=0.5, rho=-1.0, lam=0.001, nu=0.9
    )
    dplus, dminus = validate_growth(cfg)
    assert not validate_ellipticity(cfg, dplus, dminus).passed


def test_ellipticity_gamma_one_analytic_reduction():
    cfg = table_config(gamma=1.0, lam=0.3, nu=0.4, rho=0.9)
    sup1, sup2 = ellipticity_sups(cfg)
    assert sup1 == pytest.approx(-0.3)
    assert sup2 == pytest.approx(-0.6 + 0.4**2)


@pytest.mark.parametrize("gamma,rho", [(0.5, -1.0), (5.0, 0.4637), (10.0, -0.7)])
def test_ellipticity_analytic_matches_grid_maximization(gamma, rho):
    cfg = table_config(gamma=gamma, rho=rho)
    sup1a, sup2a = ellipticity_sups(cfg)

    grid = default_probe_grid(10_000)
    shift = cfg.drift_shift
    bprime = cfg.share.mu_prime(grid) + shift * cfg.share.sigma_prime(grid)
    sup1g = float(np.max(bprime))
    sup2g = float(np.max(2 * bprime + cfg.share.sigma_prime(grid) ** 2))
    # suprema sit at the domain boundary; the nearest grid point is the edge
    # offset (1e-4) plus spacing away, and both integrands have x-derivative
    # bounded by 2*(2 nu^2 + 2 |shift| nu)
    h = grid[1] - grid[0]
    modulus = (1e-4 + h) * 2 * (2 * cfg.share.nu**2 + 2 * abs(shift) * cfg.share.nu)
    assert sup1g <= sup1a + 1e-12
    assert sup1a - sup1g <= modulus
    assert sup2g <= sup2a + 1e-12
    assert sup2a - sup2g <= modulus


def test_validation_is_deterministic():
    cfg = table_config(gamma=5.0)
    assert str(validate_all(cfg)) == str(validate_all(cfg))


def test_config_json_round_trip():
    cfg = table_config(gamma=5.0, alpha=0.75)
    doc = cfg.to_json()
    back = ModelConfig.from_json(doc)
    assert back == cfg


def test_config_json_rejects_unknown_keys():
    doc = json.loads(table_config().to_json())
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="unknown keys"):
        ModelConfig.from_json_dict(doc)
    doc2 = json.loads(table_config().to_json())
    doc2["share"]["mean"] = 0.1
    with pytest.raises(ConfigError, match="unknown keys in share"):
        ModelConfig.from_json_dict(doc2)


def test_config_json_rejects_missing_and_nonnumeric():
    doc = json.loads(table_config().to_json())
    del doc["rho"]
    with pytest.raises(ConfigError, match="missing keys"):
        ModelConfig.from_json_dict(doc)
    doc2 = json.loads(table_config().to_json())
    doc2["preferences"]["gamma"] = "big"
    with pytest.raises(ConfigError, match="must be a number"):
        ModelConfig.from_json_dict(doc2)


def test_parameter_domain_checks():
    with pytest.raises(ConfigError):
        EndowmentParams(mu_c=0.02, sigma_c=0.0)
    with pytest.raises(ConfigError):
        PreferenceParams(phi=0.1, gamma=0.0)
    with pytest.raises(ConfigError):
        AmbiguityParams(kappa=-0.1, alpha=0.5)
    with pytest.raises(ConfigError):
        AmbiguityParams(kappa=0.1, alpha=1.5)
    with pytest.raises(ConfigError):
        MeanRevertingQuadratic(lam=0.2, omega_bar=1.5, nu=0.1)
    with pytest.raises(ConfigError):
        table_config(rho=1.5)
