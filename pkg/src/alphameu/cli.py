"""Command-line front end.

Subcommands map one-to-one onto the library pipeline:

  validate       run the assumption checks on a config, exit 0/2
  equilibrium    closed-form constants as JSON
  solve          price-endowment ratios as CSV (omega, phi_s, phi_h, d_phi_s, elasticity)
  premium-curve  conditional premium/volatility/pd curve for a (gamma, theta*) pair
  simulate       Euler-Maruyama paths as long-format CSV
  invariant      stationary share density as CSV (omega, p)
  moments        unconditional moments as JSON
  calibrate      estimate structural parameters from an annual data CSV
  match          solve (gamma, phi) for given theta* and targets
  table          calibrated rows over a theta* grid as CSV
  figures        CSV bundles matching the standard diagnostic figure layouts

Every run that writes files also writes a manifest (subcommand, resolved
config, seeds, version, output list, wall clock).  Outputs are
deterministic given the manifest identity fields; --seed only enters the
Monte-Carlo subcommands.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 data
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import calibration as cal
from . import moments as mom
from . import ode, returns, stochastic
from .equilibrium import build_equilibrium, constants_from_theta
from .errors import (
    AlphaMeuError,
    DataError,
    NumericalError,
    UnknownFigure,
    ValidationError,
)
from .params import ModelConfig, validate_all

FIGURE_IDS = ("pd-premium-vol", "elasticity-rho", "elasticity-delta", "premium-theta", "share-history")
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_DATA = 4

_FLOAT_FMT = "%.12g"


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seeds: dict
    version: str
    outputs: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "seeds": self.seeds,
            "version": self.version,
            "outputs": self.outputs,
            "wall_clock_s": self.wall_clock_s,
        }


class _Writer:
    """Collects output files under --out (or streams the first to stdout)."""

    def __init__(self, out_dir: str | None, manifest: RunManifest):
        self.out_dir = Path(out_dir) if out_dir else None
        self.manifest = manifest
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: list[str], columns: list[np.ndarray]) -> None:
        lines = [",".join(header)]
        rows = len(columns[0])
        cols = [np.asarray(c) for c in columns]
        for i in range(rows):
            lines.append(",".join(_FLOAT_FMT % c[i] if np.issubdtype(c.dtype, np.floating) else str(c[i]) for c in cols))
        text = "\n".join(lines) + "\n"
        self._emit(name, text)

    def write_json(self, name: str, payload: dict) -> None:
        self._emit(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def _emit(self, name: str, text: str) -> None:
        if self.out_dir:
            path = self.out_dir / name
            path.write_text(text, encoding="utf-8")
            self.manifest.outputs.append(str(path))
        else:
            sys.stdout.write(text)

    def finish(self, started: float) -> None:
        if self.out_dir:
            self.manifest.wall_clock_s = round(time.time() - started, 3)
            path = self.out_dir / "manifest.json"
            path.write_text(
                json.dumps(self.manifest.to_dict(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )


def _load_config(path: str) -> ModelConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    return ModelConfig.from_json(text)


def _grid(args) -> ode.Grid:
    return ode.Grid.uniform(args.grid_n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphameu",
        description="Equilibrium asset pricing for an alpha-maxmin representative agent",
    )
    parser.add_argument("--config", help="model configuration JSON file")
    parser.add_argument("--out", help="output directory (default: stdout)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for Monte-Carlo subcommands")
    parser.add_argument("--grid-n", type=int, default=ode.DEFAULT_GRID_N, help="interior grid points")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="run assumption checks")
    sub.add_parser("equilibrium", help="closed-form equilibrium constants")
    sub.add_parser("solve", help="price-endowment ratios on the grid")

    p = sub.add_parser("premium-curve", help="conditional premium/vol/pd curve")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--theta-star", type=float, required=True)

    p = sub.add_parser("simulate", help="simulate (share, log endowment) paths")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n-paths", type=int, default=100)
    p.add_argument("--dt", type=float, default=stochastic.DEFAULT_DT)
    p.add_argument("--horizon", type=float, default=10.0)

    sub.add_parser("invariant", help="stationary share density")
    sub.add_parser("moments", help="unconditional return moments")

    p = sub.add_parser("calibrate", help="estimate parameters from annual data")
    p.add_argument("--data", required=True)
    p.add_argument("--payout", type=float, default=cal.DEFAULT_PAYOUT_RATIO)

    p = sub.add_parser("match", help="solve (gamma, phi) for theta* and targets")
    p.add_argument("--theta-star", type=float, required=True)
    p.add_argument("--premium", type=float, default=0.039)
    p.add_argument("--pd", type=float, default=21.1)

    p = sub.add_parser("table", help="calibrated rows over a theta* grid")
    p.add_argument("--premium", type=float, default=0.039)
    p.add_argument("--pd", type=float, default=21.1)
    p.add_argument(
        "--theta-grid",
        default="0:-0.6:13",
        help="start:stop:count inclusive grid (default 0:-0.6:13)",
    )

    p = sub.add_parser("figures", help="figure data bundles")
    p.add_argument("figure_id")
    p.add_argument("--data", help="annual data CSV (share-history only)")
    return parser


def _theta_grid(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        grid = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise DataError(f"bad --theta-grid {text!r}; expected start:stop:count") from exc
    if grid.size == 0:
        return grid
    return grid


def cmd_validate(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    report = validate_all(config)
    for line in report.lines():
        print(line)
    return 0 if report.passed else EXIT_VALIDATION


def cmd_equilibrium(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    constants = build_equilibrium(config)
    writer.write_json("equilibrium.json", constants.to_dict())
    return 0


def cmd_solve(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    constants = build_equilibrium(config)
    sol = ode.solve_prices(config, constants, _grid(args))
    elast = sol.d_phi_s / sol.phi_s
    writer.write_csv(
        "solution.csv",
        ["omega", "phi_s", "phi_h", "d_phi_s", "elasticity"],
        [sol.grid.points, sol.phi_s, sol.phi_h, sol.d_phi_s, elast],
    )
    return 0


def cmd_premium_curve(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    config = _override_gamma(config, args.gamma)
    constants = constants_from_theta(config, args.theta_star)
    sol = ode.solve_prices(config, constants, _grid(args))
    curve = returns.returns_curve(config, constants, sol)
    writer.write_csv(
        "premium_curve.csv",
        ["omega", "premium", "vol_norm", "pd_ratio"],
        [curve["omega"], curve["premium"], curve["vol_norm"], curve["pd_ratio"]],
    )
    return 0


def cmd_simulate(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    bundle = stochastic.simulate_paths(
        config, args.theta, args.n_paths, args.dt, args.horizon, args.seed
    )
    n_paths, n_obs = bundle.omega_paths.shape
    path_id = np.repeat(np.arange(n_paths), n_obs)
    t = np.tile(np.arange(n_obs) * bundle.dt, n_paths)
    writer.write_csv(
        "paths.csv",
        ["path_id", "t", "omega", "log_c"],
        [path_id, t, bundle.omega_paths.ravel(), bundle.log_c_paths.ravel()],
    )
    return 0


def cmd_invariant(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    density = stochastic.stationary_density(config.share, _grid(args))
    writer.write_csv("invariant.csv", ["omega", "p"], [density.grid.points, density.p])
    return 0


def cmd_moments(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    constants = build_equilibrium(config)
    grid = _grid(args)
    sol = ode.solve_prices(config, constants, grid)
    density = stochastic.stationary_density(config.share, grid)
    um = mom.unconditional_moments(config, constants, sol, density)
    writer.write_json("moments.json", um.to_dict())
    return 0


def cmd_calibrate(args, writer: _Writer) -> int:
    series = cal.ingest_csv(args.data)
    derived = cal.derive_series(series, args.payout)
    mu_c, sigma_c = cal.estimate_endowment(derived)
    est = cal.estimate_share_dynamics(derived)
    kap = cal.kappa_from_stderr(sigma_c, series.n, round_to=0.1)
    writer.write_json(
        "calibrate.json",
        {
            "mu_c": mu_c,
            "sigma_c": sigma_c,
            "lambda": est.lam,
            "omega_bar": est.omega_bar,
            "nu": est.nu,
            "rho": est.rho,
            "loglik": est.loglik,
            "kappa_multiplier": kap.multiplier,
            "kappa_drift_half_width": kap.drift_half_width,
            "kappa": kap.kappa,
            "payout_ratio": args.payout,
            "years": int(series.n),
        },
    )
    return 0


def _share_moments(config: ModelConfig, grid: ode.Grid) -> mom.ShareMoments:
    density = stochastic.stationary_density(config.share, grid)
    return mom.ShareMoments.from_density(density)


def cmd_match(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    targets = cal.CalibrationTargets(premium_target=args.premium, pd_target=args.pd)
    sm = _share_moments(config, _grid(args))
    result = cal.match_preferences(
        targets, args.theta_star, config.endowment, config.share, sm, rho=config.rho
    )
    writer.write_json(
        "match.json",
        {
            "theta_star": args.theta_star,
            "gamma": result.gamma,
            "phi": result.phi,
            "delta": result.delta,
            "residual_premium": result.residual_premium,
            "residual_pd": result.residual_pd,
            "iterations": result.iterations,
            "method": result.method,
        },
    )
    return 0


def _override_gamma(config: ModelConfig, gamma: float) -> ModelConfig:
    from dataclasses import replace

    return replace(config, preferences=replace(config.preferences, gamma=gamma))


def _override_phi(config: ModelConfig, phi: float) -> ModelConfig:
    from dataclasses import replace

    return replace(config, preferences=replace(config.preferences, phi=phi))


def cmd_table(args, writer: _Writer) -> int:
    config = _load_config(args.config)
    grid = _grid(args)
    targets = cal.CalibrationTargets(premium_target=args.premium, pd_target=args.pd)
    density = stochastic.stationary_density(config.share, grid)
    sm = mom.ShareMoments.from_density(density)
    thetas = _theta_grid(args.theta_grid)

    cols: dict[str, list] = {
        k: [] for k in ("theta", "gamma", "phi", "premium", "vol", "pd", "sd_log_pd", "r_f")
    }
    failures = 0
    for theta in thetas:
        try:
            row = table_row(config, grid, density, sm, targets, float(theta))
        except NumericalError as exc:
            print(f"theta*={theta:g}: {exc}", file=sys.stderr)
            failures += 1
            row = {k: float("nan") for k in cols if k != "theta"}
            row["theta"] = float(theta)
        for k in cols:
            cols[k].append(row[k])
    writer.write_csv(
        "table.csv",
        list(cols.keys()),
        [np.asarray(v, dtype=float) for v in cols.values()],
    )
    if thetas.size and failures == thetas.size:
        return EXIT_NUMERICAL
    return 0


def table_row(
    config: ModelConfig,
    grid: ode.Grid,
    density: stochastic.StationaryDensity,
    sm: mom.ShareMoments,
    targets: cal.CalibrationTargets,
    theta: float,
) -> dict:
    """Calibrate (gamma, phi) at one theta* and run the exact pipeline."""
    result = cal.match_preferences(
        targets, theta, config.endowment, config.share, sm, rho=config.rho
    )
    cfg = _override_phi(_override_gamma(config, result.gamma), result.phi)
    constants = constants_from_theta(cfg, theta)
    sol = ode.solve_prices(cfg, constants, grid)
    um = mom.unconditional_moments(cfg, constants, sol, density)
    return {
        "theta": theta,
        "gamma": result.gamma,
        "phi": result.phi,
        "premium": um.premium,
        "vol": um.vol,
        "pd": um.pd,
        "sd_log_pd": um.sd_log_pd,
        "r_f": um.r_f,
    }


def cmd_figures(args, writer: _Writer) -> int:
    if args.figure_id not in FIGURE_IDS:
        raise UnknownFigure(f"unknown figure id {args.figure_id!r}; choose from {FIGURE_IDS}")
    if args.figure_id == "share-history":
        if not args.data:
            raise DataError("share-history needs --data")
        series = cal.ingest_csv(args.data)
        derived = cal.derive_series(series)
        writer.write_csv("share_history.csv", ["year", "omega"], [derived.year, derived.omega])
        return 0

    config = _load_config(args.config)
    grid = _grid(args)

    if args.figure_id == "pd-premium-vol":
        gammas = (0.5, 1.0, 5.0, 10.0)
        thetas = (-0.2, 0.0, 0.2)
        for theta in thetas:
            curves = {}
            for gamma in gammas:
                cfg = _override_gamma(config, gamma)
                constants = constants_from_theta(cfg, theta)
                sol = ode.solve_prices(cfg, constants, grid)
                curves[gamma] = returns.returns_curve(cfg, constants, sol)
            tag = f"theta_{theta:+.1f}".replace("+", "p").replace("-", "m").replace(".", "_")
            for panel in ("pd_ratio", "premium", "vol_norm"):
                writer.write_csv(
                    f"{panel}_{tag}.csv",
                    ["omega"] + [f"gamma_{g:g}" for g in gammas],
                    [grid.points] + [curves[g][panel] for g in gammas],
                )
        return 0

    if args.figure_id == "elasticity-rho":
        shifts = (-0.3, -0.15, 0.0, 0.15, 0.3)
        deltas = (0.0984, 0.11, 0.22, 0.33)
        for delta in deltas:
            cols = []
            for shift in shifts:
                sol = ode.solve_linear_ratio(config.share, delta, shift, grid)
                cols.append(sol.d_phi_s / sol.phi_s)
            writer.write_csv(
                f"elasticity_delta_{delta:g}.csv",
                ["omega"] + [f"shift_{s:g}" for s in shifts],
                [grid.points] + cols,
            )
        return 0

    if args.figure_id == "elasticity-delta":
        shifts = (-0.3, -0.15, 0.15, 0.3)
        deltas = (0.08, 0.0984, 0.11, 0.22, 0.33)
        for shift in shifts:
            cols = []
            for delta in deltas:
                sol = ode.solve_linear_ratio(config.share, delta, shift, grid)
                cols.append(sol.d_phi_s / sol.phi_s)
            writer.write_csv(
                f"elasticity_shift_{shift:g}.csv",
                ["omega"] + [f"delta_{d:g}" for d in deltas],
                [grid.points] + cols,
            )
        return 0

    # premium-theta
    gammas = (1.0, 5.0, 10.0)
    thetas = (-0.2, 0.0, 0.2)
    for gamma in gammas:
        cols = []
        for theta in thetas:
            cfg = _override_gamma(config, gamma)
            constants = constants_from_theta(cfg, theta)
            sol = ode.solve_prices(cfg, constants, grid)
            cols.append(returns.returns_curve(cfg, constants, sol)["premium"])
        writer.write_csv(
            f"premium_theta_gamma_{gamma:g}.csv",
            ["omega"] + [f"theta_{t:g}" for t in thetas],
            [grid.points] + cols,
        )
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "equilibrium": cmd_equilibrium,
    "solve": cmd_solve,
    "premium-curve": cmd_premium_curve,
    "simulate": cmd_simulate,
    "invariant": cmd_invariant,
    "moments": cmd_moments,
    "calibrate": cmd_calibrate,
    "match": cmd_match,
    "table": cmd_table,
    "figures": cmd_figures,
}

_NEEDS_CONFIG = {
    "validate",
    "equilibrium",
    "solve",
    "premium-curve",
    "simulate",
    "invariant",
    "moments",
    "match",
    "table",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in _NEEDS_CONFIG and not args.config:
        parser.error(f"{args.command} requires --config")
    if args.command == "figures" and args.figure_id != "share-history" and not args.config:
        parser.error("figures (except share-history) requires --config")

    started = time.time()
    config_dict = {}
    if args.config:
        try:
            config_dict = _load_config(args.config).to_json_dict()
        except AlphaMeuError:
            config_dict = {"path": args.config}
    manifest = RunManifest(
        subcommand=args.command,
        config=config_dict,
        seeds={"seed": args.seed},
        version=__version__,
    )
    writer = _Writer(args.out, manifest)
    try:
        code = _COMMANDS[args.command](args, writer)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    writer.finish(started)
    return code


if __name__ == "__main__":
    sys.exit(main())
