import json
from pathlib import Path

import pytest

from alphameu import cli
from alphameu.params import table_config


@pytest.fixture()
def config_path(tmp_path) -> str:
    p = tmp_path / "config.json"
    p.write_text(table_config(gamma=5.0, alpha=0.75).to_json())
    return str(p)


def run(*argv) -> int:
    return cli.main(list(argv))


def test_validate_ok(config_path, capsys):
    assert run("--config", config_path, "validate") == 0
    assert "drift_dominance" in capsys.readouterr().out


def test_validate_growth_failure_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(table_config(gamma=10.0, phi=-10.0).to_json())
    assert run("--config", str(p), "validate") == 2
    assert "growth_condition" in capsys.readouterr().out


def test_validate_ellipticity_failure_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(table_config(gamma=0.5, rho=-1.0, lam=0.001, nu=0.9).to_json())
    assert run("--config", str(p), "validate") == 2


def test_equilibrium_json(config_path, tmp_path):
    out = tmp_path / "out"
    assert run("--config", config_path, "--out", str(out), "equilibrium") == 0
    doc = json.loads((out / "equilibrium.json").read_text())
    assert set(doc) == {
        "delta_plus", "delta_minus", "theta_star", "delta", "v_lower", "v_upper", "r_f",
    }
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "equilibrium"
    assert str(out / "equilibrium.json") in manifest["outputs"]


def test_solve_csv_deterministic_and_seed_blind(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run("--config", config_path, "--out", str(out1), "--grid-n", "100", "--seed", "1", "solve") == 0
    assert run("--config", config_path, "--out", str(out2), "--grid-n", "100", "--seed", "999", "solve") == 0
    b1 = (out1 / "solution.csv").read_bytes()
    b2 = (out2 / "solution.csv").read_bytes()
    assert b1 == b2
    header = b1.decode().splitlines()[0]
    assert header == "omega,phi_s,phi_h,d_phi_s,elasticity"


def test_premium_curve_columns(config_path, tmp_path):
    out = tmp_path / "out"
    code = run(
        "--config", config_path, "--out", str(out), "--grid-n", "64",
        "premium-curve", "--gamma", "5", "--theta-star", "0.0",
    )
    assert code == 0
    lines = (out / "premium_curve.csv").read_text().splitlines()
    assert lines[0] == "omega,premium,vol_norm,pd_ratio"
    assert len(lines) == 65


def test_simulate_seed_sensitivity(config_path, tmp_path):
    out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ("simulate", "--theta", "0.1", "--n-paths", "3", "--dt", "0.25", "--horizon", "1.0")
    assert run("--config", config_path, "--out", str(out1), "--seed", "5", *args) == 0
    assert run("--config", config_path, "--out", str(out2), "--seed", "5", *args) == 0
    assert run("--config", config_path, "--out", str(out3), "--seed", "6", *args) == 0
    assert (out1 / "paths.csv").read_bytes() == (out2 / "paths.csv").read_bytes()
    assert (out1 / "paths.csv").read_bytes() != (out3 / "paths.csv").read_bytes()
    header = (out1 / "paths.csv").read_text().splitlines()[0]
    assert header == "path_id,t,omega,log_c"


def test_invariant_csv(config_path, tmp_path):
    out = tmp_path / "out"
    assert run("--config", config_path, "--out", str(out), "--grid-n", "128", "invariant") == 0
    lines = (out / "invariant.csv").read_text().splitlines()
    assert lines[0] == "omega,p"
    assert len(lines) == 129


def test_moments_json(config_path, tmp_path):
    out = tmp_path / "out"
    assert run("--config", config_path, "--out", str(out), "--grid-n", "500", "moments") == 0
    doc = json.loads((out / "moments.json").read_text())
    assert set(doc) == {"premium", "vol", "pd", "sd_log_pd", "r_f"}
    assert doc["vol"] > 0 and doc["pd"] > 0


def test_calibrate_fixture(fixture_csv, tmp_path):
    out = tmp_path / "out"
    assert run("--out", str(out), "calibrate", "--data", str(fixture_csv)) == 0
    doc = json.loads((out / "calibrate.json").read_text())
    assert doc["years"] == 90
    assert 0 < doc["omega_bar"] < 1
    assert doc["kappa"] == pytest.approx(0.2)


def test_calibrate_missing_file_exit_4(tmp_path):
    assert run("--out", str(tmp_path / "o"), "calibrate", "--data", "/nonexistent.csv") == 4


def test_match_json(config_path, tmp_path):
    out = tmp_path / "out"
    code = run(
        "--config", config_path, "--out", str(out), "--grid-n", "800",
        "match", "--theta-star", "0", "--premium", "0.039", "--pd", "21.1",
    )
    assert code == 0
    doc = json.loads((out / "match.json").read_text())
    assert doc["gamma"] == pytest.approx(33.93, abs=0.05)
    assert doc["phi"] == pytest.approx(-0.256, abs=0.005)


def test_table_single_row(config_path, tmp_path):
    out = tmp_path / "out"
    code = run(
        "--config", config_path, "--out", str(out), "--grid-n", "800",
        "table", "--theta-grid", "0:0:1",
    )
    assert code == 0
    lines = (out / "table.csv").read_text().splitlines()
    assert lines[0] == "theta,gamma,phi,premium,vol,pd,sd_log_pd,r_f"
    row = dict(zip(lines[0].split(","), [float(v) for v in lines[1].split(",")]))
    # premium reproduces the calibration target at display precision; the
    # remaining columns freeze this pipeline's own exact values
    assert round(row["premium"] * 100, 2) == 3.92
    assert row["vol"] * 100 == pytest.approx(4.64, abs=0.02)
    assert row["pd"] == pytest.approx(17.4, abs=0.2)


def test_table_empty_grid(config_path, tmp_path):
    out = tmp_path / "out"
    assert run("--config", config_path, "--out", str(out), "table", "--theta-grid", "0:0:0") == 0
    lines = (out / "table.csv").read_text().splitlines()
    assert lines == ["theta,gamma,phi,premium,vol,pd,sd_log_pd,r_f"]


def test_table_continues_past_unsolvable_rows(config_path, tmp_path, capsys):
    # theta = -2 pushes the required risk aversion negative: that row fails,
    # the other row still comes out
    out = tmp_path / "out"
    code = run(
        "--config", config_path, "--out", str(out), "--grid-n", "800",
        "table", "--theta-grid", "0:-2:2",
    )
    assert code == 0
    assert "theta*=-2" in capsys.readouterr().err
    lines = (out / "table.csv").read_text().splitlines()
    assert len(lines) == 3
    first = lines[1].split(",")
    second = lines[2].split(",")
    assert first[1] != "nan" and second[1] == "nan"


def test_figures_pd_premium_vol(config_path, tmp_path):
    out = tmp_path / "figs"
    assert run("--config", config_path, "--out", str(out), "--grid-n", "64", "figures", "pd-premium-vol") == 0
    files = sorted(p.name for p in Path(out).glob("*.csv"))
    assert len(files) == 9
    one = (Path(out) / files[0]).read_text().splitlines()
    assert one[0] == "omega,gamma_0.5,gamma_1,gamma_5,gamma_10"


def test_figures_elasticity_delta(config_path, tmp_path):
    out = tmp_path / "figs"
    assert run("--config", config_path, "--out", str(out), "--grid-n", "64", "figures", "elasticity-delta") == 0
    files = sorted(p.name for p in Path(out).glob("elasticity_shift_*.csv"))
    assert len(files) == 4


def test_figures_premium_theta(config_path, tmp_path):
    out = tmp_path / "figs"
    assert run("--config", config_path, "--out", str(out), "--grid-n", "64", "figures", "premium-theta") == 0
    files = sorted(p.name for p in Path(out).glob("premium_theta_gamma_*.csv"))
    assert len(files) == 3


def test_figures_share_history(fixture_csv, tmp_path):
    out = tmp_path / "figs"
    assert run("--out", str(out), "figures", "share-history", "--data", str(fixture_csv)) == 0
    lines = (out / "share_history.csv").read_text().splitlines()
    assert lines[0] == "year,omega"
    assert len(lines) == 91


def test_figures_unknown_id_exit_2(config_path, tmp_path):
    assert run("--config", config_path, "--out", str(tmp_path / "o"), "figures", "nope") == 2


def test_config_schema_error_exit_2(tmp_path):
    p = tmp_path / "weird.json"
    p.write_text('{"endowment": {"mu_c": 0.02, "sigma_c": 0.03}}')
    assert run("--config", str(p), "validate") == 2
