import csv
import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liespec import cli, config
from liespec.errors import ConfigurationError

SU2_CFG = """
group = su2
resolution = 16
operator.preset = diag_perturbed
operator.eta = 0.2
omega.descriptor = ball:2.0
control.lambda_cut = 3.7
cutoff.lambda = 2.0
lambda_grid = 1.5, 2.5
"""

SMALL_T1 = """
resolution = 64
lambda_grid = 7.0, 13.0, 19.0, 26.0
doubling.trials = 4
doubling.steps = 10
cutoff.draws = 3
"""


def run(tmp_path, command, text, *extra, name="cfg.txt", out="out"):
    path = tmp_path / name
    path.write_text(text)
    outdir = tmp_path / out
    code = cli.main([command, "--config", str(path), "--out", str(outdir), *extra])
    return code, outdir


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_round_trip_defaults():
    cfg = config.ExperimentConfig()
    assert config.parse(config.render(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(T=st.floats(1e-3, 10, allow_nan=False), seed=st.integers(0, 2**64 - 1),
       grid=st.lists(st.floats(0.01, 100, allow_nan=False), max_size=6),
       ray=st.one_of(st.none(), st.floats(1.0, 1e6)))
def test_round_trip_property(T, seed, grid, ray):
    cfg = config.ExperimentConfig({"time.T": T, "seed": seed, "lambda_grid": tuple(grid),
                                   "contour.ray_length": ray})
    assert config.parse(cfg.render()) == cfg


def test_unknown_and_bad_keys():
    with pytest.raises(ConfigurationError, match="operator.colour"):
        config.parse("operator.colour = red\n")
    with pytest.raises(ConfigurationError, match="line 2"):
        config.parse("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigurationError, match="resolution"):
        config.parse("resolution = many\n")
    with pytest.raises(ConfigurationError):
        config.ExperimentConfig({"nope": 1})
    cfg = config.parse("# comment\ntime.T = 0.5  # trailing\n")
    assert cfg["time.T"] == 0.5 and cfg.replace(time__T=2.0)["time.T"] == 2.0


def test_streams_independent_and_reproducible():
    a = config.stream(5, "control").standard_normal(4)
    b = config.stream(5, "control").standard_normal(4)
    c = config.stream(5, "doubling").standard_normal(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_exit_codes(tmp_path):
    code, _ = run(tmp_path, "dual-table", "bogus.key = 1\n")
    assert code == 2
    code, _ = run(tmp_path, "dual-table", "omega.descriptor = arc:1\n")
    assert code == 0  # dual-table ignores omega
    code, _ = run(tmp_path, "control", "omega.descriptor = arc:1\n")
    assert code == 2
    code, _ = run(tmp_path, "control", "omega.descriptor = arc:0,0.1\ncontrol.lambda_cut = 70\n"
                  "time.T = 0.002\nresolution = 128\n")
    assert code == 3
    missing = tmp_path / "absent.txt"
    assert cli.main(["verify", "--config", str(missing)]) == 2


def test_dual_table_examples(tmp_path):
    code, out = run(tmp_path, "dual-table", "dual.bracket_cut = 1.0\n")
    assert code == 0
    rows = read_csv(out / "dual_table.csv")
    assert rows[0] == cli.CSV_HEADERS["dual_table"]
    assert rows[1:] == [["0", "1", "0.0", "1.0"]]
    code, out = run(tmp_path, "dual-table", "group = su2\ndual.bracket_cut = 1.733\n", out="b")
    rows = read_csv(out / "dual_table.csv")
    assert [r[0] for r in rows[1:]] == ["0.0", "0.5", "1.0"]


def test_verify_default_torus(tmp_path):
    code, out = run(tmp_path, "verify", "")
    rep = json.loads((out / "verify.json").read_text())
    assert code == 0 and rep["passed"], rep["failed"]
    names = {c["name"] for c in rep["checks"]}
    assert {"parseval_roundtrip", "unitarity", "eigenmode", "cancellation", "symmetry",
            "cutoff_derivatives", "contour_vs_direct", "hum_identity"} <= names


def test_verify_su2(tmp_path):
    code, out = run(tmp_path, "verify", SU2_CFG)
    rep = json.loads((out / "verify.json").read_text())
    assert code == 0 and rep["passed"], rep["failed"]


def test_verify_bandlimit_failure(tmp_path):
    code, out = run(tmp_path, "verify", "resolution = 4\n")
    rep = json.loads((out / "verify.json").read_text())
    assert code == 1
    assert "bandlimit" in rep["failed"]


def test_spectral_constant_outputs(tmp_path):
    code, out = run(tmp_path, "spectral-constant", SMALL_T1)
    assert code == 0
    rows = read_csv(out / "spectral_constants.csv")
    assert rows[0] == cli.CSV_HEADERS["spectral_constants"]
    lam = [float(r[2]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(lam, lam[1:]))
    fit = json.loads((out / "spectral_constants.json").read_text())
    assert fit["C2"] >= 0 and fit["C1"] > 0


def test_spectral_constant_full_and_nested(tmp_path):
    code, out = run(tmp_path, "spectral-constant", SMALL_T1 + "omega.descriptor = full\n")
    rows = read_csv(out / "spectral_constants.csv")
    assert all(abs(float(r[2]) - 1) <= 1e-8 for r in rows[1:])
    # lam_min = 1 up to rounding, so the slope is rounding noise
    assert json.loads((out / "spectral_constants.json").read_text())["C2"] <= 1e-12
    _, small = run(tmp_path, "spectral-constant", SMALL_T1 + "omega.descriptor = arc:0,0.2\n",
                   out="s")
    _, big = run(tmp_path, "spectral-constant", SMALL_T1 + "omega.descriptor = arc:0,0.4\n",
                 out="b")
    a = read_csv(small / "spectral_constants.csv")[1:]
    b = read_csv(big / "spectral_constants.csv")[1:]
    assert all(float(x[2]) <= float(y[2]) + 1e-10 for x, y in zip(a, b))


def test_doubling_output(tmp_path):
    code, out = run(tmp_path, "doubling", SMALL_T1)
    assert code == 0
    rows = read_csv(out / "doubling.csv")
    assert rows[0] == cli.CSV_HEADERS["doubling"]
    assert all(float(r[2]) >= 1.0 for r in rows[1:])


def test_control_outputs(tmp_path):
    code, out = run(tmp_path, "control", "omega.descriptor = arc:0,0.5\ncontrol.lambda_cut = 7\n")
    assert code == 0
    rep = json.loads((out / "control.json").read_text())
    assert rep["n_modes"] == 3 and rep["terminal_residual"] <= 1e-8
    rows = read_csv(out / "control_run.csv")
    assert rows[0][:3] == ["t", "g0_re", "g0_im"] and len(rows) == 257
    code, out = run(tmp_path, "control", "omega.descriptor = full\ncontrol.lambda_cut = 1\n"
                    "control.u0 = ones\n", out="one")
    rep = json.loads((out / "control.json").read_text())
    assert rep["cost"] == pytest.approx(0.559495563431321, abs=1e-8)
    code, out = run(tmp_path, "control", "control.u0 = zero\n", out="zero")
    assert json.loads((out / "control.json").read_text())["cost"] == 0


def test_cost_scan_outputs(tmp_path):
    code, out = run(tmp_path, "cost-scan", "")
    assert code == 0
    rows = read_csv(out / "cost_scan.csv")
    assert rows[0] == cli.CSV_HEADERS["cost_scan"]
    costs = [float(r[1]) for r in rows[1:]]
    assert all(b > a for a, b in zip(costs, costs[1:]))
    fit = json.loads((out / "cost_scan.json").read_text())
    assert set(fit) >= {"beta_hat", "r2", "C1", "C2", "alpha", "m", "omega_descriptor"}


def test_cutoff_outputs(tmp_path):
    code, out = run(tmp_path, "cutoff", SMALL_T1)
    assert code == 0
    rows = read_csv(out / "cutoff_check.csv")
    assert rows[0] == cli.CSV_HEADERS["cutoff_check"]
    for r in rows[1:]:
        eps, psi0 = float(r[0]), float(r[1])
        assert 0 < psi0 < eps
        assert all(abs(float(v)) <= 1e-9 * max(1, psi0) for v in r[2:6])
    irows = read_csv(out / "interpolation.csv")
    assert irows[0] == cli.CSV_HEADERS["interpolation"] and len(irows) == 4
    assert all(float(r[2]) <= float(r[3]) for r in irows[1:])


def test_check_symbol(tmp_path):
    code, out = run(tmp_path, "check-symbol", "")
    assert code == 0
    rows = read_csv(out / "symbol_check.csv")
    assert rows[0] == cli.CSV_HEADERS["symbol_check"] and len(rows) == 10
    # e^{i sqrt|k|} loses only half an order per k-difference
    code, _ = run(tmp_path, "check-symbol", "symbol.name = sqrt_phase\n", out="b")
    assert code == 1
    code, _ = run(tmp_path, "check-symbol", "symbol.name = sqrt_phase\nsymbol.rho = 0.5\n", out="c")
    assert code == 0


def test_power_check(tmp_path):
    code, out = run(tmp_path, "power-check", "")
    assert code == 0
    rows = read_csv(out / "power_check.csv")
    assert rows[0] == cli.CSV_HEADERS["power_check"]
    assert all(float(r[2]) <= 1e-6 for r in rows[1:])


@pytest.mark.parametrize("command,text", [
    ("dual-table", ""), ("cost-scan", ""), ("spectral-constant", SMALL_T1),
    ("doubling", SMALL_T1), ("control", ""), ("cutoff", SMALL_T1), ("power-check", ""),
])
def test_determinism(tmp_path, command, text):
    _, a = run(tmp_path, command, text, "--seed", "3", out="a")
    _, b = run(tmp_path, command, text, "--seed", "3", "--threads", "4", out="b")
    files = sorted(os.listdir(a))
    assert files == sorted(os.listdir(b)) and files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
