import csv
import io
import json
import math
import os

import numpy as np
import pytest

from cascadejsa.cli import main
from cascadejsa.config import ExperimentConfig
from cascadejsa.errors import ConfigError

SMALL = ["--points", "256"]


def run(capsys, *argv, environ=None):
    code = main(list(argv), environ=environ or {})
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- configuration -----------------------------------------------------------

def test_defaults_are_working_point():
    cfg = ExperimentConfig()
    assert (cfg.gamma3n, cfg.gamma_tau, cfg.span, cfg.points) == (5.0, 0.25, 150.0, 2048)
    assert cfg.pipeline() == "base"


def test_print_config_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "entropy", "--print-config", "--preset", "fc", "--phi", "pi",
                       "--gamma-c", "0.5", "--target", "s", "--points", "300")
    assert code == 0
    path = tmp_path / "cfg.ini"
    path.write_text(out)
    again = ExperimentConfig().apply_file(path)
    assert again.flat() == ExperimentConfig().apply({
        "pipeline.preset": "fc", "pipeline.phi": "pi", "pipeline.gamma_c": "0.5",
        "pipeline.target": "s", "grid.points": 300}).flat()
    assert again.pipeline().params["phi"] == math.pi


def test_round_trip_reproduces_results(tmp_path, capsys):
    args = ["--preset", "fe", "--gamma-c", "1", *SMALL]
    run(capsys, "entropy", *args, "--out", str(tmp_path / "a.csv"))
    _, text, _ = run(capsys, "entropy", "--print-config", *args)
    (tmp_path / "cfg.ini").write_text(text)
    run(capsys, "entropy", "--config", str(tmp_path / "cfg.ini"), "--out", str(tmp_path / "b.csv"))
    a, b = read_csv(tmp_path / "a.csv"), read_csv(tmp_path / "b.csv")
    ms = a[0].index("ms")
    assert [r[:ms] for r in a] == [r[:ms] for r in b]


def test_layer_precedence(tmp_path, capsys):
    path = tmp_path / "cfg.ini"
    path.write_text("[grid]\npoints = 300\nspan_over_gamma = 80\n[physical]\ngamma_tau = 0.5\n")
    env = {"CASCADEJSA_GRID__POINTS": "310", "CASCADEJSA_PHYSICAL__GAMMA3N_OVER_GAMMA": "4"}
    code, out, _ = run(capsys, "entropy", "--print-config", "--config", str(path), "--points", "320",
                       environ=env)
    assert code == 0
    assert "points = 320" in out and "span_over_gamma = 80.0" in out
    assert "gamma_tau = 0.5" in out and "gamma3n_over_gamma = 4.0" in out


def test_preset_replaces_default_expression(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("[pipeline]\npreset = fe\ngamma_c = 2\n")
    cfg = ExperimentConfig().apply_file(path)
    assert cfg.expr is None and cfg.pipeline().params == {"gamma_c": 2.0}
    cfg.apply({"pipeline.expr": "base"})
    assert cfg.pipeline() == "base"


@pytest.mark.parametrize("text", [
    "[pipeline]\npreset = fe\nexpr = base\n",
    "[grid]\npionts = 3\n",
    "[grid]\npoints = many\n",
    "not an ini file",
    "[schmidt]\nbackend = lu\n",
])
def test_bad_config_files(tmp_path, capsys, text):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    code, _, err = run(capsys, "entropy", "--config", str(path), *SMALL)
    assert code == 2 and "error" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "entropy", "--config", str(tmp_path / "nope.ini"))
    assert code == 2


def test_bad_env_key():
    with pytest.raises(ConfigError):
        ExperimentConfig().apply_env({"CASCADEJSA_POINTS": "3"})


def test_params_rejected_for_wrong_preset(capsys):
    code, _, err = run(capsys, "entropy", "--preset", "fe", "--gamma-c", "1", "--phi", "1", *SMALL)
    assert code == 2 and "phi" in err
    code, _, err = run(capsys, "entropy", "--expr", "base", "--gamma-c", "1", *SMALL)
    assert code == 2


# --- entropy -------------------------------------------------------------------

def test_entropy_csv_and_stdout(tmp_path, capsys):
    out = tmp_path / "res.csv"
    code, stdout, _ = run(capsys, "entropy", "--preset", "fe", "--gamma-c", "1", *SMALL, "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][:3] == ["backend", "S", "purity"]
    assert rows[0][3:11] == [f"lambda_{k}" for k in range(1, 9)]
    s = float(rows[1][1])
    assert f"S = {s:.6g}" in stdout
    assert len(rows[1][2].replace(".", "").lstrip("0")) <= 9


def test_entropy_both_backends_json(tmp_path, capsys):
    out = tmp_path / "res.jsonl"
    code, stdout, _ = run(capsys, "entropy", "--expr", "base", "--backend", "both", "--format", "json",
                          *SMALL, "--out", str(out))
    assert code == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["backend"] for r in recs] == ["svd", "kernel"]
    assert abs(recs[0]["S"] - recs[1]["S"]) < 1e-6
    assert "backend agreement" in stdout


def test_parse_error_exit_code(capsys):
    code, _, err = run(capsys, "entropy", "--expr", "base * (phase(pi) + ", *SMALL)
    assert code == 2 and "byte" in err


def test_numerical_error_exit_code(capsys):
    code, _, err = run(capsys, "entropy", "--expr", "base - base", *SMALL)
    assert code == 3 and "destructive" in err


# --- sweep ---------------------------------------------------------------------

def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--preset", "fs", "--axis", "phi", "--from", "0", "--to", "6.2832",
                     "--steps", "9", *SMALL, "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["phi", "S", "purity", *[f"lambda_{k}" for k in range(1, 9)], "tail", "ms", "error"]
    s = [float(r[1]) for r in rows[1:]]
    assert int(np.argmin(s)) in (0, 8) and int(np.argmax(s)) == 4
    assert open(out, "rb").read().count(b"\r") == 0


def test_sweep_output_is_stable(tmp_path, capsys):
    args = ["sweep", "--preset", "fc", "--phi", "pi", "--target", "i", "--axis", "gamma_c", "--from", "0.1",
            "--to", "10", "--steps", "3", *SMALL]
    run(capsys, *args, "--out", str(tmp_path / "a.csv"))
    run(capsys, *args, "--out", str(tmp_path / "b.csv"))
    a, b = read_csv(tmp_path / "a.csv"), read_csv(tmp_path / "b.csv")
    ms = a[0].index("ms")
    strip = lambda rows: [r[:ms] + r[ms + 1:] for r in rows]  # noqa: E731
    assert strip(a) == strip(b)
    assert [f for f in os.listdir(tmp_path) if f.startswith(".tmp")] == []


def test_sweep_iterated_stages(tmp_path, capsys):
    out = tmp_path / "it.csv"
    code, _, _ = run(capsys, "sweep", "--preset", "iterated", "--axis", "stages", "--from", "1", "--to", "4",
                     "--steps", "4", "--gamma-c-i", "5", "--gamma-c-s", "5", *SMALL, "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
    purity = [float(r[2]) for r in rows[1:]]
    assert purity == sorted(purity)


def test_sweep_constant_for_unused_axis(tmp_path, capsys):
    out = tmp_path / "c.csv"
    run(capsys, "sweep", "--expr", "base", "--axis", "phi", "--from", "0", "--to", "3", "--steps", "3",
        *SMALL, "--out", str(out))
    assert len({r[1] for r in read_csv(out)[1:]}) == 1


def test_sweep_2d_heatmap_json(tmp_path, capsys):
    out, hm = tmp_path / "s.jsonl", tmp_path / "hm.csv"
    code, _, _ = run(capsys, "sweep", "--preset", "fa", "--axis", "gamma_c_s", "--from", "0.1", "--to", "10",
                     "--steps", "3", "--axis2", "gamma_c_i", "--from2", "0.1", "--to2", "10", "--steps2", "2",
                     "--format", "json", *SMALL, "--out", str(out), "--heatmap", str(hm))
    assert code == 0
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == 6 and {"gamma_c_s", "gamma_c_i", "S", "lambdas"} <= set(lines[0])
    rows = read_csv(hm)
    assert len(rows) == 4 and len(rows[0]) == 3
    assert float(rows[1][1]) == pytest.approx(lines[0]["S"], rel=1e-8)


def test_sweep_refine(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--preset", "fs", "--axis", "phi", "--from", "0", "--to", "3.2",
                       "--steps", "3", *SMALL, "--refine", "300", "--out", str(tmp_path / "x.csv"))
    assert code == 0 and "refined min" in err and "refined max" in err


@pytest.mark.parametrize("axis", ["omega", "target"])
def test_unknown_axis(capsys, axis):
    code, _, err = run(capsys, "sweep", "--preset", "fc", "--phi", "0", "--gamma-c", "1", "--target", "i",
                       "--axis", axis, "--from", "0", "--to", "1", *SMALL)
    assert code == 2


def test_axis_not_driving_preset(capsys):
    code, _, err = run(capsys, "sweep", "--preset", "fe", "--axis", "phi", "--from", "0", "--to", "1", *SMALL)
    assert code == 2


# --- spectrum / modes -------------------------------------------------------------

def test_spectrum_layout_and_symmetry(tmp_path, capsys):
    out = tmp_path / "spec.csv"
    code, _, _ = run(capsys, "spectrum", "--preset", "fs", "--phi", "0", *SMALL, "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    axis = np.array([float(v) for v in rows[0][1:]])
    assert axis.size == 256 and axis[0] == pytest.approx(-150 + 300 / 512, rel=1e-8)
    mat = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    np.testing.assert_allclose([float(r[0]) for r in rows[1:]], axis, rtol=1e-8)
    np.testing.assert_allclose(mat, mat.T, atol=1e-12)


def test_spectrum_fc_confined_to_cavity_band(tmp_path, capsys):
    out = tmp_path / "fc.csv"
    run(capsys, "spectrum", "--preset", "fc", "--phi", "pi", "--gamma-c", "1", "--target", "i",
        "--points", "512", "--out", str(out))
    rows = read_csv(out)
    y = np.array([float(v) for v in rows[0][1:]])
    inten = np.array([[float(v) for v in r[1:]] for r in rows[1:]]) ** 2
    # most of the weight sits within a few linewidths of idler resonance
    assert inten[:, np.abs(y) <= 2.0].sum() / inten.sum() > 0.9


def test_spectrum_fd_vanishing_cut(tmp_path, capsys):
    out = tmp_path / "fd.csv"
    run(capsys, "spectrum", "--preset", "fd", "--gamma-c-i2", "1", "--gamma-c-s2", "1", *SMALL, "--out", str(out))
    rows = read_csv(out)
    mat = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    anti = np.fliplr(mat).diagonal()
    assert anti.max() < 1e-9 * mat.max()


def test_modes_table(tmp_path, capsys):
    out = tmp_path / "modes.csv"
    code, _, err = run(capsys, "modes", "--expr", "base", "-n", "3", *SMALL, "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][:5] == ["detuning", "re_psi_1", "im_psi_1", "re_phi_1", "im_phi_1"]
    assert len(rows[0]) == 1 + 4 * 3 and len(rows) == 257
    psi1 = np.array([float(r[1]) + 1j * float(r[2]) for r in rows[1:]])
    assert np.sum(np.abs(psi1) ** 2) * 300 / 256 == pytest.approx(1.0, abs=1e-6)
    assert "lambda_1" in err


def test_modes_too_many(capsys):
    code, _, _ = run(capsys, "modes", "--expr", "cav(i, 1) * base", "-n", "10000", *SMALL)
    assert code == 2


# --- repro / convergence -----------------------------------------------------------

def test_repro_small(tmp_path, capsys):
    out = tmp_path / "repro.csv"
    code, stdout, _ = run(capsys, "repro", "--points", "512", "--no-convergence", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0][:4] == ["item", "scheme", "quantity", "value"]
    assert {r[0] for r in rows[1:]} == {"1", "2", "3", "4", "5"}
    assert "PASS" in stdout


def test_convergence_command(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code, stdout, _ = run(capsys, "convergence", "--expr", "base", "--base-points", "256", "--levels", "2",
                          "--out", str(out))
    assert code == 0 and "converged: True" in stdout
    assert [r[0] for r in read_csv(out)] == ["points", "256", "512"]


def test_stdout_when_no_out(capsys):
    code, out, _ = run(capsys, "spectrum", "--expr", "base", "--points", "4")
    assert code == 0
    assert len(list(csv.reader(io.StringIO(out)))) == 5
