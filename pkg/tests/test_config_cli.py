import json

import numpy as np
import pytest

from prkhs.cli import main
from prkhs.config import DEFAULTS, ConfigError, apply_override, load_config
from prkhs.operator import load_operator

SMALL = ["--set", "T_u=12", "--set", "T_x=6", "--set", "N=4", "--set", "validation.n_rollouts=8"]


# -- config -------------------------------------------------------------------

def test_defaults_and_derived_seeds():
    cfg = load_config()
    assert (cfg.T_u, cfg.T_x, cfg.N) == (60, 20, 10)
    assert cfg.raw["multisine"]["seed"] == 1
    assert cfg.raw["validation"]["state_seed"] == 5
    assert cfg.raw["validation"]["stride"] == 11
    assert cfg.raw["standard"]["num_points"] == 1200
    assert cfg.to_manifest()["rng_algorithm"] == "numpy.random.PCG64"
    cfg7 = load_config(overrides=["seed=7"])
    assert cfg7.raw["states"]["seed"] == 9


def test_explicit_seed_wins():
    cfg = load_config(text='{"seed": 3, "states": {"seed": 100}}')
    assert cfg.raw["states"]["seed"] == 100
    assert cfg.raw["multisine"]["seed"] == 4


def test_error_reports_line():
    text = '{\n  "N": 10,\n  "T_u": -4\n}'
    with pytest.raises(ConfigError, match=r"T_u \(line 3\)"):
        load_config(text=text)


def test_bad_json_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        load_config(text='{"N": 3,\n "T_u": }')


@pytest.mark.parametrize("text", [
    '{"bogus": 1}',
    '{"product_kernel": {"ku": {"family": "poly", "sigma": 1}}}',
    '{"standard_kernel": {"family": "gaussian", "sigma": 0}}',
    '{"standard": {"data": "random"}}',
    '{"validation": {"n_rollouts": 0}}',
    '{"system": {"name": "lorenz"}}',
    '{"states": {"box_lo": [0.0], "box_hi": [1.0]}}',
    '{"multisine": {"lo": 1.0, "hi": 1.0}}',
    '{"N": 2.5}',
    '[1, 2]',
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        load_config(text=text)


def test_override_parsing():
    raw = apply_override({}, "product_kernel.ku.sigma=0.5")
    assert raw == {"product_kernel": {"ku": {"sigma": 0.5}}}
    assert apply_override({}, "system.name=van_der_pol")["system"]["name"] == "van_der_pol"
    with pytest.raises(ConfigError):
        apply_override({}, "no-equals-sign")
    # overrides never mutate the defaults
    load_config(overrides=["T_u=3"])
    assert DEFAULTS["T_u"] == 60


# -- CLI ----------------------------------------------------------------------

def run(*argv):
    return main([str(a) for a in argv])


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "T_x": 0\n}')
    assert run("gen-data", "--config", bad, "--out", tmp_path / "d") == 2
    assert "line 2" in capsys.readouterr().err


def test_cli_missing_file_is_io_error(tmp_path):
    assert run("gen-data", "--config", tmp_path / "missing.json", "--out", tmp_path / "d") == 4
    assert run("predict", "--model", tmp_path / "missing.json", "--x", "0,0", "--u", "0") == 4


def test_cli_singular_exit_code(tmp_path):
    # an enormous kernel width makes every Gram numerically rank one
    args = SMALL + ["--set", "product_kernel.kx.sigma=1e8"]
    assert run("gen-data", *args, "--out", tmp_path / "d") == 0
    assert run("train", *args, "--data", tmp_path / "d", "--out", tmp_path / "m.json") == 3


def test_cli_product_pipeline(tmp_path, capsys):
    d, m, v = tmp_path / "d", tmp_path / "m.json", tmp_path / "v"
    assert run("gen-data", *SMALL, "--out", d) == 0
    for name in ("signal.csv", "u_windows.csv", "states.csv", "trajectories.csv", "manifest.json"):
        assert (d / name).exists()
    manifest = json.loads((d / "manifest.json").read_text())
    assert manifest["T_u"] == 12 and manifest["config"]["rng_algorithm"] == "numpy.random.PCG64"
    assert len((d / "trajectories.csv").read_text().splitlines()) == 1 + 72

    assert run("train", *SMALL, "--data", d, "--out", m) == 0
    op = load_operator(m)
    assert op.dataset.T_u == 12 and op.counters.kernel_evals == 144 + 36

    assert run("validate", *SMALL, "--model", m, "--out", v) == 0
    rep = json.loads((v / "report.json").read_text())
    assert rep["n_rollouts"] == 8
    assert np.isfinite(rep["overall"])
    assert (v / "rms.csv").read_text().splitlines()[0] == "step,rms_x1,rms_x2"

    assert run("validate", *SMALL, "--model", m, "--out", v, "--from-training") == 0
    assert json.loads((v / "report.json").read_text())["overall"] < 1e-6
    capsys.readouterr()

    # single query on stdout matches the model
    x0 = op.dataset.x_points[0]
    u0 = op.dataset.u_points[0]
    assert run("predict", "--model", m, "--x=" + ",".join(str(float(v)) for v in x0),
               "--u=" + ",".join(str(float(v)) for v in u0)) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("y_0,")
    got = np.array([float(t) for t in lines[1].split(",")])
    assert np.max(np.abs(got - op.dataset.column(0, 0))) < 1e-6


def test_cli_predict_queries_csv(tmp_path):
    d, m = tmp_path / "d", tmp_path / "m.json"
    run("gen-data", *SMALL, "--out", d)
    run("train", *SMALL, "--data", d, "--out", m)
    q = tmp_path / "q.csv"
    q.write_text("x_0,x_1,u_0,u_1,u_2,u_3,u_4\n0.1,0.2,1,0,0,0,0\n-0.3,0.4,0,1,2,3,4\n")
    assert run("predict", "--model", m, "--queries", q, "--out", tmp_path / "p.csv") == 0
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[0].count(",") == 9


def test_cli_predict_needs_query(tmp_path):
    d, m = tmp_path / "d", tmp_path / "m.json"
    run("gen-data", *SMALL, "--out", d)
    run("train", *SMALL, "--data", d, "--out", m)
    assert run("predict", "--model", m, "--x", "0,0") == 2
    assert run("predict", "--model", m, "--x", "0,zero", "--u", "0,0,0,0,0") == 2


def test_cli_standard_pipeline(tmp_path):
    args = SMALL + ["--set", "standard.num_points=40"]
    d, m, v = tmp_path / "d", tmp_path / "m.json", tmp_path / "v"
    assert run("gen-data", *args, "--approach", "standard", "--out", d) == 0
    assert len((d / "standard_lifted.csv").read_text().splitlines()) == 41
    assert run("train", *args, "--approach", "standard", "--data", d, "--out", m) == 0
    op = load_operator(m)
    assert op.T == 40 and op.counters.kernel_evals == 1600
    assert run("validate", *args, "--model", m, "--out", v) == 0
    assert run("validate", *args, "--model", m, "--out", v, "--from-training") == 0
    assert json.loads((v / "report.json").read_text())["overall"] < 1e-6


def test_cli_validate_horizon_mismatch(tmp_path):
    d, m = tmp_path / "d", tmp_path / "m.json"
    run("gen-data", *SMALL, "--out", d)
    run("train", *SMALL, "--data", d, "--out", m)
    assert run("validate", *SMALL, "--set", "N=5", "--model", m, "--out", tmp_path / "v") == 2


def test_cli_compare_fitted(tmp_path, capsys):
    args = SMALL + ["--set", "standard.num_points=72"]
    assert run("compare", *args, "--out", tmp_path / "c") == 0
    out = json.loads((tmp_path / "c" / "compare.json").read_text())
    assert out["product"]["status"] == "fitted" and out["standard"]["status"] == "fitted"
    # fit plus one 72-point vector-kernel per validation rollout
    assert out["standard"]["counters"]["kernel_evals"] == 72 * 72 + 8 * 72
    header = (tmp_path / "c" / "compare.csv").read_text().splitlines()[0]
    assert header == "step,product_rms_x1,product_rms_x2,standard_rms_x1,standard_rms_x2"
    assert "standard: fitted" in capsys.readouterr().out


def test_cli_compare_grid_equivalence(tmp_path):
    # the baseline on the full grid with the product kernel is the same interpolant
    args = SMALL + ["--set", "standard.data=grid", "--set", "standard.kernel=product"]
    assert run("compare", *args, "--out", tmp_path / "c") == 0
    out = json.loads((tmp_path / "c" / "compare.json").read_text())
    a = np.array(out["product"]["report"]["per_step"])
    b = np.array(out["standard"]["report"]["per_step"])
    np.testing.assert_allclose(a, b, atol=1e-8, rtol=0)


def test_cli_compare_projects_large_baseline(tmp_path):
    args = SMALL + ["--set", "standard.num_points=43500"]
    assert run("compare", *args, "--out", tmp_path / "c") == 0
    out = json.loads((tmp_path / "c" / "compare.json").read_text())
    assert out["standard"]["status"] == "cost-projected"
    assert out["standard"]["projected_kernel_evals"] == 1_892_250_000
    assert out["standard"]["report"] is None


def test_cli_bench(tmp_path):
    assert run("bench", *SMALL, "--out", tmp_path / "b") == 0
    res = json.loads((tmp_path / "b" / "bench.json").read_text())
    assert res["fit_kernel_evals"] == 144 + 36
    assert res["standard_projected_kernel_evals"] == 72 * 72
    assert res["counters"]["kernel_evals"] == 180 + 8 * 18


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "prkhs", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "gen-data" in r.stdout
