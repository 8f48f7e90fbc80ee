import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from richards_homog import cli
from richards_homog.config import DEFAULT_SEED, RunConfig, load_config
from richards_homog.pipeline import read_dataset
from richards_homog.surrogate import HIDDEN_WIDTHS, init_network, load_model

FAST = ["--record-steps", "5", "20"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert cli.main(["generate", "--count", "10", "--seed", "7", "--out", str(d / "ds.rhds"), *FAST]) == 0
    return d


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_defaults():
    c = RunConfig()
    assert (c.fine_side, c.coarse_side, c.sigma2, c.eta1, c.eta2) == (128, 8, 2.0, 0.2, 0.2)
    assert (c.kappa_min, c.kappa_max, c.picard_tol, c.picard_max) == (1000.0, 4200.0, 1e-6, 4)
    assert (c.terminal_time, c.time_steps) == (5e-5, 20)
    with pytest.raises(ValueError):
        RunConfig(fine_side=100)
    with pytest.raises(ValueError):
        RunConfig(coarse_side=7)


def test_config_file_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("RH_SEED", raising=False)
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nepochs = 12\nrecord_steps = 1, 20\nsteady = no\nsigma2 = 1.5\n")
    c = load_config(ini)
    assert (c.epochs, c.record_steps, c.steady, c.sigma2, c.seed) == (12, (1, 20), False, 1.5, DEFAULT_SEED)
    assert load_config(ini, epochs=3, sigma2=None).epochs == 3
    ini.write_text("[run]\nbogus = 1\n")
    with pytest.raises(ValueError):
        load_config(ini)


def test_env_seed(monkeypatch):
    monkeypatch.setenv("RH_SEED", "99")
    assert RunConfig().seed == 99


def test_help_lists_config_defaults(capsys):
    for sub in ("generate", "train", "evaluate", "solve"):
        with pytest.raises(SystemExit) as ex:
            cli.main([sub, "--help"])
        assert ex.value.code == 0
        text = " ".join(capsys.readouterr().out.split())
        defaults = RunConfig()
        for flag, value in [("--fine-side", 128), ("--coarse-side", 8), ("--picard-tol", 1e-06),
                            ("--epochs", 300), ("--batch", 64), ("--terminal-time", 5e-05),
                            ("--kappa-max", 4200.0), ("--energy-threshold", 0.95)]:
            assert flag in text
            assert f"(default: {value})" in text
        assert f"(default: {' '.join(map(str, defaults.record_steps))})" in text


def test_generate(workdir):
    ds = read_dataset(workdir / "ds.rhds")
    assert len(ds) == 10 and ds.header.base_seed == 7
    manifest = json.loads((workdir / "ds.rhds.manifest.json").read_text())
    assert manifest["written"] == 10 and manifest["config"]["record_steps"] == [5, 20]


def test_generate_twice_identical(workdir, tmp_path):
    out = tmp_path / "again.rhds"
    assert cli.main(["generate", "--count", "10", "--seed", "7", "--out", str(out), *FAST]) == 0
    assert out.read_bytes() == (workdir / "ds.rhds").read_bytes()


def test_generate_validation(tmp_path):
    assert cli.main(["generate", "--count", "0", "--out", str(tmp_path / "x.rhds")]) == 1
    assert cli.main(["generate", "--count", "2", "--fine-side", "100",
                     "--out", str(tmp_path / "x.rhds")]) == 1
    with pytest.raises(SystemExit) as ex:
        cli.main(["generate", "--bogus"])
    assert ex.value.code == 1


def test_train_and_curve(workdir):
    out = workdir / "kappa_try.json"
    assert cli.main(["train", "--dataset", str(workdir / "ds.rhds"), "--target", "kappa",
                     "--epochs", "3", "--batch", "4", "--seed", "1", "--out", str(out)]) == 0
    rows = _rows(workdir / "kappa_try.curve.csv")
    assert len(rows) == 3 and set(rows[0]) == {"epoch", "train_rmse", "val_rmse"}
    assert load_model(out).metadata["target"] == "kappa"


def test_train_zero_epochs(workdir):
    out = workdir / "zero.json"
    assert cli.main(["train", "--dataset", str(workdir / "ds.rhds"), "--target", "kappa",
                     "--epochs", "0", "--seed", "3", "--out", str(out)]) == 0
    assert _rows(workdir / "zero.curve.csv") == []
    w = HIDDEN_WIDTHS["kappa"]
    ref = init_network([256, w, w, w, 256], seed=3)
    got = load_model(out).net
    assert all(np.array_equal(a, b) for a, b in zip(got.params(), ref.params()))


def test_train_step_rules(workdir):
    ds = str(workdir / "ds.rhds")
    assert cli.main(["train", "--dataset", ds, "--target", "matrix", "--epochs", "1",
                     "--out", str(workdir / "m.json")]) == 1
    assert cli.main(["train", "--dataset", ds, "--target", "rhs", "--step", "7", "--epochs", "1",
                     "--out", str(workdir / "m.json")]) == 1
    assert cli.main(["train", "--dataset", ds, "--target", "matrix", "--step", "20", "--epochs", "1",
                     "--out", str(workdir / "m.json")]) == 0
    assert cli.main(["train", "--dataset", str(workdir / "none.rhds"), "--target", "kappa",
                     "--out", str(workdir / "m.json")]) == 1


def test_evaluate_oracle_steady(workdir):
    out = workdir / "rep_steady"
    assert cli.main(["evaluate", "--dataset", str(workdir / "ds.rhds"), "--oracle", "--mode", "steady",
                     "--out", str(out)]) == 0
    rows = _rows(out / "errors_steady.csv")
    assert len(rows) == 2
    assert list(rows[0])[:7] == ["sample_id", "e_kappa", "e_matrix", "eE_L2", "eE_H1", "eA_L2", "eA_H1"]
    assert all(float(v) <= 1e-8 for r in rows for k, v in r.items() if k != "sample_id")
    assert (out / "solution_steady_reference.csv").exists()


def test_evaluate_transient_columns(workdir):
    out = workdir / "rep_transient"
    assert cli.main(["evaluate", "--dataset", str(workdir / "ds.rhds"), "--oracle", "--mode", "transient",
                     "--out", str(out)]) == 0
    header = list(_rows(out / "errors_transient.csv")[0])
    assert header[:10] == ["sample_id", "e_kappa", "e_matrix_step5", "e_matrix_step20", "e_b_step5",
                           "e_b_step20", "eE_L2", "eE_H1", "eA_L2", "eA_H1"]
    summary = _rows(out / "summary_transient.csv")
    assert {r["metric"] for r in summary} >= {"e_matrix_step5", "e_b_step20"}


def test_evaluate_missing_model(workdir, capsys):
    assert cli.main(["evaluate", "--dataset", str(workdir / "ds.rhds"), "--models",
                     str(workdir / "nowhere"), "--out", str(workdir / "r")]) == 1
    assert "model file not found" in capsys.readouterr().err


def test_solve_and_inspect(workdir, capsys):
    out = workdir / "solve"
    assert cli.main(["solve", "--seed", "42", "--out", str(out)]) == 0
    assert len(_rows(out / "solution.csv")) == 81
    assert len(_rows(out / "effective.csv")) == 64
    capsys.readouterr()
    assert cli.main(["inspect", str(workdir / "ds.rhds")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n_samples"] == 10 and info["recorded_steps"] == [5, 20]
    assert cli.main(["inspect", str(workdir / "zero.json")]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "model"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "richards_homog", "inspect", "/nonexistent"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "not found" in r.stderr
