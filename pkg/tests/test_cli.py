import json
import subprocess
import sys

import pytest

from heatsink_twin import store
from heatsink_twin.cli import main

CONFIG = {"seed": 11, "samples": 30, "hyperparameters": {"mlp": {"epochs": 20}}}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "cfg.json").write_text(json.dumps(CONFIG))
    assert main(["simulate", "--config", str(d / "cfg.json"), "--out", str(d / "sim")]) == 0
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_outputs(workdir):
    sim = workdir / "sim"
    ds = store.load_dataset(sim / "manifest.csv")
    assert len(ds) == 30
    assert store.load_matrix(sim / "fields.txt").shape[1] == 30
    cfg = json.loads((sim / "run_config.json").read_text())
    assert cfg["seed"] == 11 and cfg["samples"] == 30


def test_simulate_is_reproducible_across_jobs(workdir):
    assert run("simulate", "--config", workdir / "cfg.json", "--out", workdir / "sim2",
               "--jobs", 2) == 0
    for name in ("manifest.csv", "fields.txt", "run_config.json"):
        assert (workdir / "sim" / name).read_bytes() == (workdir / "sim2" / name).read_bytes()


def test_flags_override_config(workdir):
    assert run("simulate", "--config", workdir / "cfg.json", "--samples", 5, "--seed", 3,
               "--out", workdir / "sim5") == 0
    cfg = json.loads((workdir / "sim5" / "run_config.json").read_text())
    assert (cfg["seed"], cfg["samples"]) == (3, 5)


def test_build_rom(workdir):
    assert run("build-rom", "--snapshots", workdir / "sim", "--out", workdir / "rom") == 0
    basis = store.load_basis(workdir / "rom" / "basis.txt")
    coeffs = store.load_dataset(workdir / "rom" / "coefficients.csv")
    assert coeffs.target_names == tuple(f"a{i + 1}" for i in range(basis.k))
    lib = store.load_library(workdir / "rom" / "library.json")
    (cid,) = lib.ids()
    assert lib.lookup(cid).provenance["n_snapshots"] == 30
    first = (workdir / "rom" / "library.json").read_bytes()
    assert run("build-rom", "--snapshots", workdir / "sim", "--out", workdir / "rom") == 0
    assert (workdir / "rom" / "library.json").read_bytes() == first


@pytest.mark.parametrize("kind", ["tree", "knn", "svr-direct", "svr-chained", "mlp"])
def test_train_predict_reproducible(workdir, kind):
    data = workdir / "sim" / "manifest.csv"
    outs = []
    for tag, jobs in (("a", 1), ("b", 2)):
        model = workdir / f"{kind}-{tag}.json"
        pred = workdir / f"{kind}-{tag}.csv"
        assert run("train", "--data", data, "--model", kind, "--seed", 4, "--out", model,
                   "--config", workdir / "cfg.json", "--jobs", jobs) == 0
        assert run("predict", "--model", model, "--input", data, "--out", pred) == 0
        outs.append((model.read_bytes(), pred.read_bytes()))
    assert outs[0] == outs[1]
    header = outs[0][1].decode().splitlines()[0]
    assert header == "sample_id,heat_coef_W_m2K,max_temp_K,total_heat_W"


def test_evaluate_and_report(workdir, capsys):
    args = ("evaluate", "--data", workdir / "sim" / "manifest.csv", "--folds", 3,
            "--repeats", 1, "--seed", 2, "--config", workdir / "cfg.json")
    assert run(*args, "--report", workdir / "r1.json") == 0
    assert run(*args, "--report", workdir / "r2.json") == 0
    assert (workdir / "r1.json").read_bytes() == (workdir / "r2.json").read_bytes()
    capsys.readouterr()
    assert run("report", "--metrics", workdir / "r1.json") == 0
    out = capsys.readouterr().out
    assert "Neural Network (MLP)" in out and "Predicted vs. original" in out
    assert run("report", "--metrics", workdir / "r1.json") == 0
    assert capsys.readouterr().out == out


def test_evaluate_defaults():
    from heatsink_twin.cli import build_parser
    args = build_parser().parse_args(["evaluate", "--data", "d", "--seed", "1", "--report", "r"])
    assert (args.folds, args.repeats) == (10, 3)
    args = build_parser().parse_args(["simulate", "--out", "o", "--seed", "1"])
    from heatsink_twin.config import RunConfig
    assert args.samples is None and RunConfig(seed=1).samples == 1000


def test_validation_errors_exit_1(workdir, tmp_path, capsys):
    (tmp_path / "noseed.json").write_text('{"samples": 3}')
    assert run("simulate", "--config", tmp_path / "noseed.json", "--out", tmp_path / "x") == 1
    (tmp_path / "typo.json").write_text('{"seed": 1, "geometry": {"fin_cnt": 3}}')
    assert run("simulate", "--config", tmp_path / "typo.json", "--out", tmp_path / "x") == 1
    assert "geometry.fin_cnt" in capsys.readouterr().err
    (tmp_path / "neg.json").write_text('{"seed": 1, "material": {"conductivity": -1}}')
    assert run("simulate", "--config", tmp_path / "neg.json", "--out", tmp_path / "x") == 1
    assert "material" in capsys.readouterr().err
    assert run("predict", "--model", tmp_path / "missing.json", "--input", "x",
               "--out", tmp_path / "y") == 1
    assert not (tmp_path / "x").exists()
    with pytest.raises(SystemExit) as exc:
        run("train", "--data", "d.csv", "--model", "forest", "--seed", 1, "--out", "m")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("evaluate", "--data", "d.csv", "--report", "r")  # seed is mandatory
    assert exc.value.code == 1


def test_computation_failure_exits_2(workdir, tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"seed": 0, "hyperparameters":
                                                   {"svr-direct": {"tol": 0.0}}}))
    # an exact-KKT demand cannot be met in floating point: the solver stalls
    assert run("train", "--data", workdir / "sim" / "manifest.csv", "--model", "svr-direct",
               "--seed", 0, "--config", tmp_path / "cfg.json", "--out", tmp_path / "m.json") == 2
    assert not (tmp_path / "m.json").exists()


def test_console_script_usage_exit_code():
    proc = subprocess.run([sys.executable, "-m", "heatsink_twin.cli", "simulate"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "usage" in proc.stderr and proc.stdout == ""
