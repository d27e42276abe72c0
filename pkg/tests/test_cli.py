import json
import subprocess
import sys

import numpy as np
import pytest

from condensity import estimator as E
from condensity import oracles, serialize
from condensity.cli import main
from condensity.dataio import read_matrix, write_matrix

FAST = {"M": 10, "h": 0.05, "grid_size": 100, "seed": 3,
        "regressor": {"variant": "tree", "max_rounds": 15, "min_data_in_leaf": 10}}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps(FAST))
    assert main(["generate", "--mechanism", "single_relevant", "--n", "800", "--seed", "1",
                 "--out", str(tmp_path / "train.csv")]) == 0
    assert main(["generate", "--mechanism", "single_relevant", "--n", "200", "--seed", "2",
                 "--out", str(tmp_path / "test.csv")]) == 0
    return tmp_path


def test_generate_shape(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["generate", "--mechanism", "single_relevant", "--n", "5", "--seed", "9", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 6
    assert lines[0] == ",".join([f"x_{j}" for j in range(20)] + ["y"])
    assert all(len(line.split(",")) == 21 for line in lines)
    first = out.read_bytes()
    assert main(["generate", "--mechanism", "single_relevant", "--n", "5", "--seed", "9", "--out", str(out)]) == 0
    assert out.read_bytes() == first
    assert main(["generate", "--mechanism", "illustration2d", "--n", "3", "--seed", "9", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "x_0,y"


def test_generate_bad_mechanism(tmp_path):
    assert main(["generate", "--mechanism", "spiral", "--n", "5", "--out", str(tmp_path / "d.csv")]) == 1


def test_fit_evaluate_summarize(workdir, capsys):
    model = workdir / "model.cdm"
    report = workdir / "report.json"
    assert main(["fit", "--config", str(workdir / "cfg.json"), "--data", str(workdir / "train.csv"),
                 "--out", str(model), "--report", str(report)]) == 0
    rep = json.loads(report.read_text())
    assert np.isfinite(rep["validation_ise"])
    assert set(rep) >= {"validation_ise", "n_train", "n_val", "M", "h", "regressor", "seed", "rounds_trained"}
    assert rep["n_train"] == 640 and rep["n_val"] == 160 and rep["M"] == 10

    capsys.readouterr()
    assert main(["evaluate", "--model", str(model), "--data", str(workdir / "test.csv")]) == 0
    ev1 = json.loads(capsys.readouterr().out)
    assert main(["evaluate", "--model", str(model), "--data", str(workdir / "test.csv")]) == 0
    ev2 = json.loads(capsys.readouterr().out)
    assert ev1 == ev2
    assert ev1["n_test"] == 200 and ev1["grid_size"] == 100

    test_header, test = read_matrix(workdir / "test.csv")
    xs = workdir / "xs.csv"
    write_matrix(xs, [f"x_{j}" for j in range(20)], test[:4, :20])
    out = workdir / "summary.csv"
    assert main(["summarize", "--model", str(model), "--data", str(xs), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "mode,tail_width,bowley_skew" and len(lines) == 5
    first = out.read_bytes()
    assert main(["summarize", "--model", str(model), "--data", str(xs), "--out", str(out)]) == 0
    assert out.read_bytes() == first
    # a full dataset file (with the y column) summarizes the same covariates
    full = workdir / "full.csv"
    write_matrix(full, test_header, test[:4])
    assert main(["summarize", "--model", str(model), "--data", str(full), "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_fit_deterministic(workdir):
    outs = []
    for k in range(2):
        model, report = workdir / f"m{k}.cdm", workdir / f"r{k}.json"
        assert main(["fit", "--config", str(workdir / "cfg.json"), "--data", str(workdir / "train.csv"),
                     "--out", str(model), "--report", str(report)]) == 0
        outs.append((model.read_bytes(), report.read_bytes()))
    assert outs[0] == outs[1]


def test_fit_reports_bad_cell(workdir, capsys):
    bad = workdir / "bad.csv"
    bad.write_text("x_0,y\n1.0,2.0\n3.0,abc\n")
    assert main(["fit", "--data", str(bad), "--out", str(workdir / "m.cdm")]) == 2
    err = capsys.readouterr().err
    assert "row 3" in err and "'y'" in err


def test_fit_config_errors(workdir):
    cfg = workdir / "bad.json"
    cfg.write_text(json.dumps({"M": 10, "sharpness": 0.1}))
    assert main(["fit", "--config", str(cfg), "--data", str(workdir / "train.csv"),
                 "--out", str(workdir / "m.cdm")]) == 1
    cfg.write_text(json.dumps({"M": 10, "h": 3.0}))
    assert main(["fit", "--config", str(cfg), "--data", str(workdir / "train.csv"),
                 "--out", str(workdir / "m.cdm")]) == 1


def test_fit_degenerate_target(workdir):
    const = workdir / "const.csv"
    write_matrix(const, ["x_0", "y"], [[float(i), 1.0] for i in range(20)])
    assert main(["fit", "--data", str(const), "--out", str(workdir / "m.cdm")]) == 2


def uniform_stub(path, d=20, y_min=-2.0, y_max=3.0):
    serialize.save_estimator(E.constant_estimator(d, y_min, y_max), path)


def test_evaluate_stub_uniform(workdir, capsys):
    stub = workdir / "stub.cdm"
    uniform_stub(stub)
    capsys.readouterr()
    assert main(["evaluate", "--model", str(stub), "--data", str(workdir / "test.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["ise"] == -1.0


def test_evaluate_width_mismatch(workdir, tmp_path):
    stub = workdir / "stub.cdm"
    uniform_stub(stub, d=3)
    assert main(["evaluate", "--model", str(stub), "--data", str(workdir / "test.csv")]) == 2
    junk = tmp_path / "junk.cdm"
    junk.write_bytes(b"junk")
    assert main(["evaluate", "--model", str(junk), "--data", str(workdir / "test.csv")]) == 2


def test_summarize_stub_uniform(workdir):
    stub = workdir / "stub.cdm"
    uniform_stub(stub, d=2, y_min=-2.0, y_max=3.0)
    xs = workdir / "xs.csv"
    write_matrix(xs, ["x_0", "x_1"], [[0.0, 1.0], [2.0, -1.0]])
    out = workdir / "s.csv"
    assert main(["summarize", "--model", str(stub), "--data", str(xs), "--out", str(out)]) == 0
    _, m = read_matrix(out)
    assert m.shape == (2, 3)
    np.testing.assert_allclose(m[:, 1], 0.8 * 5.0, atol=1e-6)
    np.testing.assert_allclose(m[:, 2], 0.0, atol=1e-6)
    write_matrix(xs, ["x_0"], [[0.0]])
    assert main(["summarize", "--model", str(stub), "--data", str(xs), "--out", str(out)]) == 2


def test_gridsearch(workdir):
    out = workdir / "grid.csv"
    assert main(["gridsearch", "--config", str(workdir / "cfg.json"), "--data", str(workdir / "train.csv"),
                 "--m-list", "4", "--h-list", "0.1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "M,h,ise,status" and len(lines) == 2
    assert main(["gridsearch", "--config", str(workdir / "cfg.json"), "--data", str(workdir / "train.csv"),
                 "--m-list", "8,2", "--h-list", "0.1,0.05", "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    assert [(int(r[0]), float(r[1])) for r in rows] == [(2, 0.05), (2, 0.1), (8, 0.05), (8, 0.1)]
    assert all(r[3] == "ok" and np.isfinite(float(r[2])) for r in rows)


def test_gridsearch_bad_lists(workdir):
    assert main(["gridsearch", "--data", str(workdir / "train.csv"), "--m-list", "a,b", "--h-list", "0.1",
                 "--out", str(workdir / "g.csv")]) == 1
    assert main(["gridsearch", "--data", str(workdir / "train.csv"), "--m-list", "2", "--h-list", "5.0",
                 "--out", str(workdir / "g.csv")]) == 1


def test_oracle_check(capsys):
    assert main(["oracle-check"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"]
    assert [c["name"] for c in rep["checks"]] == list(oracles.CHECK_NAMES)


def test_oracle_check_negative_control(capsys):
    assert main(["oracle-check", "--inject-bad-ordering"]) != 0
    rep = json.loads(capsys.readouterr().out)
    failed = {c["name"] for c in rep["checks"] if not c["passed"]}
    assert "l2_gap_truncated_gaussian_decreasing" in failed


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "condensity", "generate", "--mechanism", "manifold",
                           "--n", "3", "--out", str(tmp_path / "d.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "condensity", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1
