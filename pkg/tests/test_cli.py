import json

import numpy as np
import pytest

from nlpca_validation.cli import main
from nlpca_validation.datagen import GeneratorConfig, read_csv
from nlpca_validation.optimizer import CgConfig
from nlpca_validation.validation import SweepConfig


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture(autouse=True)
def _outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("NLPCA_OUTPUT_DIR", str(tmp_path))


def test_generate_is_byte_identical(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "helix", "--n", "20", "--seed", "3", "--out", "a.csv")
    assert code == 0 and out["n_samples"] == 20 and out["dim"] == 3
    run(capsys, "generate", "helix", "--n", "20", "--seed", "3", "--out", "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.mask.csv").read_bytes() == (tmp_path / "b.mask.csv").read_bytes()


def test_generate_masked(tmp_path, capsys):
    code, _, _ = run(capsys, "generate", "gauss2d", "--n", "30", "--mask-one", "--out", "g.csv")
    assert code == 0
    data = read_csv(tmp_path / "g.csv")
    assert np.all(data.mask.sum(axis=1) == 1)


def test_train_and_curve(tmp_path, capsys):
    run(capsys, "generate", "helix", "--n", "20", "--seed", "1", "--out", "h.csv")
    code, out, _ = run(capsys, "train", str(tmp_path / "h.csv"), "--layers", "1-5-3",
                       "--nu", "0.001", "--iters", "200", "--zscore", "--out", "m.json")
    assert code == 0
    assert out["total"] >= out["reconstruction"]
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["normalization"] is not None
    code, out, _ = run(capsys, "curve", str(tmp_path / "m.json"), "--n-grid", "50")
    assert code == 0 and out["rows"] == 50
    rows = (tmp_path / "curve.csv").read_text().splitlines()
    assert rows[0] == "z,x1,x2,x3" and len(rows) == 51


def test_sweep_and_select(tmp_path, capsys):
    cfg = SweepConfig("tiny", (1e-3, 1e-1), 2, GeneratorConfig("gauss2d", 10, 1.0),
                      GeneratorConfig("gauss2d", 10, 1.0), (1, 2, 2), CgConfig(max_iterations=30),
                      infer_cg=CgConfig(max_iterations=20), n_starts=2)
    (tmp_path / "cfg.json").write_text(json.dumps(cfg.to_dict()))
    code, out, _ = run(capsys, "sweep", "--config", str(tmp_path / "cfg.json"), "--workers", "1",
                       "--out-prefix", "runs/tiny")
    assert code == 0
    assert (tmp_path / "runs" / "tiny.csv").exists()
    code, sel, _ = run(capsys, "select", out["report"])
    assert code == 0 and sel["nu"] == out["selected_nu"]


def test_sweep_accepts_paper_scale_flag(capsys):
    code, _, err = run(capsys, "sweep", "--paper-scale", "--restarts", "0")
    assert code == 2 and json.loads(err)["error"] == "usage"


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["generate", "torus", "--n", "3"],
    ["train", "x.csv", "--layers", "one-two"],
    ["generate", "helix", "--n", "0"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_malformed_csv_exits_3(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("x1,x2\n1,2\n3\n")
    code, _, err = run(capsys, "train", str(tmp_path / "bad.csv"), "--layers", "1-2-2")
    assert code == 3
    assert "bad.csv:3" in json.loads(err)["message"]


def test_missing_file_and_dimension_mismatch_exit_3(tmp_path, capsys):
    code, _, _ = run(capsys, "train", str(tmp_path / "nope.csv"), "--layers", "1-2-2")
    assert code == 3
    run(capsys, "generate", "helix", "--n", "5", "--out", "h.csv")
    code, _, err = run(capsys, "train", str(tmp_path / "h.csv"), "--layers", "1-2-2")
    assert code == 3 and "dimension" in json.loads(err)["message"]
    code, _, _ = run(capsys, "select", str(tmp_path / "h.csv"))
    assert code == 3
