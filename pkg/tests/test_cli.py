import numpy as np
import pytest

from mixupgeom.cli import main, parse_config
from mixupgeom.etf import build_simplex_etf, write_classifier_csv


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_theory_solve_prints_six_decimal_loss(tmp_path, capsys):
    out = tmp_path / "features.csv"
    code, stdout, _ = run(
        ["theory-solve", "--samples", "50", "--seed", "0", "--out", str(out)],
        capsys,
    )
    assert code == 0
    value = stdout.strip()
    assert len(value.split(".")[1]) == 6
    assert out.exists()
    assert (tmp_path / "features.csv.summary.json").exists()


def test_theory_solve_rejects_zero_samples(capsys):
    code, _, stderr = run(["theory-solve", "--samples", "0"], capsys)
    assert code != 0
    assert "samples" in stderr


def test_theory_solve_byte_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["theory-solve", "--samples", "20", "--out", str(a)], capsys)
    run(["theory-solve", "--samples", "20", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_oracle_check_small_grid(capsys):
    code, stdout, _ = run(
        [
            "oracle-check",
            "--C-list", "3",
            "--m-list", "1",
            "--lambda-h-list", "1e-2",
            "--lambda-list", "0.25,0.5",
        ],
        capsys,
    )
    assert code == 0
    assert "ok" in stdout


def test_oracle_check_negative_control(capsys):
    code, stdout, _ = run(
        [
            "oracle-check",
            "--C-list", "3",
            "--m-list", "1",
            "--lambda-h-list", "1e-2",
            "--lambda-list", "0.5",
            "--perturb", "0.05",
        ],
        capsys,
    )
    assert code == 1
    assert "FAIL" in stdout


def test_oracle_check_empty_grid(capsys):
    code, _, stderr = run(["oracle-check", "--C-list", ""], capsys)
    assert code == 2
    assert "empty" in stderr


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ValueError, match="line 2.*unknown"):
        parse_config("train.epochs = 3\ntrain.optimizer = adam\n")
    with pytest.raises(ValueError, match="duplicate"):
        parse_config("train.epochs = 3\ntrain.epochs = 4\n")


def test_train_extract_project_pipeline(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "dataset.samples_per_class = 40\n"
        "dataset.seed = 0\n"
        "train.epochs = 3\n"
        "train.seed = 0\n"
    )
    model = tmp_path / "model.json"
    data = tmp_path / "data.csv"
    code, _, _ = run(
        ["train", "--config", str(cfg), "--out", str(model), "--dataset-out", str(data)],
        capsys,
    )
    assert code == 0 and model.exists() and data.exists()

    acts = tmp_path / "acts.csv"
    code, stdout, _ = run(
        [
            "extract", "--model", str(model), "--dataset", str(data),
            "--count", "10", "--seed", "1", "--out", str(acts),
        ],
        capsys,
    )
    assert code == 0 and "10" in stdout

    clf = tmp_path / "clf.csv"
    frame = build_simplex_etf(3, 16, 1.0, seed=0)
    write_classifier_csv(clf, frame.rows)
    points = tmp_path / "points.csv"
    code, _, _ = run(
        ["project", "--features", str(acts), "--classifier", str(clf),
         "--out", str(points)],
        capsys,
    )
    assert code == 0
    assert points.read_text().startswith("class_i,class_ip,lambda,kind,amplified,px,py")

    traj = tmp_path / "traj.csv"
    code, _, _ = run(
        ["trajectory", "--model", str(model), "--dataset", str(data),
         "--i", "0", "--j", "50", "--lam", "0.4", "--out", str(traj)],
        capsys,
    )
    assert code == 0
    lines = traj.read_text().strip().split("\n")
    assert lines[0] == "layer,px,py" and len(lines) == 4  # 3 hidden layers


def test_train_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("train.epochs = banana\n")
    code, _, stderr = run(
        ["train", "--config", str(cfg), "--out", str(tmp_path / "m.json")], capsys
    )
    assert code == 1
    assert "line 1" in stderr


def test_ece_hand_case(tmp_path, capsys):
    preds = tmp_path / "preds.csv"
    preds.write_text(
        "confidence,predicted,label\n0.9,0,0\n0.8,1,1\n0.6,0,1\n0.55,2,2\n"
    )
    code, stdout, _ = run(
        ["ece", "--predictions", str(preds), "--bins", "2"], capsys
    )
    assert code == 0
    assert stdout.strip() == "0.037500"


def test_ece_bad_file(tmp_path, capsys):
    preds = tmp_path / "preds.csv"
    preds.write_text("confidence,predicted,label\n0.9,0\n")
    code, _, stderr = run(["ece", "--predictions", str(preds)], capsys)
    assert code == 1
    assert ":2:" in stderr


def test_etf_metrics_on_exact_frame(tmp_path, capsys):
    clf = tmp_path / "clf.csv"
    write_classifier_csv(clf, build_simplex_etf(4, 7, 2.0, seed=0).rows)
    code, stdout, _ = run(["etf-metrics", "--classifier", str(clf)], capsys)
    assert code == 0
    cv, cs = (float(v) for v in stdout.split())
    assert cv < 1e-12 and cs < 1e-12


def test_help_available_for_every_command(capsys):
    for cmd in [
        "theory-solve", "oracle-check", "train", "extract",
        "project", "ece", "etf-metrics", "trajectory",
    ]:
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        assert "--" in capsys.readouterr().out
