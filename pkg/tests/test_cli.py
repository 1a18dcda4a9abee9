"""Command-line surface: every subcommand, exit codes, output stability."""

import json

import numpy as np
import pytest

from textprobe import cli
from textprobe.io import load_manifest, load_params


def make_task_dir(tmp_path, seed=0, k=4, s=3, d=16):
    out_dir = tmp_path / f"task{seed}"
    rc = cli.main(
        [
            "synth",
            "--seed",
            str(seed),
            "--k",
            str(k),
            "--s",
            str(s),
            "--d",
            str(d),
            "--out-dir",
            str(out_dir),
        ]
    )
    assert rc == 0
    return out_dir / "task.ini"


def test_synth_writes_a_loadable_manifest(tmp_path, capsys):
    manifest = make_task_dir(tmp_path)
    task, text, meta = load_manifest(manifest)
    assert task.support.n == 12
    assert text.classes == 4
    assert task.test_features is not None
    assert meta["shots"] == 3
    capsys.readouterr()


def test_fit_output_is_byte_identical_across_runs(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=1)
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    for out in (out_a, out_b):
        rc = cli.main(
            ["fit", "--manifest", str(manifest), "--budget", "40", "--out", str(out)]
        )
        assert rc == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    payload = json.loads(out_a.read_text())
    assert payload["budget"] == 40
    assert payload["strategy"] == "bmm"
    assert "test_acc" in payload
    assert "elapsed" not in payload  # wall-clock goes to stderr only
    assert len(payload["loss_trace"]) == 40
    capsys.readouterr()


def test_fit_params_out_then_predict(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=2)
    params_path = tmp_path / "probe.lppp"
    rc = cli.main(
        [
            "fit",
            "--manifest",
            str(manifest),
            "--budget",
            "40",
            "--params-out",
            str(params_path),
        ]
    )
    assert rc == 0
    loaded = load_params(params_path)
    assert loaded.w.shape == (4, 16)

    pred_path = tmp_path / "pred.lplb"
    out = tmp_path / "pred.json"
    rc = cli.main(
        [
            "predict",
            "--manifest",
            str(manifest),
            "--params",
            str(params_path),
            "--out",
            str(out),
            "--pred-out",
            str(pred_path),
        ]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["split"] == "test"
    assert 0.0 <= payload["accuracy"] <= 1.0
    from textprobe.io import load_labels

    stored = load_labels(pred_path)
    assert stored.n == payload["n"]
    np.testing.assert_array_equal(stored.labels, payload["predictions"])
    capsys.readouterr()


def test_predict_split_selection(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=3)
    params_path = tmp_path / "p.lppp"
    cli.main(
        [
            "fit",
            "--manifest",
            str(manifest),
            "--budget",
            "30",
            "--params-out",
            str(params_path),
        ]
    )
    out = tmp_path / "val.json"
    rc = cli.main(
        [
            "predict",
            "--manifest",
            str(manifest),
            "--params",
            str(params_path),
            "--split",
            "val",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert json.loads(out.read_text())["split"] == "val"
    capsys.readouterr()


def test_training_free_subcommand(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=4)
    out = tmp_path / "tf.json"
    rc = cli.main(
        ["training-free", "--manifest", str(manifest), "--out", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert 0.0 <= payload["accuracy"] <= 1.0
    assert payload["n"] == len(payload["predictions"])
    capsys.readouterr()


def test_sweep_lr_grid_and_lipschitz_row(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=5)
    out = tmp_path / "sweep.json"
    rc = cli.main(
        [
            "sweep-lr",
            "--manifest",
            str(manifest),
            "--grid",
            "1e-2..1e0x3",
            "--budget",
            "20",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    np.testing.assert_allclose(payload["grid"], [1e-2, 1e-1, 1e0], rtol=1e-12)
    assert payload["lipschitz_lr"] > 0
    assert payload["lipschitz_result"]["lr"] == payload["lipschitz_lr"]
    for entry in payload["results"]:
        assert entry["diverged"] in (0, 1)
    capsys.readouterr()


def test_sweep_lr_default_grid_has_seven_points(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=6)
    out = tmp_path / "sweep.json"
    rc = cli.main(
        ["sweep-lr", "--manifest", str(manifest), "--budget", "10", "--out", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    np.testing.assert_allclose(payload["grid"], np.geomspace(1e-4, 1e2, 7), rtol=1e-12)
    capsys.readouterr()


def test_bad_grid_is_exit_code_two(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=7)
    rc = cli.main(
        ["sweep-lr", "--manifest", str(manifest), "--grid", "nonsense"]
    )
    assert rc == 2
    assert "grid" in capsys.readouterr().err


def test_ablate_reports_three_alpha_modes(tmp_path, capsys):
    manifest = make_task_dir(tmp_path, seed=8)
    out = tmp_path / "ablate.json"
    rc = cli.main(
        ["ablate", "--manifest", str(manifest), "--budget", "30", "--out", str(out)]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    variants = [entry["variant"] for entry in payload["rows"]]
    assert variants == ["alpha-learned", "alpha-one", "alpha-zero"]
    capsys.readouterr()


def test_check_subcommand_passes(tmp_path, capsys):
    out = tmp_path / "check.json"
    rc = cli.main(["check", "--seed", "0", "--out", str(out)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "FAIL" not in captured.err
    assert captured.err.count("PASS") == 4
    payload = json.loads(out.read_text())
    assert all(entry["passed"] for entry in payload["checks"])


def test_bench_subcommand_small(tmp_path, capsys):
    out = tmp_path / "bench.json"
    rc = cli.main(
        [
            "bench",
            "--n",
            "96",
            "--k",
            "8",
            "--d",
            "32",
            "--budget",
            "12",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["n"] == 96
    assert payload["budget"] == 12
    assert payload["total_seconds"] > 0
    capsys.readouterr()


def test_missing_manifest_is_exit_code_two(tmp_path, capsys):
    rc = cli.main(["fit", "--manifest", str(tmp_path / "none.ini")])
    assert rc == 2
    assert capsys.readouterr().err != ""


def test_unknown_subcommand_fails(capsys):
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
    capsys.readouterr()
