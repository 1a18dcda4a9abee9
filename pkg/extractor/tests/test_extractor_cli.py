import json

import pytest
from ds_helpers import DEFAULT_SPEC, build_dataset

import textprobe.cli
from embed_extractor import cli


def run(capsys, argv):
    rc = cli.main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_full_pipeline_feeds_the_probe_cli(tmp_path, capsys):
    # repeat each class four times so 3-shot support + val fits
    spec = {
        cls: [(f"{i}_{name}", color) for i, (name, color) in enumerate(files * 4)]
        for cls, files in DEFAULT_SPEC.items()
    }
    build_dataset(tmp_path / "data" / "train", spec)
    build_dataset(tmp_path / "data" / "test", DEFAULT_SPEC)

    rc, out, _ = run(capsys, [
        "extract-images", "--dataset-dir", str(tmp_path / "data"), "--split", "train",
        "--features-out", str(tmp_path / "train.lpeb"),
    ])
    assert rc == 0
    train = json.loads(out)
    assert train["classes"] == ["heron", "lynx", "otter"]
    assert train["count"] == 28 and train["dim"] == 64
    assert train["skipped"] == [] and train["skipped_log"] is None

    rc, out, _ = run(capsys, [
        "extract-images", "--dataset-dir", str(tmp_path / "data"), "--split", "test",
        "--features-out", str(tmp_path / "test.lpeb"),
    ])
    assert rc == 0

    templates = tmp_path / "templates.txt"
    templates.write_text("a photo of a {}.\na cropped photo of a {}.\n# comment\n")
    rc, out, _ = run(capsys, [
        "extract-text", "--classes", train["classes_file"],
        "--templates", str(templates), "--text-out", str(tmp_path / "text.lpeb"),
    ])
    assert rc == 0
    text = json.loads(out)
    assert text["templates"] == 2 and text["dim"] == 64

    rc, out, _ = run(capsys, [
        "sample-task", "--features", train["features"], "--labels", train["labels"],
        "--text", text["text"], "--shots", "3", "--seed", "5",
        "--test-features", str(tmp_path / "test.lpeb"),
        "--test-labels", str(tmp_path / "test.lplb"),
        "--out-dir", str(tmp_path / "task"),
    ])
    assert rc == 0
    sampled = json.loads(out)
    assert len(sampled["support_rows"]) == 9

    # the emitted manifest is a regular probe task end to end
    rc = textprobe.cli.main([
        "fit", "--manifest", sampled["manifest"], "--budget", "40",
        "--out", str(tmp_path / "fit.json"),
    ])
    assert rc == 0
    fit_report = json.loads((tmp_path / "fit.json").read_text())
    assert len(fit_report["loss_trace"]) == 40
    assert "test_acc" in fit_report


def test_skipped_images_reported(tmp_path, capsys):
    build_dataset(tmp_path / "data", DEFAULT_SPEC)
    (tmp_path / "data" / "otter" / "bad.png").write_bytes(b"junk")
    rc, out, _ = run(capsys, [
        "extract-images", "--dataset-dir", str(tmp_path / "data"),
        "--features-out", str(tmp_path / "train.lpeb"),
        "--out", str(tmp_path / "summary.json"),
    ])
    assert rc == 0
    payload = json.loads((tmp_path / "summary.json").read_text())
    assert payload["skipped"] == ["otter/bad.png"]
    assert payload["skipped_log"].endswith("train.skipped.txt")


def test_errors_exit_2(tmp_path, capsys):
    rc, _, err = run(capsys, [
        "extract-images", "--dataset-dir", str(tmp_path / "nowhere"),
        "--features-out", str(tmp_path / "x.lpeb"),
    ])
    assert rc == 2 and "error:" in err

    rc, _, err = run(capsys, [
        "extract-images", "--dataset-dir", str(tmp_path), "--encoder", "resnet",
        "--features-out", str(tmp_path / "x.lpeb"),
    ])
    assert rc == 2 and "unknown encoder" in err

    classes = tmp_path / "classes.txt"
    classes.write_text("heron\n")
    rc, _, err = run(capsys, [
        "extract-text", "--classes", str(classes),
        "--templates", str(tmp_path / "missing.txt"),
        "--text-out", str(tmp_path / "t.lpeb"),
    ])
    assert rc == 2 and "error:" in err

    with pytest.raises(SystemExit):
        cli.main(["nonsense"])
    capsys.readouterr()
