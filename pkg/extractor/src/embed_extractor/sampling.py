"""Balanced few-shot task sampling from extracted embedding files."""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from textprobe.errors import DimensionError, InputError
from textprobe.io import (
    load_embeddings,
    load_labels,
    load_text_bank,
    write_embeddings,
    write_labels,
    write_manifest,
)
from textprobe.types import LabelVector


@dataclass
class SampleResult:
    manifest_path: Path
    support_rows: np.ndarray
    val_rows: np.ndarray
    shots: int
    seed: int


def _relative_to(path, directory):
    return Path(os.path.relpath(Path(path).resolve(), Path(directory).resolve())).as_posix()


def sample_task(
    features_path,
    labels_path,
    text_path,
    shots,
    seed,
    out_dir,
    test_features=None,
    test_labels=None,
):
    """Sample a balanced task and write it as a manifest directory.

    Every class contributes `shots` support rows and `shots` validation
    rows, drawn without replacement in class order, so the same seed
    always selects the same rows. Support and validation files are
    written into `out_dir`; the text bank and the optional test split
    are referenced by relative path rather than copied.
    """
    shots = int(shots)
    if shots < 1:
        raise InputError(f"shots must be >= 1, got {shots}")
    if (test_features is None) != (test_labels is None):
        raise InputError("test features and test labels must be given together")
    features = load_embeddings(features_path)
    labels = load_labels(labels_path)
    text = load_text_bank(text_path)
    if labels.n != features.rows:
        raise InputError(
            f"feature rows ({features.rows}) and label rows ({labels.n}) disagree"
        )
    if text.dim != features.dim:
        raise DimensionError(
            f"text dim {text.dim} does not match feature dim {features.dim}"
        )
    if text.classes != labels.num_classes:
        raise DimensionError(
            f"text bank has {text.classes} rows for {labels.num_classes} classes"
        )
    if test_features is not None:
        test_feat = load_embeddings(test_features)
        test_lab = load_labels(test_labels)
        if test_lab.n != test_feat.rows:
            raise InputError(
                f"test feature rows ({test_feat.rows}) and label rows ({test_lab.n}) disagree"
            )
        if test_feat.dim != features.dim:
            raise DimensionError(
                f"test dim {test_feat.dim} does not match feature dim {features.dim}"
            )

    rng = np.random.default_rng(seed)
    support_rows, val_rows = [], []
    for k in range(labels.num_classes):
        rows = np.flatnonzero(labels.labels == k)
        if rows.size < 2 * shots:
            raise InputError(
                f"class {k} has {rows.size} rows; need {2 * shots} for {shots}-shot support and val"
            )
        pick = rng.permutation(rows)[: 2 * shots]
        support_rows.append(pick[:shots])
        val_rows.append(pick[shots:])
    support_rows = np.concatenate(support_rows)
    val_rows = np.concatenate(val_rows)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    k = labels.num_classes
    write_embeddings(out_dir / "support.lpeb", features.data[support_rows])
    write_labels(out_dir / "support.lplb", LabelVector(labels.labels[support_rows], k))
    write_embeddings(out_dir / "val.lpeb", features.data[val_rows])
    write_labels(out_dir / "val.lplb", LabelVector(labels.labels[val_rows], k))

    entries = {
        "text": _relative_to(text_path, out_dir),
        "support_features": "support.lpeb",
        "support_labels": "support.lplb",
        "val_features": "val.lpeb",
        "val_labels": "val.lplb",
        "shots": shots,
        "seed": seed,
    }
    if test_features is not None:
        entries["test_features"] = _relative_to(test_features, out_dir)
        entries["test_labels"] = _relative_to(test_labels, out_dir)
    manifest_path = out_dir / "task.ini"
    write_manifest(manifest_path, entries)
    return SampleResult(
        manifest_path=manifest_path,
        support_rows=support_rows,
        val_rows=val_rows,
        shots=shots,
        seed=int(seed),
    )
