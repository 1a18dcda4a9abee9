"""Dataset traversal and embedding extraction.

A dataset is either one directory per class (`root/heron/x.png`) or an
index file whose lines are `relative/path<TAB>class_name`, resolved
against the index file's directory. Rows are always emitted in sorted
relative-path order, so repeated runs produce byte-identical files.
Images the encoder cannot decode are skipped with a warning and listed,
one relative path per line, in a sidecar log next to the output.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from textprobe.errors import InputError, NumericError
from textprobe.io import write_embeddings, write_labels
from textprobe.types import LabelVector

from .encoders import UnreadableImageError, get_encoder

log = logging.getLogger("embed_extractor")

IMAGE_SUFFIXES = {
    ".bmp",
    ".gif",
    ".jpeg",
    ".jpg",
    ".png",
    ".ppm",
    ".tif",
    ".tiff",
    ".webp",
}


@dataclass
class ExtractResult:
    features_path: Path
    labels_path: Path
    classes_path: Path
    skipped_path: Path | None
    class_names: list
    count: int
    dim: int
    skipped: list


def read_lines(path):
    """Read non-empty, non-comment lines from a text file."""
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


def _normalize_rows(arr, what):
    arr = np.asarray(arr, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    if not np.all(np.isfinite(arr)) or np.any(norms == 0.0):
        raise NumericError(f"{what} produced a non-finite or zero-norm row")
    return arr / norms


def _read_index(index_path):
    pairs = []
    for line in read_lines(index_path):
        rel, sep, cls = line.partition("\t")
        if not sep or not rel.strip() or not cls.strip():
            raise InputError(f"{index_path}: bad index line {line!r}; expected path<TAB>class")
        pairs.append((Path(rel.strip()).as_posix(), cls.strip()))
    if not pairs:
        raise InputError(f"{index_path}: empty index file")
    return pairs


def _scan_class_dirs(root):
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise InputError(f"{root}: no class directories found")
    pairs = []
    for class_dir in class_dirs:
        for file in class_dir.rglob("*"):
            if file.is_file() and file.suffix.lower() in IMAGE_SUFFIXES:
                pairs.append((file.relative_to(root).as_posix(), class_dir.name))
    if not pairs:
        raise InputError(f"{root}: no image files found")
    return pairs


def list_images(source):
    """List (relative_path, class_index) sorted by path, plus class names.

    `source` is a class-per-directory root or an index file. Class
    indices follow the sorted class-name order.
    """
    source = Path(source)
    if source.is_dir():
        pairs = _scan_class_dirs(source)
    elif source.is_file():
        pairs = _read_index(source)
    else:
        raise InputError(f"no such dataset: {source}")
    class_names = sorted({cls for _, cls in pairs})
    index_of = {cls: i for i, cls in enumerate(class_names)}
    records = sorted((rel, index_of[cls]) for rel, cls in pairs)
    return records, class_names


def extract_images(dataset_dir, encoder, out_path, split=None, batch_size=32):
    """Encode every image under a dataset into embedding + label files.

    Writes `out_path` (unit-norm f32 rows), a sibling `.lplb` label
    file, a `.classes.txt` sidecar with one class name per line, and,
    when any image was skipped, a `.skipped.txt` sidecar listing the
    skipped relative paths.
    """
    if isinstance(encoder, str):
        encoder = get_encoder(encoder)
    batch_size = int(batch_size)
    if batch_size < 1:
        raise InputError(f"batch size must be >= 1, got {batch_size}")
    source = Path(dataset_dir)
    if split:
        source = source / split
    records, class_names = list_images(source)
    base = source.parent if source.is_file() else source

    blocks = []
    kept_labels = []
    skipped = []
    for start in range(0, len(records), batch_size):
        chunk = records[start : start + batch_size]
        samples, labels = [], []
        for rel, label in chunk:
            try:
                samples.append(encoder.load_image(base / rel))
                labels.append(label)
            except UnreadableImageError as err:
                log.warning("skipping unreadable image: %s", err)
                skipped.append(rel)
        if samples:
            blocks.append(encoder.encode_image_batch(samples))
            kept_labels.extend(labels)
    if not kept_labels:
        raise InputError(f"{source}: every image was unreadable")

    features = _normalize_rows(np.vstack(blocks), "image encoder")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    labels_path = out_path.with_suffix(".lplb")
    classes_path = out_path.with_name(out_path.stem + ".classes.txt")
    write_embeddings(out_path, features)
    write_labels(labels_path, LabelVector(np.array(kept_labels), len(class_names)))
    classes_path.write_text("".join(name + "\n" for name in class_names), encoding="utf-8")
    skipped_path = None
    if skipped:
        skipped_path = out_path.with_name(out_path.stem + ".skipped.txt")
        skipped_path.write_text("".join(rel + "\n" for rel in skipped), encoding="utf-8")
    return ExtractResult(
        features_path=out_path,
        labels_path=labels_path,
        classes_path=classes_path,
        skipped_path=skipped_path,
        class_names=class_names,
        count=len(kept_labels),
        dim=features.shape[1],
        skipped=skipped,
    )


def extract_text(class_names, templates, encoder, out_path):
    """Encode one text row per class into an embedding file.

    Each template must contain a `{}` placeholder for the class name.
    Per class, every filled prompt is embedded and normalized, the rows
    are averaged, and the mean is renormalized, so each template gets
    equal weight regardless of its raw embedding scale.
    """
    if isinstance(encoder, str):
        encoder = get_encoder(encoder)
    class_names = list(class_names)
    templates = list(templates)
    if not class_names:
        raise InputError("need at least one class name")
    if not templates:
        raise InputError("need at least one prompt template")
    bad = [t for t in templates if "{}" not in t]
    if bad:
        raise InputError(f"templates must contain a {{}} placeholder: {bad}")
    rows = []
    for name in class_names:
        prompts = [t.replace("{}", name) for t in templates]
        per_prompt = _normalize_rows(encoder.encode_text_batch(prompts), "text encoder")
        mean = per_prompt.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            raise NumericError(f"prompt embeddings for {name!r} cancel to a zero vector")
        rows.append(mean / norm)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_embeddings(out_path, np.stack(rows))
    return out_path
