"""Binary embedding/label/params files and the task manifest format.

All binary files are little-endian with a 4-byte magic and a u32
version. Payloads are single precision on disk (embedding caches are
conventionally f32); everything is widened to double on load.

Embedding file: "LPEB" | version u32 | n u32 | d u32 | n*d f32 row-major
Label file:     "LPLB" | version u32 | n u32 | k u32 | n u32 indices
Params file:    "LPPP" | version u32 | k u32 | d u32 | k*d f32 w | k f32 alpha

The task manifest is an INI document; paths are resolved relative to
the manifest's directory.
"""

import configparser
import struct
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, InputError
from .optimizer import TaskSplit
from .types import (
    FeatureMatrix,
    LabelVector,
    ProbeParams,
    SupportSet,
    TextBank,
)

MAGIC_EMBED = b"LPEB"
MAGIC_LABEL = b"LPLB"
MAGIC_PARAMS = b"LPPP"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIII")


def _read_header(raw, path, expected_magic):
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, a, b = _HEADER.unpack_from(raw)
    if magic != expected_magic:
        raise FormatError(
            f"{path}: bad magic {magic!r}, expected {expected_magic!r}"
        )
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    return a, b


def _check_payload(raw, path, expected_bytes):
    body = raw[_HEADER.size:]
    if len(body) != expected_bytes:
        raise FormatError(
            f"{path}: payload is {len(body)} bytes, expected {expected_bytes}"
        )
    return body


def write_embeddings(path, data):
    """Write unit-norm rows as an f32 embedding file."""
    if isinstance(data, (FeatureMatrix, TextBank)):
        data = data.data
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise InputError("embeddings must be 2-d")
    # Validate what actually lands on disk.
    FeatureMatrix(arr.astype(np.float64))
    n, d = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC_EMBED, FORMAT_VERSION, n, d))
        fh.write(arr.tobytes())


def _load_embedding_array(path):
    raw = Path(path).read_bytes()
    n, d = _read_header(raw, path, MAGIC_EMBED)
    if n < 1 or d < 1:
        raise FormatError(f"{path}: empty embedding matrix ({n} x {d})")
    body = _check_payload(raw, path, n * d * 4)
    return np.frombuffer(body, dtype="<f4").reshape(n, d).astype(np.float64)


def load_embeddings(path):
    """Read an embedding file as a FeatureMatrix."""
    return FeatureMatrix(_load_embedding_array(path))


def load_text_bank(path):
    """Read an embedding file as a TextBank."""
    return TextBank(_load_embedding_array(path))


def write_labels(path, labels):
    """Write a LabelVector as a u32 label file."""
    if not isinstance(labels, LabelVector):
        raise InputError("labels must be a LabelVector")
    arr = labels.labels.astype("<u4")
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC_LABEL, FORMAT_VERSION, labels.n, labels.num_classes)
        )
        fh.write(arr.tobytes())


def load_labels(path):
    """Read a label file; indices must lie inside the declared range."""
    raw = Path(path).read_bytes()
    n, k = _read_header(raw, path, MAGIC_LABEL)
    if n < 1 or k < 1:
        raise FormatError(f"{path}: empty label file (n={n}, k={k})")
    body = _check_payload(raw, path, n * 4)
    idx = np.frombuffer(body, dtype="<u4").astype(np.int64)
    if idx.max() >= k:
        raise FormatError(
            f"{path}: label {int(idx.max())} out of range for k={k}"
        )
    return LabelVector(idx, k)


def write_params(path, params):
    """Write ProbeParams as an f32 params file."""
    if not isinstance(params, ProbeParams):
        raise InputError("params must be ProbeParams")
    k, d = params.num_classes, params.dim
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC_PARAMS, FORMAT_VERSION, k, d))
        fh.write(np.ascontiguousarray(params.w, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(params.alpha, dtype="<f4").tobytes())


def load_params(path):
    """Read a params file back into ProbeParams."""
    raw = Path(path).read_bytes()
    k, d = _read_header(raw, path, MAGIC_PARAMS)
    if k < 1 or d < 1:
        raise FormatError(f"{path}: empty params file (k={k}, d={d})")
    body = _check_payload(raw, path, (k * d + k) * 4)
    w = np.frombuffer(body[: k * d * 4], dtype="<f4").reshape(k, d)
    alpha = np.frombuffer(body[k * d * 4:], dtype="<f4")
    return ProbeParams(w.astype(np.float64), alpha.astype(np.float64))


MANIFEST_SECTION = "task"
_REQUIRED_KEYS = (
    "text",
    "support_features",
    "support_labels",
    "val_features",
    "val_labels",
)
_OPTIONAL_FILE_KEYS = ("test_features", "test_labels")


def write_manifest(path, entries):
    """Write a task manifest; file values should be relative paths."""
    missing = [key for key in _REQUIRED_KEYS if key not in entries]
    if missing:
        raise InputError(f"manifest entries missing keys: {missing}")
    parser = configparser.ConfigParser()
    parser[MANIFEST_SECTION] = {k: str(v) for k, v in entries.items()}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def load_manifest(path):
    """Load a manifest and every file it names, fully cross-validated.

    Returns (TaskSplit, TextBank, meta) where meta carries shots, seed
    and the resolved paths. Any dimension disagreement between the
    referenced files raises DimensionError before optimization work
    starts.
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FormatError(f"{path}: manifest not readable")
    if MANIFEST_SECTION not in parser:
        raise FormatError(f"{path}: missing [{MANIFEST_SECTION}] section")
    section = parser[MANIFEST_SECTION]
    missing = [key for key in _REQUIRED_KEYS if key not in section]
    if missing:
        raise FormatError(f"{path}: manifest missing keys: {missing}")

    base = path.parent

    def resolve(key):
        target = base / section[key]
        if not target.exists():
            raise FormatError(f"{path}: referenced file does not exist: {target}")
        return target

    text = load_text_bank(resolve("text"))
    support_features = load_embeddings(resolve("support_features"))
    support_labels = load_labels(resolve("support_labels"))
    val_features = load_embeddings(resolve("val_features"))
    val_labels = load_labels(resolve("val_labels"))

    has_test = all(key in section for key in _OPTIONAL_FILE_KEYS)
    if any(key in section for key in _OPTIONAL_FILE_KEYS) and not has_test:
        raise FormatError(
            f"{path}: test_features and test_labels must come together"
        )
    test_features = load_embeddings(resolve("test_features")) if has_test else None
    test_labels = load_labels(resolve("test_labels")) if has_test else None

    if text.dim != support_features.dim:
        raise DimensionError(
            f"{path}: text dim {text.dim} != support dim {support_features.dim}"
        )
    if support_labels.num_classes != text.classes:
        raise DimensionError(
            f"{path}: labels name {support_labels.num_classes} classes, text "
            f"bank has {text.classes}"
        )
    support = SupportSet(support_features, support_labels)
    task = TaskSplit(
        support=support,
        val_features=val_features,
        val_labels=val_labels,
        test_features=test_features,
        test_labels=test_labels,
    )
    meta = {
        "shots": section.getint("shots", fallback=support.shots),
        "seed": section.getint("seed", fallback=None),
        "path": str(path),
    }
    return task, text, meta
