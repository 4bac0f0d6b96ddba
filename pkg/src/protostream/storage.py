"""File formats: binary feature files, JSON manifests, model snapshots.

All formats are little-endian and documented bit-exactly in docs/formats.md.
Feature payloads are 32-bit floats on disk; computation upstream happens in
float64. Writers are atomic (temp file + rename) so readers never observe a
partial file.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DanglingRowIndex,
    DimensionMismatch,
    TruncatedPayload,
    VersionUnsupported,
)
from .model import PrototypeClassifier

FEATURE_MAGIC = b"EXLLFEAT"
FEATURE_VERSION = 1
DTYPE_F32LE = 1
_HEADER = struct.Struct("<8sHIQH")  # magic, version, dimension, count, dtype tag

MANIFEST_SCHEMA_VERSION = 1
SNAPSHOT_SCHEMA_VERSION = 1


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ----------------------------------------------------------------- features

def write_features(path: str, rows: np.ndarray) -> None:
    """Write a (count, dim) array as float32 little-endian rows."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise DimensionMismatch(f"feature array must be 2-D, got shape {rows.shape}")
    count, dim = rows.shape
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, dim, count, DTYPE_F32LE)
    _atomic_write(path, header + rows.tobytes())


def read_features(path: str) -> np.ndarray:
    """Read a feature file back as a (count, dim) float32 array."""
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < _HEADER.size:
        raise TruncatedPayload(
            f"{path}: file holds {len(raw)} bytes, header alone needs {_HEADER.size}"
        )
    magic, version, dim, count, dtype_tag = _HEADER.unpack_from(raw, 0)
    if magic != FEATURE_MAGIC:
        raise BadMagic(f"{path}: expected magic {FEATURE_MAGIC!r}, found {magic!r}")
    if version != FEATURE_VERSION:
        raise VersionUnsupported(f"{path}: feature-file version {version} unsupported")
    if dtype_tag != DTYPE_F32LE:
        raise VersionUnsupported(f"{path}: dtype tag {dtype_tag} unsupported")
    expected = count * dim * 4
    actual = len(raw) - _HEADER.size
    if actual != expected:
        raise TruncatedPayload(
            f"{path}: payload holds {actual} bytes at offset {_HEADER.size}, "
            f"header promises {expected}"
        )
    rows = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=_HEADER.size)
    return rows.reshape(count, dim)


# ----------------------------------------------------------------- manifest

@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    label: str
    label_id: int
    row_index: int
    split: str
    instance_id: str | None = None
    session_id: str | None = None


@dataclass
class Manifest:
    """Dataset description: feature file paths plus per-sample records.

    Original label strings are preserved; label_id remaps them onto a
    contiguous 0..C-1 range by sorted label order.
    """

    dataset: str
    feature_paths: list
    samples: list
    label_names: list = field(default_factory=list)

    def train_samples(self) -> list:
        return [s for s in self.samples if s.split == "train"]

    def test_samples(self) -> list:
        return [s for s in self.samples if s.split == "test"]

    def label_name_map(self) -> dict[int, str]:
        return {i: name for i, name in enumerate(self.label_names)}


def parse_manifest(document: dict, base_dir: str = ".") -> Manifest:
    version = document.get("schema_version", 1)
    if version != MANIFEST_SCHEMA_VERSION:
        raise VersionUnsupported(f"manifest schema_version {version} unsupported")
    features = document["features"]
    if isinstance(features, str):
        features = [features]
    feature_paths = [
        p if os.path.isabs(p) else os.path.join(base_dir, p) for p in features
    ]
    labels = sorted({str(s["label"]) for s in document["samples"]})
    label_ids = {name: i for i, name in enumerate(labels)}
    samples = []
    seen_rows = set()
    for entry in document["samples"]:
        row = int(entry["row_index"])
        if row in seen_rows:
            raise DanglingRowIndex(f"duplicate row_index {row} in manifest")
        seen_rows.add(row)
        split = entry.get("split", "train")
        if split not in ("train", "test"):
            raise VersionUnsupported(f"unknown split {split!r} in manifest")
        samples.append(
            SampleRecord(
                sample_id=str(entry["sample_id"]),
                label=str(entry["label"]),
                label_id=label_ids[str(entry["label"])],
                row_index=row,
                split=split,
                instance_id=(None if entry.get("instance_id") is None else str(entry["instance_id"])),
                session_id=(None if entry.get("session_id") is None else str(entry["session_id"])),
            )
        )
    return Manifest(
        dataset=str(document.get("dataset", "unnamed")),
        feature_paths=feature_paths,
        samples=samples,
        label_names=labels,
    )


def read_manifest(path: str) -> Manifest:
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    return parse_manifest(document, base_dir=os.path.dirname(os.path.abspath(path)))


def write_manifest(path: str, document: dict) -> None:
    payload = json.dumps(document, sort_keys=True, indent=2) + "\n"
    _atomic_write(path, payload.encode("utf-8"))


def load_dataset(manifest_path: str, features_override: str | None = None):
    """Read a manifest plus its feature rows; validates every row_index.

    Multiple feature files concatenate in declared order. Returns
    (manifest, rows) with rows float32 of shape (total_count, dim).
    """
    manifest = read_manifest(manifest_path)
    paths = [features_override] if features_override else manifest.feature_paths
    blocks = [read_features(p) for p in paths]
    dims = {b.shape[1] for b in blocks}
    if len(dims) > 1:
        raise DimensionMismatch(f"feature files disagree on dimension: {sorted(dims)}")
    rows = np.concatenate(blocks, axis=0) if len(blocks) > 1 else blocks[0]
    for record in manifest.samples:
        if not (0 <= record.row_index < rows.shape[0]):
            raise DanglingRowIndex(
                f"sample {record.sample_id!r} points at row {record.row_index}, "
                f"features hold {rows.shape[0]} rows"
            )
    return manifest, rows


# ----------------------------------------------------------------- snapshots

def snapshot_bytes(model: PrototypeClassifier) -> bytes:
    """Canonical snapshot encoding; identical state yields identical bytes."""
    state = model.to_state()
    return (json.dumps(state, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def save_model(path: str, model: PrototypeClassifier) -> None:
    _atomic_write(path, snapshot_bytes(model))


def load_model(path: str) -> PrototypeClassifier:
    with open(path, "r", encoding="utf-8") as handle:
        state = json.load(handle)
    if state.get("kind") != "model-snapshot":
        raise BadMagic(f"{path}: not a model snapshot")
    if state.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
        raise VersionUnsupported(
            f"{path}: snapshot schema_version {state.get('schema_version')} unsupported"
        )
    return PrototypeClassifier.from_state(state)
