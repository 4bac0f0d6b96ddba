"""Shared data generators and white-box model builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from protostream.config import ModelConfig
from protostream.model import PrototypeClassifier
from protostream.prototypes import ClassState, Prototype, DEFAULT_RADIUS
from protostream.stats import FeatureVector, GlobalStats, normalize


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return normalize(rng.standard_normal(dim))


def blob_stream(rng, n_per_class, dim, n_classes, spread=0.1, centers=None):
    """Labeled unit-norm samples from Gaussian blobs around unit centers."""
    if centers is None:
        centers = [random_unit(rng, dim) for _ in range(n_classes)]
    out = []
    for label in range(n_classes):
        for j in range(n_per_class):
            raw = centers[label] + spread * rng.standard_normal(dim)
            out.append(
                FeatureVector(f"c{label}-{j}", normalize(raw), label)
            )
    order = rng.permutation(len(out))
    return [out[i] for i in order], centers


def separated_centers(rng, n_classes, dim, min_cos_gap=0.3):
    """Unit centers rejected-sampled to stay mutually separated."""
    centers = []
    while len(centers) < n_classes:
        c = random_unit(rng, dim)
        if all(abs(float(c @ o)) < 1.0 - min_cos_gap for o in centers):
            centers.append(c)
    return centers


def fabricate_model(
    class_prototypes: dict[int, list],
    covariance: np.ndarray | None = None,
    count: int = 1000,
    config: ModelConfig | None = None,
    class_means: dict[int, np.ndarray] | None = None,
    sample_counts: dict[int, int] | None = None,
) -> PrototypeClassifier:
    """Build a model with hand-placed prototypes for white-box inference tests.

    Class means default to the mean of the class's prototype centroids;
    the global covariance defaults to identity, which makes the precision
    matrix exactly identity under shrinkage.
    """
    dims = {np.asarray(p).size for protos in class_prototypes.values() for p in protos}
    assert len(dims) == 1
    dim = dims.pop()
    model = PrototypeClassifier(config=config)
    stats = GlobalStats(dim)
    stats.count = count
    stats.covariance = np.eye(dim) if covariance is None else np.asarray(covariance, float)
    stats.scalar_product = 1.0
    model.global_stats = stats
    for cid, protos in class_prototypes.items():
        centroids = [np.asarray(p, dtype=np.float64) for p in protos]
        prototypes = [
            Prototype(
                centroid=c.copy(),
                support=1,
                radius=DEFAULT_RADIUS,
                members=[f"fab-{cid}-{j}"],
                density_cache=0.0,
            )
            for j, c in enumerate(centroids)
        ]
        mean = (
            np.mean(np.stack(centroids), axis=0)
            if class_means is None
            else np.asarray(class_means[cid], dtype=np.float64)
        )
        g = len(prototypes)
        model.classes[cid] = ClassState(
            class_id=cid,
            mean=mean,
            scalar_product=1.0,
            sample_count=(g if sample_counts is None else sample_counts[cid]),
            prototypes=prototypes,
            edges=np.zeros((g, g), dtype=np.int64),
        )
    stats.mean = np.mean(
        np.stack([s.mean for s in model.classes.values()]), axis=0
    )
    return model


def write_blob_dataset(
    directory,
    rng,
    n_classes=3,
    train_per_class=30,
    test_per_class=10,
    dim=8,
    spread=0.15,
    with_instances=False,
    instances_per_class=3,
    name="blobs",
):
    """Write a synthetic feature file + manifest pair; returns the manifest path."""
    from protostream.storage import write_features, write_manifest

    centers = separated_centers(rng, n_classes, dim)
    rows = []
    samples = []

    def add(label, split, index_in_split):
        raw = centers[label] + spread * rng.standard_normal(dim)
        row_index = len(rows)
        rows.append(raw)
        entry = {
            "sample_id": f"{split}-{label}-{index_in_split}",
            "label": f"class{label:02d}",
            "row_index": row_index,
            "split": split,
        }
        if with_instances:
            entry["instance_id"] = f"inst-{label}-{index_in_split % instances_per_class}"
            entry["session_id"] = f"sess-{index_in_split}"
        samples.append(entry)

    for label in range(n_classes):
        for j in range(train_per_class):
            add(label, "train", j)
        for j in range(test_per_class):
            add(label, "test", j)

    feature_path = str(directory / f"{name}.feat")
    manifest_path = str(directory / f"{name}.manifest.json")
    write_features(feature_path, np.asarray(rows, dtype=np.float32))
    write_manifest(
        manifest_path,
        {
            "schema_version": 1,
            "dataset": name,
            "features": f"{name}.feat",
            "samples": samples,
        },
    )
    return manifest_path


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
