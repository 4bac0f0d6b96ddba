"""Data orderings, the combined evaluation score, and experiment runs.

Orderings are bijections on the training split except where the low-shot and
k-shot variants restrict cardinality by design; all randomness flows from the
ordering seed. Evaluation never feeds test labels to a learner.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import (
    NearestClassMean,
    OnlinePerceptron,
    StreamingLDA,
    StreamingLearner,
    StreamingNaiveBayes,
)
from .config import ModelConfig
from .errors import DomainError, ManifestMissingField
from .model import PrototypeClassifier
from .stats import FeatureVector
from .storage import Manifest, load_dataset

ORDERING_KINDS = ("iid", "class_iid", "instance", "low_shot_instance", "k_shot_class_iid")

BASELINE_NAMES = ("ncm", "slda", "perceptron", "nb")
INFERENCE_MODES = ("prinf", "mcinf", "fuse")


@dataclass(frozen=True)
class Ordering:
    """A presentation order: (kind, seed, manifest) fixes the permutation."""

    kind: str
    seed: int
    k_shots: int | None = None


def _group_by_class(records) -> dict[int, list]:
    by_class: dict[int, list] = {}
    for r in records:
        by_class.setdefault(r.label_id, []).append(r)
    return by_class


def _group_by_instance(records, kind: str) -> dict[str, list]:
    groups: dict[str, list] = {}
    for r in records:
        if r.instance_id is None:
            raise ManifestMissingField(
                f"ordering {kind!r} needs instance_id on every training sample; "
                f"sample {r.sample_id!r} has none"
            )
        groups.setdefault(r.instance_id, []).append(r)
    return groups


def make_ordering(manifest: Manifest, ordering: Ordering) -> list:
    """Arrange the manifest's training split per the requested ordering."""
    if ordering.kind not in ORDERING_KINDS:
        raise DomainError(f"unknown ordering kind {ordering.kind!r}")
    train = manifest.train_samples()
    rng = np.random.default_rng(ordering.seed)

    if ordering.kind == "iid":
        return [train[i] for i in rng.permutation(len(train))]

    if ordering.kind == "class_iid":
        by_class = _group_by_class(train)
        class_ids = sorted(by_class)
        out = []
        for ci in rng.permutation(len(class_ids)):
            block = by_class[class_ids[int(ci)]]
            out.extend(block[int(i)] for i in rng.permutation(len(block)))
        return out

    if ordering.kind == "instance":
        groups = _group_by_instance(train, ordering.kind)
        keys = list(groups)
        out = []
        for gi in rng.permutation(len(keys)):
            out.extend(groups[keys[int(gi)]])  # within-instance order preserved
        return out

    if ordering.kind == "low_shot_instance":
        groups = _group_by_instance(train, ordering.kind)
        # one instance per category, chosen by seed
        instances_by_class: dict[int, list] = {}
        for key, block in groups.items():
            instances_by_class.setdefault(block[0].label_id, []).append(key)
        chosen = []
        for cid in sorted(instances_by_class):
            options = instances_by_class[cid]
            chosen.append(options[int(rng.integers(len(options)))])
        out = []
        for gi in rng.permutation(len(chosen)):
            out.extend(groups[chosen[int(gi)]])
        return out

    # k_shot_class_iid
    k = ordering.k_shots
    if k is None or k < 1:
        raise DomainError("k_shot_class_iid needs k_shots >= 1")
    by_class = _group_by_class(train)
    class_ids = sorted(by_class)
    out = []
    for ci in rng.permutation(len(class_ids)):
        block = by_class[class_ids[int(ci)]]
        if len(block) < k:
            raise DomainError(
                f"class {class_ids[int(ci)]} has {len(block)} training samples, "
                f"k-shot ordering needs {k}"
            )
        picks = rng.permutation(len(block))[:k]
        out.extend(block[int(i)] for i in picks)
    return out


def netscore(
    accuracy: float,
    params: float,
    runtime_s: float,
    s: float = 20.0,
    alpha: float = 2.0,
    beta: float = 0.25,
    gamma: float = 0.25,
    log_base: float = 10.0,
) -> float:
    """Combined score s*log(a^alpha / (p^beta * c^gamma)), base-10 by default.

    Strictly increasing in accuracy, strictly decreasing in parameter count
    and runtime. Zero accuracy yields -inf as a sentinel; other nonpositive
    inputs are domain errors.
    """
    if not 0.0 <= accuracy <= 1.0:
        raise DomainError(f"accuracy {accuracy} outside [0, 1]")
    if params <= 0:
        raise DomainError(f"params must be positive, got {params}")
    if runtime_s <= 0:
        raise DomainError(f"runtime must be positive, got {runtime_s}")
    if accuracy == 0.0:
        return -math.inf
    log = math.log(log_base)
    return s * (
        alpha * math.log(accuracy) - beta * math.log(params) - gamma * math.log(runtime_s)
    ) / log


# ------------------------------------------------------------------- running

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproducible run needs; JSON-safe via asdict."""

    learner: str = "proto"
    inference: str = "fuse"
    ordering_kind: str = "iid"
    k_shots: int | None = None
    permutations: int = 1
    base_seed: int = 0
    seeds: tuple | None = None
    split: str = "test"
    covariance_init: str = "paper"
    epsilon: float = 1e-4
    precision_refresh: float = 100
    prinf_pool: str = "max"

    def effective_seeds(self) -> list:
        if self.seeds is not None:
            return [int(s) for s in self.seeds]
        return [self.base_seed + i for i in range(self.permutations)]

    def to_dict(self) -> dict:
        data = asdict(self)
        if math.isinf(data["precision_refresh"]):
            data["precision_refresh"] = None
        if data["seeds"] is not None:
            data["seeds"] = list(data["seeds"])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        if kwargs.get("precision_refresh") is None and "precision_refresh" in kwargs:
            kwargs["precision_refresh"] = math.inf
        if kwargs.get("seeds") is not None:
            kwargs["seeds"] = tuple(kwargs["seeds"])
        return cls(**kwargs)


@dataclass(frozen=True)
class RunReport:
    """One permutation's outcome; netscore is recomputable from the others."""

    learner: str
    ordering: str
    seed: int
    top1_accuracy: float
    param_count: int
    runtime_seconds: float
    netscore: float
    n_train: int
    n_test: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "run"
        if math.isinf(out["netscore"]):
            out["netscore"] = None
        return out


@dataclass(frozen=True)
class AveragedReport:
    """Arithmetic means across permutations; netscore recomputed from means."""

    learner: str
    ordering: str
    seeds: tuple
    top1_accuracy: float
    param_count: float
    runtime_seconds: float
    netscore: float
    n_runs: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "average"
        out["seeds"] = list(out["seeds"])
        if math.isinf(out["netscore"]):
            out["netscore"] = None
        return out


def build_learner(config: ExperimentConfig):
    """Instantiate a learner plus its prediction callable and display name."""
    if config.learner == "proto":
        model_config = ModelConfig(
            covariance_init=config.covariance_init,
            epsilon=config.epsilon,
            precision_refresh=config.precision_refresh,
            prinf_pool=config.prinf_pool,
        )
        model = PrototypeClassifier(config=model_config)
        mode = config.inference
        if mode not in INFERENCE_MODES:
            raise DomainError(f"unknown inference mode {mode!r}")
        return model, (lambda v: model.predict(v, inference=mode)), f"proto:{mode}"
    makers = {
        "ncm": NearestClassMean,
        "slda": StreamingLDA,
        "perceptron": OnlinePerceptron,
        "nb": StreamingNaiveBayes,
    }
    if config.learner not in makers:
        raise DomainError(f"unknown learner {config.learner!r}")
    learner = makers[config.learner]()
    return learner, learner.predict, config.learner


def train_stream(learner: StreamingLearner, records, rows: np.ndarray):
    for r in records:
        learner.train_sample(
            FeatureVector(
                sample_id=r.sample_id,
                values=np.asarray(rows[r.row_index], dtype=np.float64),
                label=r.label_id,
            )
        )
    return learner


def evaluate(predict_fn, records, rows: np.ndarray) -> float:
    if not records:
        raise DomainError("evaluation split is empty")
    correct = 0
    for r in records:
        posterior = predict_fn(np.asarray(rows[r.row_index], dtype=np.float64))
        if posterior.predicted == r.label_id:
            correct += 1
    return correct / len(records)


def run_permutation(manifest: Manifest, rows: np.ndarray, config: ExperimentConfig, seed: int) -> RunReport:
    ordering = Ordering(config.ordering_kind, seed, config.k_shots)
    train_records = make_ordering(manifest, ordering)
    test_records = manifest.test_samples() if config.split == "test" else manifest.train_samples()
    learner, predict_fn, name = build_learner(config)
    started = time.perf_counter()
    train_stream(learner, train_records, rows)
    accuracy = evaluate(predict_fn, test_records, rows)
    runtime = time.perf_counter() - started
    params = learner.param_count()
    extra: dict = {"n_prototypes": learner.prototype_total()} if isinstance(learner, PrototypeClassifier) else {}
    if config.ordering_kind == "low_shot_instance":
        seen = []
        for r in train_records:
            if r.instance_id not in seen:
                seen.append(r.instance_id)
        extra["instances"] = seen
    return RunReport(
        learner=name,
        ordering=config.ordering_kind,
        seed=seed,
        top1_accuracy=accuracy,
        param_count=params,
        runtime_seconds=runtime,
        netscore=netscore(accuracy, params, runtime),
        n_train=len(train_records),
        n_test=len(test_records),
        extra=extra,
    )


def average_reports(runs: list) -> AveragedReport:
    if not runs:
        raise DomainError("cannot average zero runs")
    acc = sum(r.top1_accuracy for r in runs) / len(runs)
    params = sum(r.param_count for r in runs) / len(runs)
    runtime = sum(r.runtime_seconds for r in runs) / len(runs)
    return AveragedReport(
        learner=runs[0].learner,
        ordering=runs[0].ordering,
        seeds=tuple(r.seed for r in runs),
        top1_accuracy=acc,
        param_count=params,
        runtime_seconds=runtime,
        netscore=netscore(acc, params, runtime) if acc > 0 else -math.inf,
        n_runs=len(runs),
    )


def run_experiment(manifest: Manifest, rows: np.ndarray, config: ExperimentConfig):
    """Run every permutation sequentially; partial results never average."""
    runs = [run_permutation(manifest, rows, config, seed) for seed in config.effective_seeds()]
    return runs, average_reports(runs)


def _permutation_worker(args) -> dict:
    manifest_path, features_override, config_dict, seed = args
    manifest, rows = load_dataset(manifest_path, features_override)
    report = run_permutation(manifest, rows, ExperimentConfig.from_dict(config_dict), seed)
    return report.to_dict()


def run_experiment_files(
    manifest_path: str,
    config: ExperimentConfig,
    features_override: str | None = None,
    jobs: int = 1,
):
    """File-based experiment entry point; permutations may run in parallel."""
    seeds = config.effective_seeds()
    if jobs <= 1 or len(seeds) <= 1:
        manifest, rows = load_dataset(manifest_path, features_override)
        return run_experiment(manifest, rows, config)
    tasks = [(manifest_path, features_override, config.to_dict(), seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        dicts = list(pool.map(_permutation_worker, tasks))
    runs = [
        RunReport(
            learner=d["learner"],
            ordering=d["ordering"],
            seed=d["seed"],
            top1_accuracy=d["top1_accuracy"],
            param_count=d["param_count"],
            runtime_seconds=d["runtime_seconds"],
            netscore=(-math.inf if d["netscore"] is None else d["netscore"]),
            n_train=d["n_train"],
            n_test=d["n_test"],
            extra=d.get("extra", {}),
        )
        for d in dicts
    ]
    return runs, average_reports(runs)


# ------------------------------------------------------------------- reports

def reports_to_jsonl(runs: list, averaged: AveragedReport, config: ExperimentConfig) -> str:
    lines = []
    for r in runs:
        row = r.to_dict()
        row["config"] = config.to_dict()
        lines.append(json.dumps(row, sort_keys=True))
    row = averaged.to_dict()
    row["config"] = config.to_dict()
    lines.append(json.dumps(row, sort_keys=True))
    return "\n".join(lines) + "\n"


CSV_COLUMNS = (
    "kind", "learner", "ordering", "seed", "top1_accuracy",
    "param_count", "runtime_seconds", "netscore",
)


def reports_to_csv(runs: list, averaged: AveragedReport) -> str:
    def fmt(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.6f}" if math.isfinite(value) else str(value)
        return str(value)

    lines = [",".join(CSV_COLUMNS)]
    for r in runs:
        d = r.to_dict()
        lines.append(",".join(fmt(d.get(c)) for c in CSV_COLUMNS))
    d = averaged.to_dict()
    d["seed"] = ";".join(str(s) for s in averaged.seeds)
    lines.append(",".join(fmt(d.get(c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
