"""Command-line surface for batch experimentation.

Exit codes: 0 ok, 1 usage, 2 model/data error, 3 internal invariant
violation. Failures emit one machine-parseable JSON object on stderr.
All randomness flows from --seed; identical invocations produce identical
accuracy fields (wall-clock runtimes naturally vary).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from .errors import DomainError, InternalError, ProtostreamError
from .explain import (
    explain_prediction,
    explanation_to_document,
    export_topology,
    extract_rules,
    rules_to_document,
    to_json,
)
from .config import ModelConfig
from .harness import (
    ExperimentConfig,
    Ordering,
    evaluate,
    make_ordering,
    netscore,
    reports_to_csv,
    reports_to_jsonl,
    run_experiment_files,
    build_learner,
    train_stream,
)
from .model import PrototypeClassifier
from .storage import load_dataset, load_model, save_model

ORDERING_CLI = {
    "iid": "iid",
    "class-iid": "class_iid",
    "instance": "instance",
    "low-shot": "low_shot_instance",
    "k-shot": "k_shot_class_iid",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="protostream", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add_dataset_args(p):
        p.add_argument("--manifest", required=True, help="manifest JSON path")
        p.add_argument("--features", default=None, help="override the manifest's feature file")

    def add_ordering_args(p):
        p.add_argument("--ordering", required=True, choices=sorted(ORDERING_CLI))
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--k", type=int, default=None, help="shots per class for k-shot ordering")

    train = sub.add_parser("train", help="single-pass training, writes a snapshot")
    add_dataset_args(train)
    add_ordering_args(train)
    train.add_argument("--out", required=True, help="snapshot output path")
    train.add_argument("--covariance-init", choices=("paper", "zero"), default="paper")
    train.add_argument("--epsilon", type=float, default=1e-4)
    train.add_argument("--precision-refresh", type=float, default=100)
    train.add_argument("--prinf-pool", choices=("max", "sum"), default="max")

    ev = sub.add_parser("eval", help="top-1 accuracy of a snapshot on a split")
    ev.add_argument("--model", required=True)
    add_dataset_args(ev)
    ev.add_argument("--split", choices=("train", "test"), default="test")
    ev.add_argument("--inference", choices=("prinf", "mcinf", "fuse"), default="fuse")

    ex = sub.add_parser("explain", help="explanation JSON for one sample id")
    ex.add_argument("--model", required=True)
    ex.add_argument("--query-id", required=True)
    add_dataset_args(ex)

    ru = sub.add_parser("rules", help="rule list JSON for a snapshot")
    ru.add_argument("--model", required=True)

    topo = sub.add_parser("topology", help="prototype topology JSON for a snapshot")
    topo.add_argument("--model", required=True)

    bench = sub.add_parser("bench", help="full experiment with permutations")
    bench.add_argument("--config", required=True, help="experiment config JSON")
    bench.add_argument("--manifest", default=None)
    bench.add_argument("--features", default=None)
    bench.add_argument("--learner", default=None)
    bench.add_argument("--inference", default=None, choices=("prinf", "mcinf", "fuse"))
    bench.add_argument("--ordering", default=None, choices=sorted(ORDERING_CLI))
    bench.add_argument("--permutations", type=int, default=None)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--k", type=int, default=None)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out-prefix", default=None, help="writes <prefix>.jsonl and <prefix>.csv")

    base = sub.add_parser("baseline", help="one-shot train+eval for a baseline learner")
    base.add_argument("--learner", required=True, choices=("ncm", "slda", "perceptron", "nb"))
    add_dataset_args(base)
    add_ordering_args(base)
    base.add_argument("--split", choices=("train", "test"), default="test")

    return parser


def _print(document: dict) -> None:
    sys.stdout.write(json.dumps(document, sort_keys=True) + "\n")


def _posterior_stats(predict_fn, records, rows) -> dict:
    max_probs = []
    entropies = []
    for r in records:
        p = predict_fn(np.asarray(rows[r.row_index], dtype=np.float64)).probabilities
        max_probs.append(float(np.max(p)))
        nonzero = p[p > 0]
        entropies.append(float(-(nonzero * np.log(nonzero)).sum()))
    return {
        "mean_max_posterior": round(float(np.mean(max_probs)), 6),
        "mean_entropy": round(float(np.mean(entropies)), 6),
    }


def _cmd_train(args) -> int:
    manifest, rows = load_dataset(args.manifest, args.features)
    ordering = Ordering(ORDERING_CLI[args.ordering], args.seed, args.k)
    records = make_ordering(manifest, ordering)
    config = ModelConfig(
        covariance_init=args.covariance_init,
        epsilon=args.epsilon,
        precision_refresh=(math.inf if args.precision_refresh <= 0 else args.precision_refresh),
        prinf_pool=args.prinf_pool,
    )
    model = PrototypeClassifier(config=config)
    model.label_names = manifest.label_name_map()
    started = time.perf_counter()
    train_stream(model, records, rows)
    runtime = time.perf_counter() - started
    save_model(args.out, model)
    _print(
        {
            "out": args.out,
            "classes": len(model.classes),
            "prototypes": model.prototype_total(),
            "samples": model.sample_count,
            "param_count": model.param_count(),
            "runtime_seconds": round(runtime, 6),
        }
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    manifest, rows = load_dataset(args.manifest, args.features)
    records = manifest.test_samples() if args.split == "test" else manifest.train_samples()
    predict_fn = lambda v: model.predict(v, inference=args.inference)
    accuracy = evaluate(predict_fn, records, rows)
    doc = {
        "inference": args.inference,
        "split": args.split,
        "accuracy": f"{accuracy:.4f}",
        "accuracy_value": accuracy,
        "total": len(records),
    }
    doc.update(_posterior_stats(predict_fn, records, rows))
    _print(doc)
    return 0


def _cmd_explain(args) -> int:
    model = load_model(args.model)
    manifest, rows = load_dataset(args.manifest, args.features)
    match = [s for s in manifest.samples if s.sample_id == args.query_id]
    if not match:
        raise DomainError(f"query id {args.query_id!r} not present in manifest")
    record = match[0]
    explanation = explain_prediction(
        model, np.asarray(rows[record.row_index], dtype=np.float64), query_id=record.sample_id
    )
    sys.stdout.write(to_json(explanation_to_document(explanation)))
    return 0


def _cmd_rules(args) -> int:
    model = load_model(args.model)
    sys.stdout.write(to_json(rules_to_document(extract_rules(model))))
    return 0


def _cmd_topology(args) -> int:
    model = load_model(args.model)
    sys.stdout.write(to_json(export_topology(model)))
    return 0


def _cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        file_config = json.load(handle)
    manifest_path = args.manifest or file_config.get("manifest")
    if not manifest_path:
        raise _UsageError("bench needs a manifest (config file or --manifest)")
    features = args.features or file_config.get("features")
    out_prefix = args.out_prefix or file_config.get("out_prefix")

    overrides = {
        "learner": args.learner,
        "inference": args.inference,
        "ordering_kind": None if args.ordering is None else ORDERING_CLI[args.ordering],
        "permutations": args.permutations,
        "base_seed": args.seed,
        "k_shots": args.k,
    }
    merged = {k: v for k, v in file_config.items() if k not in ("manifest", "features", "out_prefix")}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    config = ExperimentConfig.from_dict(merged)

    runs, averaged = run_experiment_files(manifest_path, config, features, jobs=args.jobs)
    jsonl = reports_to_jsonl(runs, averaged, config)
    csv = reports_to_csv(runs, averaged)
    if out_prefix:
        with open(out_prefix + ".jsonl", "w", encoding="utf-8") as handle:
            handle.write(jsonl)
        with open(out_prefix + ".csv", "w", encoding="utf-8") as handle:
            handle.write(csv)
    summary = averaged.to_dict()
    summary["config"] = config.to_dict()
    _print(summary)
    return 0


def _cmd_baseline(args) -> int:
    manifest, rows = load_dataset(args.manifest, args.features)
    config = ExperimentConfig(
        learner=args.learner,
        ordering_kind=ORDERING_CLI[args.ordering],
        k_shots=args.k,
        base_seed=args.seed,
        split=args.split,
    )
    ordering = Ordering(config.ordering_kind, args.seed, args.k)
    records = make_ordering(manifest, ordering)
    test_records = manifest.test_samples() if args.split == "test" else manifest.train_samples()
    learner, predict_fn, name = build_learner(config)
    started = time.perf_counter()
    train_stream(learner, records, rows)
    accuracy = evaluate(predict_fn, test_records, rows)
    runtime = time.perf_counter() - started
    params = learner.param_count()
    _print(
        {
            "learner": name,
            "ordering": config.ordering_kind,
            "seed": args.seed,
            "accuracy": f"{accuracy:.4f}",
            "accuracy_value": accuracy,
            "param_count": params,
            "runtime_seconds": round(runtime, 6),
            "netscore": None if accuracy == 0 else round(netscore(accuracy, params, runtime), 6),
        }
    )
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "explain": _cmd_explain,
    "rules": _cmd_rules,
    "topology": _cmd_topology,
    "bench": _cmd_bench,
    "baseline": _cmd_baseline,
}


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        _emit_error("Usage", str(exc))
        return 1
    except SystemExit as exc:  # argparse --help path
        return int(exc.code or 0)
    except InternalError as exc:
        _emit_error("InternalError", str(exc))
        return 3
    except ProtostreamError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except AssertionError as exc:
        _emit_error("InternalError", str(exc))
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
