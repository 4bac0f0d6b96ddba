"""Streaming prototype classifier with explainable two-level inference."""

from .config import ModelConfig
from .errors import (
    BadMagic,
    DanglingRowIndex,
    DimensionMismatch,
    DomainError,
    EmptyModel,
    InternalError,
    ManifestMissingField,
    NotPositiveDefinite,
    ProtostreamError,
    SingleClass,
    TruncatedPayload,
    UnknownClass,
    VersionUnsupported,
    ZeroVector,
)
from .explain import Explanation, Rule, explain_prediction, export_topology, extract_rules
from .harness import ExperimentConfig, Ordering, RunReport, make_ordering, netscore, run_experiment
from .inference import FusionMatrix, Posterior, build_precision, softmax
from .model import PrototypeClassifier
from .prototypes import DEFAULT_RADIUS, ClassState, MegaCloud, Prototype
from .stats import FeatureVector, GlobalStats, normalize

__all__ = [
    "BadMagic",
    "ClassState",
    "DEFAULT_RADIUS",
    "DanglingRowIndex",
    "DimensionMismatch",
    "DomainError",
    "EmptyModel",
    "ExperimentConfig",
    "Explanation",
    "FeatureVector",
    "FusionMatrix",
    "GlobalStats",
    "InternalError",
    "ManifestMissingField",
    "MegaCloud",
    "ModelConfig",
    "NotPositiveDefinite",
    "Ordering",
    "Posterior",
    "ProtostreamError",
    "Prototype",
    "PrototypeClassifier",
    "Rule",
    "RunReport",
    "SingleClass",
    "TruncatedPayload",
    "UnknownClass",
    "VersionUnsupported",
    "ZeroVector",
    "build_precision",
    "explain_prediction",
    "export_topology",
    "extract_rules",
    "make_ordering",
    "netscore",
    "normalize",
    "run_experiment",
    "softmax",
]

__version__ = "0.1.0"
