"""Streaming comparison learners sharing the engine's learner contract.

Each learner is single-pass, stores no raw past samples, normalizes its
input on ingestion, and exposes train_sample / predict / param_count.
predict never mutates semantic state (the LDA baseline refreshes a cached
inverse, like the engine does).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, EmptyModel
from .inference import Posterior, build_precision
from .stats import FeatureVector, normalize


class StreamingLearner:
    """Contract shared by the engine and the baselines."""

    def train_sample(self, fv: FeatureVector) -> "StreamingLearner":
        raise NotImplementedError

    def predict(self, x) -> Posterior:
        raise NotImplementedError

    def param_count(self) -> int:
        raise NotImplementedError

    def _ingest(self, fv: FeatureVector) -> tuple[np.ndarray, int]:
        if fv.label is None:
            raise DomainError("training requires a labeled sample")
        return normalize(fv.values), int(fv.label)

    def _query(self, x) -> np.ndarray:
        return normalize(x.values if isinstance(x, FeatureVector) else x)


class NearestClassMean(StreamingLearner):
    """Running mean per class; predicts by nearest mean in Euclidean distance.

    Parameter count: C*(D+1) — one mean vector and one counter per class.
    """

    def __init__(self):
        self.means: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}

    def train_sample(self, fv: FeatureVector) -> "NearestClassMean":
        x, label = self._ingest(fv)
        if label not in self.means:
            self.means[label] = x.copy()
            self.counts[label] = 1
            return self
        self.counts[label] += 1
        i = self.counts[label]
        self.means[label] = (i - 1) / i * self.means[label] + x / i
        return self

    def predict(self, x) -> Posterior:
        if not self.means:
            raise EmptyModel("no classes trained")
        q = self._query(x)
        ids = tuple(sorted(self.means))
        dists = np.array([np.linalg.norm(self.means[c] - q) for c in ids])
        return Posterior.from_scores(ids, -dists)

    def param_count(self) -> int:
        if not self.means:
            return 0
        d = next(iter(self.means.values())).size
        return len(self.means) * (d + 1)


class StreamingLDA(StreamingLearner):
    """Class means plus one shared streaming covariance and a shrinkage
    discriminant. The covariance recurrence centers at the updated global
    mean and starts from the zero matrix, so this baseline is the same
    discriminant as the engine's global inference under zero covariance
    init with an always-fresh precision.

    Parameter count: C*(D+1) + D^2 + 1.
    """

    def __init__(self, epsilon: float = 1e-4):
        self.epsilon = epsilon
        self.count = 0
        self.global_mean: np.ndarray | None = None
        self.covariance: np.ndarray | None = None
        self.means: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}
        self._lam: np.ndarray | None = None
        self._lam_built_at = -1

    def train_sample(self, fv: FeatureVector) -> "StreamingLDA":
        x, label = self._ingest(fv)
        self.count += 1
        i = self.count
        if i == 1:
            self.global_mean = x.copy()
            self.covariance = np.zeros((x.size, x.size), dtype=np.float64)
        else:
            w = (i - 1) / i
            self.global_mean = w * self.global_mean + x / i
            centered = x - self.global_mean
            self.covariance = w * self.covariance + np.outer(centered, centered) / i
        if label not in self.means:
            self.means[label] = x.copy()
            self.counts[label] = 1
        else:
            self.counts[label] += 1
            ik = self.counts[label]
            self.means[label] = (ik - 1) / ik * self.means[label] + x / ik
        return self

    def _precision(self) -> np.ndarray:
        if self.count < 2:
            return np.eye(self.covariance.shape[0])
        if self._lam is None or self._lam_built_at != self.count:
            self._lam = build_precision(self.covariance, self.epsilon)
            self._lam_built_at = self.count
        return self._lam

    def predict(self, x) -> Posterior:
        if not self.means:
            raise EmptyModel("no classes trained")
        q = self._query(x)
        lam = self._precision()
        ids = tuple(sorted(self.means))
        means = np.stack([self.means[c] for c in ids])
        weights = means @ lam
        bias = -0.5 * np.einsum("ij,ij->i", means, weights)
        scores = weights @ q + bias
        return Posterior.from_scores(ids, scores)

    def param_count(self) -> int:
        if not self.means:
            return 0
        d = self.global_mean.size
        return len(self.means) * (d + 1) + d * d + 1


class OnlinePerceptron(StreamingLearner):
    """Mistake-driven multi-class perceptron, learning rate 1, zero init.

    A new class's weight vector starts at zero before the mistake update.
    Correct predictions leave the state untouched.

    Parameter count: C*D.
    """

    def __init__(self):
        self.weights: dict[int, np.ndarray] = {}
        self.mistake_count = 0

    def train_sample(self, fv: FeatureVector) -> "OnlinePerceptron":
        x, label = self._ingest(fv)
        if label not in self.weights:
            self.weights[label] = np.zeros_like(x)
        ids = sorted(self.weights)
        scores = np.array([self.weights[c] @ x for c in ids])
        predicted = ids[int(np.argmax(scores))]
        if predicted != label:
            self.weights[label] += x
            self.weights[predicted] -= x
            self.mistake_count += 1
        return self

    def predict(self, x) -> Posterior:
        if not self.weights:
            raise EmptyModel("no classes trained")
        q = self._query(x)
        ids = tuple(sorted(self.weights))
        scores = np.array([self.weights[c] @ q for c in ids])
        return Posterior.from_scores(ids, scores)

    def param_count(self) -> int:
        if not self.weights:
            return 0
        d = next(iter(self.weights.values())).size
        return len(self.weights) * d


class StreamingNaiveBayes(StreamingLearner):
    """Per-class per-dimension Welford mean/variance with count priors.

    Variances are population (M2/n) floored at 1e-6 so constant features
    and single-sample classes stay finite.

    Parameter count: C*(2D+1) + 1.
    """

    VARIANCE_FLOOR = 1e-6

    def __init__(self):
        self.counts: dict[int, int] = {}
        self.means: dict[int, np.ndarray] = {}
        self.m2: dict[int, np.ndarray] = {}
        self.total = 0

    def train_sample(self, fv: FeatureVector) -> "StreamingNaiveBayes":
        x, label = self._ingest(fv)
        self.total += 1
        if label not in self.counts:
            self.counts[label] = 1
            self.means[label] = x.copy()
            self.m2[label] = np.zeros_like(x)
            return self
        self.counts[label] += 1
        n = self.counts[label]
        delta = x - self.means[label]
        self.means[label] = self.means[label] + delta / n
        self.m2[label] = self.m2[label] + delta * (x - self.means[label])
        return self

    def log_joint(self, x) -> tuple[tuple, np.ndarray]:
        """Log prior plus log Gaussian likelihood per class (sorted ids)."""
        if not self.counts:
            raise EmptyModel("no classes trained")
        q = self._query(x)
        ids = tuple(sorted(self.counts))
        out = np.empty(len(ids))
        for i, c in enumerate(ids):
            n = self.counts[c]
            var = np.maximum(self.m2[c] / n, self.VARIANCE_FLOOR)
            centered = q - self.means[c]
            log_lik = -0.5 * float(np.sum(np.log(2.0 * np.pi * var) + centered * centered / var))
            out[i] = np.log(n / self.total) + log_lik
        return ids, out

    def predict(self, x) -> Posterior:
        ids, joint = self.log_joint(x)
        return Posterior.from_scores(ids, joint)

    def priors(self) -> dict[int, float]:
        return {c: n / self.total for c, n in self.counts.items()}

    def param_count(self) -> int:
        if not self.counts:
            return 0
        d = next(iter(self.means.values())).size
        return len(self.counts) * (2 * d + 1) + 1
