"""Shrinkage precision, posteriors, and the pairwise fusion counter.

The precision matrix is the inverse of the shrinkage-regularized global
covariance, computed through a symmetric positive-definite (Cholesky) solve
and symmetrized. The fusion counter is a sparse 3-D tally over
(true label, global prediction, local prediction) triples observed during
training in test-then-train order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite


def softmax(scores: np.ndarray) -> np.ndarray:
    """Shift-invariant softmax (max subtraction before exponentiation)."""
    z = scores - np.max(scores)
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class Posterior:
    """Class probabilities (summing to 1) plus the winning class id.

    probabilities[i] belongs to class_ids[i]; class_ids are sorted ascending,
    so the first-maximum argmax realizes the lowest-index tie-break.
    """

    class_ids: tuple
    probabilities: np.ndarray
    predicted: int

    @classmethod
    def from_scores(cls, class_ids, scores: np.ndarray) -> "Posterior":
        probs = softmax(np.asarray(scores, dtype=np.float64))
        return cls(tuple(class_ids), probs, int(class_ids[int(np.argmax(probs))]))

    @classmethod
    def from_probabilities(cls, class_ids, probs: np.ndarray) -> "Posterior":
        probs = np.asarray(probs, dtype=np.float64)
        return cls(tuple(class_ids), probs, int(class_ids[int(np.argmax(probs))]))


def build_precision(covariance: np.ndarray, epsilon: float = 1e-4) -> np.ndarray:
    """Invert (1-eps)*covariance + eps*I via a Cholesky solve.

    The blend is SPD for any PSD covariance and eps > 0; a failed
    factorization therefore signals corruption and raises
    NotPositiveDefinite. The result is symmetrized before returning.
    """
    covariance = np.asarray(covariance, dtype=np.float64)
    d = covariance.shape[0]
    blend = (1.0 - epsilon) * covariance + epsilon * np.eye(d)
    try:
        factor = scipy.linalg.cho_factor(blend, lower=True, check_finite=False)
        lam = scipy.linalg.cho_solve(factor, np.eye(d), check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            f"regularized covariance is not positive definite: {exc}"
        ) from exc
    return (lam + lam.T) / 2.0


@dataclass
class PrecisionMatrix:
    """A built precision matrix plus the global sample count it was built at."""

    matrix: np.ndarray
    built_at: int


class FusionMatrix:
    """Sparse tally over (true, global_pred, local_pred) label triples."""

    __slots__ = ("counts",)

    def __init__(self, counts: dict | None = None):
        self.counts: dict = dict(counts) if counts else {}

    def increment(self, true_label: int, global_pred: int, local_pred: int) -> None:
        key = (int(true_label), int(global_pred), int(local_pred))
        self.counts[key] = self.counts.get(key, 0) + 1

    def row(self, class_ids, global_pred: int, local_pred: int) -> np.ndarray:
        """Counts per candidate true class for one observed prediction pair."""
        return np.array(
            [self.counts.get((cid, global_pred, local_pred), 0) for cid in class_ids],
            dtype=np.float64,
        )

    def total(self) -> int:
        return sum(self.counts.values())

    def nonzero_count(self) -> int:
        return sum(1 for v in self.counts.values() if v > 0)

    def items_sorted(self) -> list:
        return sorted(self.counts.items())

    def copy(self) -> "FusionMatrix":
        return FusionMatrix(self.counts)
