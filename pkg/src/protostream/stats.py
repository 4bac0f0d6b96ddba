"""Streaming global statistics over a unit-normalized feature stream.

Single-pass recurrences maintain the running mean, mean squared norm
("scalar product") and covariance of everything the model has seen. All
accumulation is float64 regardless of the 32-bit on-disk feature format;
the 1/i recurrences lose precision quickly in single precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVector

# Norm below which an input is considered a corrupt export rather than data.
ZERO_NORM = 1e-12

# Squared norms this close to 1 are snapped to exactly 1.0 so the
# scalar-product recurrence sits at its analytic value for unit inputs.
_UNIT_SNAP = 1e-9


def normalize(raw) -> np.ndarray:
    """Scale a vector to unit Euclidean norm (float64).

    Raises ZeroVector when the norm is below 1e-12.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM:
        raise ZeroVector(f"vector norm {norm:.3e} is below {ZERO_NORM:.0e}")
    return arr / norm


def _squared_norm(x: np.ndarray) -> float:
    sq = float(x @ x)
    if abs(sq - 1.0) <= _UNIT_SNAP:
        return 1.0
    return sq


@dataclass
class FeatureVector:
    """One sample: identity, values, and an optional class label.

    Values may be raw; every learner in this package normalizes on ingestion,
    so a single exported feature file serves all of them identically.
    """

    sample_id: str
    values: np.ndarray
    label: int | None = None

    @classmethod
    def from_raw(cls, sample_id: str, raw, label: int | None = None) -> "FeatureVector":
        return cls(sample_id=sample_id, values=normalize(raw), label=label)


class GlobalStats:
    """Running mean, scalar product, and covariance over all training samples.

    The covariance recurrence centers the incoming sample at the *updated*
    mean. Its base case is configurable: "paper" seeds with the first
    sample's outer product, "zero" starts from the zero matrix.
    """

    __slots__ = ("count", "mean", "scalar_product", "covariance")

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionMismatch("dimension must be >= 1")
        self.count = 0
        self.mean = np.zeros(dim, dtype=np.float64)
        self.scalar_product = 0.0
        self.covariance = np.zeros((dim, dim), dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def update(self, x: np.ndarray, covariance_init: str = "paper") -> "GlobalStats":
        """Absorb one unit-norm sample; never re-reads earlier samples."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.mean.shape:
            raise DimensionMismatch(
                f"sample has dimension {x.shape}, stats track {self.mean.shape}"
            )
        self.count += 1
        i = self.count
        sq = _squared_norm(x)
        if i == 1:
            self.mean = x.copy()
            self.scalar_product = sq
            if covariance_init == "paper":
                self.covariance = np.outer(x, x)
            else:
                self.covariance = np.zeros((x.size, x.size), dtype=np.float64)
            return self
        w = (i - 1) / i
        self.mean = w * self.mean + x / i
        self.scalar_product = w * self.scalar_product + sq / i
        centered = x - self.mean
        self.covariance = w * self.covariance + np.outer(centered, centered) / i
        return self

    def copy(self) -> "GlobalStats":
        out = GlobalStats(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out.scalar_product = self.scalar_product
        out.covariance = self.covariance.copy()
        return out
