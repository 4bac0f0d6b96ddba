"""Per-class state: data-cloud prototypes, winner selection, and novelty.

A class owns a running mean/scalar product plus an ordered list of
prototypes (data-cloud centroids with support counts, influence radii and
the sample ids that shaped them) and a symmetric edge-count matrix linking
prototypes that fire together. Nothing here ever stores a past feature
vector; a prototype keeps identifiers only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .stats import _squared_norm

# Influence radius of a fresh prototype: chord length of a 30-degree arc on
# the unit sphere, sqrt(2 - 2*cos(30 deg)).
DEFAULT_RADIUS = math.sqrt(2.0 - 2.0 * math.cos(math.radians(30.0)))


@dataclass
class Prototype:
    """Running centroid of one data cloud.

    support equals len(members); members holds sample ids in arrival order.
    density_cache is a diagnostic copy of the last density computed for this
    centroid; live logic always recomputes against current class statistics.
    """

    centroid: np.ndarray
    support: int
    radius: float
    members: list = field(default_factory=list)
    density_cache: float = 0.0


@dataclass(frozen=True)
class MegaCloud:
    """The class-level granularity: every prototype of one class."""

    class_id: int
    prototype_indices: tuple


class ClassState:
    """All per-class streaming state."""

    __slots__ = ("class_id", "sample_count", "mean", "scalar_product", "prototypes", "edges")

    def __init__(self, class_id: int, mean: np.ndarray, scalar_product: float,
                 sample_count: int, prototypes: list, edges: np.ndarray):
        self.class_id = class_id
        self.mean = mean
        self.scalar_product = scalar_product
        self.sample_count = sample_count
        self.prototypes = prototypes
        self.edges = edges

    @classmethod
    def bootstrap(cls, class_id: int, x: np.ndarray, sample_id: str) -> "ClassState":
        """State for a class's very first sample: one prototype, no edges."""
        proto = Prototype(
            centroid=x.copy(),
            support=1,
            radius=DEFAULT_RADIUS,
            members=[sample_id],
            density_cache=1.0,
        )
        return cls(
            class_id=class_id,
            mean=x.copy(),
            scalar_product=_squared_norm(x),
            sample_count=1,
            prototypes=[proto],
            edges=np.zeros((1, 1), dtype=np.int64),
        )

    @property
    def prototype_count(self) -> int:
        return len(self.prototypes)

    def update(self, x: np.ndarray) -> "ClassState":
        """Fold one more unit-norm sample into the class mean and scalar product."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.mean.shape:
            raise DimensionMismatch(
                f"sample has dimension {x.shape}, class tracks {self.mean.shape}"
            )
        self.sample_count += 1
        i = self.sample_count
        w = (i - 1) / i
        self.mean = w * self.mean + x / i
        self.scalar_product = w * self.scalar_product + _squared_norm(x) / i
        return self

    def density(self, x: np.ndarray) -> float:
        """Mutual-proximity score of x relative to this class, in (0, 1].

        1 / (1 + ||x - mean||^2 + scalar_product - ||mean||^2). The Jensen gap
        scalar_product - ||mean||^2 is clamped at 0 so float round-off cannot
        push the value above 1.
        """
        diff = x - self.mean
        gap = self.scalar_product - float(self.mean @ self.mean)
        if gap < 0.0:
            gap = 0.0
        return 1.0 / (1.0 + float(diff @ diff) + gap)

    def megacloud(self) -> MegaCloud:
        return MegaCloud(self.class_id, tuple(range(len(self.prototypes))))


def find_winners(state: ClassState, precision: np.ndarray, x: np.ndarray):
    """Nearest and second-nearest prototype of one class under the quadratic
    form induced by `precision`; ties go to the lowest prototype index.

    Returns (b1, b2) with b2 None when the class has a single prototype.
    """
    centroids = np.stack([p.centroid for p in state.prototypes])
    diffs = centroids - x
    dists = np.einsum("ij,jk,ik->i", diffs, precision, diffs)
    b1 = int(np.argmin(dists))
    if len(state.prototypes) == 1:
        return b1, None
    rest = dists.copy()
    rest[b1] = np.inf
    b2 = int(np.argmin(rest))
    return b1, b2


def novelty_test(state: ClassState, x: np.ndarray) -> bool:
    """True when x falls outside the density bracket of the class's prototypes.

    Prototype densities are recomputed against the *current* class statistics
    on every call (the class mean moves each step); the cached values are
    refreshed as a side effect for diagnostics only.
    """
    d_x = state.density(x)
    lo = math.inf
    hi = -math.inf
    for proto in state.prototypes:
        d_p = state.density(proto.centroid)
        proto.density_cache = d_p
        lo = min(lo, d_p)
        hi = max(hi, d_p)
    return d_x > hi or d_x < lo


def add_prototype(state: ClassState, x: np.ndarray, sample_id: str, b1: int) -> None:
    """Open a new data cloud at x and link it to the winning prototype.

    The prototype-count increment happens exactly once, here.
    """
    g = len(state.prototypes)
    state.prototypes.append(
        Prototype(
            centroid=x.copy(),
            support=1,
            radius=DEFAULT_RADIUS,
            members=[sample_id],
            density_cache=state.density(x),
        )
    )
    grown = np.zeros((g + 1, g + 1), dtype=np.int64)
    grown[:g, :g] = state.edges
    grown[g, b1] = 1
    grown[b1, g] = 1
    state.edges = grown


def update_prototype(state: ClassState, x: np.ndarray, sample_id: str,
                     b1: int, b2: int | None) -> None:
    """Fold x into the winning prototype and bump the b1-b2 edge.

    The radius halving rule uses the *updated* centroid; its squared norm is
    clamped at 1 (means of unit vectors cannot exceed it except by round-off)
    so the radius stays strictly positive.
    """
    proto = state.prototypes[b1]
    proto.support += 1
    s = proto.support
    proto.centroid = (s - 1) / s * proto.centroid + x / s
    sq = float(proto.centroid @ proto.centroid)
    if sq > 1.0:
        sq = 1.0
    proto.radius = math.sqrt((proto.radius * proto.radius + (1.0 - sq)) / 2.0)
    proto.members.append(sample_id)
    if b2 is not None:
        state.edges[b1, b2] += 1
        state.edges[b2, b1] += 1
