"""The streaming prototype classifier.

Training is strictly sequential and single-pass: each labeled sample first
drives a test-then-train update of the fusion counter (predicting with the
pre-update model), then updates the global statistics, then either bootstraps
a new class or flows through winner selection and the novelty bracket into a
new or existing prototype. Inference is read-only apart from the lazily
refreshed precision cache.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import DimensionMismatch, DomainError, EmptyModel, UnknownClass
from .inference import FusionMatrix, Posterior, PrecisionMatrix, build_precision, softmax
from .prototypes import ClassState, Prototype, add_prototype, find_winners, novelty_test, update_prototype
from .stats import FeatureVector, GlobalStats, normalize


@dataclass(frozen=True)
class TrainDecision:
    """Trace record of one training step, for replay-oracle tests."""

    sample_id: str
    label: int
    action: str  # "init-class" | "new-prototype" | "update-prototype"
    b1: int | None
    b2: int | None
    novel: bool | None


class PrototypeClassifier:
    """Single-pass prototype learner with local, global, and fused inference.

    Satisfies the shared streaming-learner contract: train_sample / predict /
    param_count. predict never mutates semantic state; it may refresh the
    cached precision matrix per the refresh policy.
    """

    def __init__(self, config: ModelConfig | None = None, *, record_decisions: bool = False):
        self.config = config or ModelConfig()
        self.global_stats: GlobalStats | None = None
        self.classes: dict[int, ClassState] = {}
        self.fusion = FusionMatrix()
        self.precision: PrecisionMatrix | None = None
        self.label_names: dict[int, str] | None = None
        self.decisions: list[TrainDecision] | None = [] if record_decisions else None

    # ------------------------------------------------------------------ state

    @property
    def dim(self) -> int | None:
        return None if self.global_stats is None else self.global_stats.dim

    @property
    def class_ids(self) -> tuple:
        return tuple(sorted(self.classes))

    @property
    def sample_count(self) -> int:
        return 0 if self.global_stats is None else self.global_stats.count

    def class_state(self, class_id: int) -> ClassState:
        try:
            return self.classes[class_id]
        except KeyError:
            raise UnknownClass(f"class {class_id} has not been seen") from None

    def density(self, class_id: int, x) -> float:
        return self.class_state(class_id).density(self._as_query(x))

    # --------------------------------------------------------------- training

    def train_sample(self, fv: FeatureVector) -> "PrototypeClassifier":
        if fv.label is None:
            raise DomainError("training requires a labeled sample")
        x = normalize(fv.values)
        if self.global_stats is not None and x.shape[0] != self.global_stats.dim:
            raise DimensionMismatch(
                f"sample dimension {x.shape[0]} != model dimension {self.global_stats.dim}"
            )
        label = int(fv.label)

        self.fusion_train_step(x, label)

        if self.global_stats is None:
            self.global_stats = GlobalStats(x.shape[0])
        self.global_stats.update(x, covariance_init=self.config.covariance_init)

        state = self.classes.get(label)
        if state is None:
            self.classes[label] = ClassState.bootstrap(label, x, fv.sample_id)
            self._record(fv.sample_id, label, "init-class", None, None, None)
            return self

        state.update(x)
        lam = self._current_precision()
        b1, b2 = find_winners(state, lam, x)
        novel = novelty_test(state, x)
        if novel:
            add_prototype(state, x, fv.sample_id, b1)
            self._record(fv.sample_id, label, "new-prototype", b1, b2, True)
        else:
            update_prototype(state, x, fv.sample_id, b1, b2)
            self._record(fv.sample_id, label, "update-prototype", b1, b2, False)
        return self

    def fusion_train_step(self, x: np.ndarray, true_label: int) -> None:
        """Tally (true, global-pred, local-pred) with the pre-update model.

        Skipped while fewer than two classes exist even counting the incoming
        label; the pre-update model cannot predict a class it has not seen,
        but the first sample of a second class is already tallied.
        """
        effective = len(self.classes) + (0 if true_label in self.classes else 1)
        if effective < 2 or not self.classes:
            return
        lam = self._current_precision()
        global_pred = self._mcinf_posterior(x, lam).predicted
        local_pred = self._prinf_posterior(x, lam).predicted
        self.fusion.increment(true_label, global_pred, local_pred)

    def _record(self, sample_id, label, action, b1, b2, novel) -> None:
        if self.decisions is not None:
            self.decisions.append(TrainDecision(sample_id, label, action, b1, b2, novel))

    # ----------------------------------------------------------- precision

    def refresh_policy(self) -> np.ndarray:
        """Rebuild the precision cache if it is missing or has aged past the
        configured refresh interval; returns the current matrix.

        Until two samples exist the identity is returned without building
        anything (the covariance is rank-deficient at count 1).
        """
        return self._current_precision()

    def _current_precision(self) -> np.ndarray:
        if self.global_stats is None or self.global_stats.count < 2:
            dim = 1 if self.global_stats is None else self.global_stats.dim
            return np.eye(dim)
        age_limit = self.config.precision_refresh
        if (
            self.precision is None
            or (self.global_stats.count - self.precision.built_at) >= age_limit
        ):
            self.precision = PrecisionMatrix(
                matrix=build_precision(self.global_stats.covariance, self.config.epsilon),
                built_at=self.global_stats.count,
            )
        return self.precision.matrix

    # ----------------------------------------------------------- inference

    def _as_query(self, x) -> np.ndarray:
        q = normalize(x.values if isinstance(x, FeatureVector) else x)
        if self.global_stats is not None and q.shape[0] != self.global_stats.dim:
            raise DimensionMismatch(
                f"query dimension {q.shape[0]} != model dimension {self.global_stats.dim}"
            )
        return q

    def _require_trained(self) -> None:
        if not self.classes:
            raise EmptyModel("no classes trained")

    def _prinf_posterior(self, x: np.ndarray, lam: np.ndarray) -> Posterior:
        ids = self.class_ids
        scores = np.empty(len(ids), dtype=np.float64)
        for i, cid in enumerate(ids):
            protos = np.stack([p.centroid for p in self.classes[cid].prototypes])
            weights = protos @ lam
            bias = -0.5 * np.einsum("ij,ij->i", protos, weights)
            s = weights @ x + bias
            if self.config.prinf_pool == "max":
                scores[i] = s.max()
            else:  # logsumexp pooling: softmax runs over every prototype
                m = s.max()
                scores[i] = m + np.log(np.exp(s - m).sum())
        return Posterior.from_scores(ids, scores)

    def _mcinf_posterior(self, x: np.ndarray, lam: np.ndarray) -> Posterior:
        ids = self.class_ids
        means = np.stack([self.classes[cid].mean for cid in ids])
        weights = means @ lam
        bias = -0.5 * np.einsum("ij,ij->i", means, weights)
        scores = weights @ x + bias
        return Posterior.from_scores(ids, scores)

    def prinf(self, x) -> Posterior:
        """Local inference: nearest-prototype discriminant pooled per class."""
        self._require_trained()
        q = self._as_query(x)
        return self._prinf_posterior(q, self._current_precision())

    def mcinf(self, x) -> Posterior:
        """Global inference: shrinkage discriminant over class means."""
        self._require_trained()
        q = self._as_query(x)
        return self._mcinf_posterior(q, self._current_precision())

    def fuse(self, x) -> Posterior:
        """Fused inference via the prediction-pair tally.

        Unseen (global, local) prediction pairs fall back to the global
        posterior, so fusion never errors on any pair.
        """
        self._require_trained()
        q = self._as_query(x)
        lam = self._current_precision()
        global_post = self._mcinf_posterior(q, lam)
        local_pred = self._prinf_posterior(q, lam).predicted
        ids = self.class_ids
        row = self.fusion.row(ids, global_post.predicted, local_pred)
        mass = row.sum()
        if mass > 0:
            return Posterior.from_probabilities(ids, row / mass)
        return global_post

    def predict(self, x, inference: str = "fuse") -> Posterior:
        if inference == "prinf":
            return self.prinf(x)
        if inference == "mcinf":
            return self.mcinf(x)
        if inference == "fuse":
            return self.fuse(x)
        raise DomainError(f"unknown inference mode {inference!r}")

    # ----------------------------------------------------------- accounting

    def param_count(self) -> int:
        """Auditable size: D + 1 + D^2 global, D + 2 + g*(D+2) + g^2 per class,
        and 4 per nonzero fusion entry (three indices plus a count)."""
        if self.global_stats is None:
            return 0
        d = self.global_stats.dim
        total = d + 1 + d * d
        for state in self.classes.values():
            g = state.prototype_count
            total += d + 2 + g * (d + 2) + g * g
        total += 4 * self.fusion.nonzero_count()
        return total

    def prototype_total(self) -> int:
        return sum(s.prototype_count for s in self.classes.values())

    # ---------------------------------------------------------- serialization

    def to_state(self) -> dict:
        """Plain-dict form of the full model state (JSON-safe, float64 exact)."""
        state: dict = {
            "schema_version": 1,
            "kind": "model-snapshot",
            "config": self.config.to_dict(),
            "dimension": self.dim,
            "label_names": (
                None
                if self.label_names is None
                else {str(k): v for k, v in self.label_names.items()}
            ),
            "fusion": [
                [t, g, l, c] for (t, g, l), c in self.fusion.items_sorted()
            ],
        }
        if self.global_stats is None:
            state["global"] = None
        else:
            state["global"] = {
                "count": self.global_stats.count,
                "mean": self.global_stats.mean.tolist(),
                "scalar_product": self.global_stats.scalar_product,
                "covariance": self.global_stats.covariance.tolist(),
            }
        state["classes"] = [
            {
                "class_id": cid,
                "sample_count": st.sample_count,
                "mean": st.mean.tolist(),
                "scalar_product": st.scalar_product,
                "prototypes": [
                    {
                        "centroid": p.centroid.tolist(),
                        "support": p.support,
                        "radius": p.radius,
                        "members": list(p.members),
                        "density_cache": p.density_cache,
                    }
                    for p in st.prototypes
                ],
                "edges": st.edges.tolist(),
            }
            for cid, st in sorted(self.classes.items())
        ]
        if self.precision is None:
            state["precision"] = None
        else:
            state["precision"] = {
                "built_at": self.precision.built_at,
                "matrix": self.precision.matrix.tolist(),
            }
        return state

    @classmethod
    def from_state(cls, state: dict) -> "PrototypeClassifier":
        model = cls(config=ModelConfig.from_dict(state["config"]))
        if state.get("label_names") is not None:
            model.label_names = {int(k): v for k, v in state["label_names"].items()}
        g = state.get("global")
        if g is not None:
            stats = GlobalStats(len(g["mean"]))
            stats.count = int(g["count"])
            stats.mean = np.asarray(g["mean"], dtype=np.float64)
            stats.scalar_product = float(g["scalar_product"])
            stats.covariance = np.asarray(g["covariance"], dtype=np.float64)
            model.global_stats = stats
        for entry in state.get("classes", []):
            protos = [
                Prototype(
                    centroid=np.asarray(p["centroid"], dtype=np.float64),
                    support=int(p["support"]),
                    radius=float(p["radius"]),
                    members=list(p["members"]),
                    density_cache=float(p["density_cache"]),
                )
                for p in entry["prototypes"]
            ]
            model.classes[int(entry["class_id"])] = ClassState(
                class_id=int(entry["class_id"]),
                mean=np.asarray(entry["mean"], dtype=np.float64),
                scalar_product=float(entry["scalar_product"]),
                sample_count=int(entry["sample_count"]),
                prototypes=protos,
                edges=np.asarray(entry["edges"], dtype=np.int64),
            )
        for t, gp, lp, c in state.get("fusion", []):
            model.fusion.counts[(int(t), int(gp), int(lp))] = int(c)
        p = state.get("precision")
        if p is not None:
            model.precision = PrecisionMatrix(
                matrix=np.asarray(p["matrix"], dtype=np.float64),
                built_at=int(p["built_at"]),
            )
        return model
