"""Model configuration knobs.

All behavioral switches live in one frozen dataclass so a model snapshot can
embed the exact configuration it was trained under.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields


COVARIANCE_INITS = ("paper", "zero")
PRINF_POOLS = ("max", "sum")


@dataclass(frozen=True)
class ModelConfig:
    """Configuration for the streaming prototype classifier.

    covariance_init: base case of the global covariance recurrence. "paper"
        seeds it with the first sample's outer product; "zero" starts from the
        zero matrix (which makes the global discriminant coincide with the
        streaming-LDA baseline).
    epsilon: shrinkage weight blending the covariance with identity before
        inversion.
    precision_refresh: rebuild the cached precision matrix once this many
        samples have arrived since it was last built. math.inf builds it once.
    prinf_pool: how per-prototype scores collapse into a class score for the
        local inference path ("max" or "sum", where "sum" pools by logsumexp).
    max_members_per_rule: cap on member ids per exported rule/explanation list
        (newest kept); None keeps everything. The model itself always retains
        full member records.
    netscore_log_base: logarithm base of the combined evaluation score.
    """

    covariance_init: str = "paper"
    epsilon: float = 1e-4
    precision_refresh: float = 100
    prinf_pool: str = "max"
    max_members_per_rule: int | None = None
    netscore_log_base: float = 10.0

    def __post_init__(self) -> None:
        if self.covariance_init not in COVARIANCE_INITS:
            raise ValueError(f"covariance_init must be one of {COVARIANCE_INITS}")
        if self.prinf_pool not in PRINF_POOLS:
            raise ValueError(f"prinf_pool must be one of {PRINF_POOLS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.precision_refresh >= 1:
            raise ValueError("precision_refresh must be >= 1 (or math.inf)")
        if self.max_members_per_rule is not None and self.max_members_per_rule < 1:
            raise ValueError("max_members_per_rule must be None or >= 1")
        if not self.netscore_log_base > 1:
            raise ValueError("netscore_log_base must exceed 1")

    def to_dict(self) -> dict:
        """JSON-safe form; an infinite refresh interval is encoded as null."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "precision_refresh" and math.isinf(value):
                value = None
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        if kwargs.get("precision_refresh") is None and "precision_refresh" in kwargs:
            kwargs["precision_refresh"] = math.inf
        return cls(**kwargs)
