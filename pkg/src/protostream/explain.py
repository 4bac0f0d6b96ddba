"""Rule extraction, prediction explanations, and topology export.

Everything here is read-only over a model snapshot and deterministic:
identical state and query produce byte-identical JSON documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyModel, SingleClass
from .model import PrototypeClassifier
from .prototypes import find_winners

EXPLANATION_SCHEMA_VERSION = 1
TOPOLOGY_SCHEMA_VERSION = 1
RULES_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Rule:
    """One IF-THEN rule: either a single prototype or a whole class."""

    kind: str  # "prototype" | "class"
    class_id: int
    prototype_index: int | None
    member_sample_ids: tuple
    text: str


@dataclass(frozen=True)
class Explanation:
    """Example-based justification of one fused prediction.

    hits come from the winning prototype of the predicted class, near_hits
    from its runner-up prototype (absent for single-prototype classes), and
    near_misses from the winning prototype of the runner-up class (absent
    when only one class exists).
    """

    query_id: str | None
    predicted: int
    runner_up: int | None
    hit_prototype: int
    hits: tuple
    near_hit_prototype: int | None
    near_hits: tuple | None
    near_miss_prototype: int | None
    near_misses: tuple | None


def _label_text(model: PrototypeClassifier, class_id: int) -> str:
    if model.label_names and class_id in model.label_names:
        return model.label_names[class_id]
    return str(class_id)


def _cap_members(model: PrototypeClassifier, members: list) -> tuple:
    cap = model.config.max_members_per_rule
    if cap is None:
        return tuple(members)
    return tuple(members[-cap:])


def extract_rules(model: PrototypeClassifier) -> list[Rule]:
    """One rule per prototype plus one MegaCloud rule per class.

    Member ids are the prototypes' records verbatim (newest-capped only when
    the model config asks for export capping).
    """
    if not model.classes:
        raise EmptyModel("no classes trained")
    rules: list[Rule] = []
    for cid in model.class_ids:
        state = model.classes[cid]
        label = _label_text(model, cid)
        for j, proto in enumerate(state.prototypes):
            rules.append(
                Rule(
                    kind="prototype",
                    class_id=cid,
                    prototype_index=j,
                    member_sample_ids=_cap_members(model, proto.members),
                    text=f"IF (sample ~ members of prototype {cid}.{j}) THEN (class is {label})",
                )
            )
        all_members: list = []
        for proto in state.prototypes:
            all_members.extend(proto.members)
        rules.append(
            Rule(
                kind="class",
                class_id=cid,
                prototype_index=None,
                member_sample_ids=_cap_members(model, all_members),
                text=f"IF (sample ~ MegaCloud of class {label}) THEN (class is {label})",
            )
        )
    return rules


def explain_prediction(
    model: PrototypeClassifier,
    x,
    query_id: str | None = None,
    *,
    require_runner_up: bool = False,
) -> Explanation:
    """Explain the fused prediction for x with member-id evidence.

    The runner-up class comes from the fused posterior's second argmax; when
    that posterior is degenerate one-hot (a sparse fusion row) it falls back
    to the global posterior's best non-winning class. With a single trained
    class the runner-up and near-misses are absent, unless require_runner_up
    is set, in which case SingleClass is raised.
    """
    if not model.classes:
        raise EmptyModel("no classes trained")
    q = model._as_query(x)
    fused = model.fuse(q)
    lam = model._current_precision()
    l1 = fused.predicted
    ids = fused.class_ids

    if len(ids) < 2:
        if require_runner_up:
            raise SingleClass("a runner-up class requires at least two classes")
        l2 = None
    else:
        probs = fused.probabilities
        if np.count_nonzero(probs) >= 2:
            masked = probs.copy()
            masked[ids.index(l1)] = -np.inf
            l2 = int(ids[int(np.argmax(masked))])
        else:
            global_probs = model._mcinf_posterior(q, lam).probabilities.copy()
            global_probs[ids.index(l1)] = -np.inf
            l2 = int(ids[int(np.argmax(global_probs))])

    state1 = model.classes[l1]
    b11, b12 = find_winners(state1, lam, q)
    hits = _cap_members(model, state1.prototypes[b11].members)
    if b12 is None:
        near_hit_prototype = None
        near_hits = None
    else:
        near_hit_prototype = b12
        near_hits = _cap_members(model, state1.prototypes[b12].members)

    if l2 is None:
        near_miss_prototype = None
        near_misses = None
    else:
        state2 = model.classes[l2]
        b21, _ = find_winners(state2, lam, q)
        near_miss_prototype = b21
        near_misses = _cap_members(model, state2.prototypes[b21].members)

    return Explanation(
        query_id=query_id,
        predicted=l1,
        runner_up=l2,
        hit_prototype=b11,
        hits=hits,
        near_hit_prototype=near_hit_prototype,
        near_hits=near_hits,
        near_miss_prototype=near_miss_prototype,
        near_misses=near_misses,
    )


def export_topology(model: PrototypeClassifier) -> dict:
    """Prototype centroids, supports, radii and edge lists per class.

    Edges are the strictly positive upper-triangle entries of each class's
    edge matrix as [i, j, count]. No dimensionality reduction is performed;
    plotting is external tooling's job.
    """
    if not model.classes:
        raise EmptyModel("no classes trained")
    classes = []
    for cid in model.class_ids:
        state = model.classes[cid]
        nodes = [
            {
                "index": j,
                "support": p.support,
                "radius": p.radius,
                "centroid": p.centroid.tolist(),
            }
            for j, p in enumerate(state.prototypes)
        ]
        edges = []
        g = state.prototype_count
        for i in range(g):
            for j in range(i + 1, g):
                count = int(state.edges[i, j])
                if count > 0:
                    edges.append([i, j, count])
        classes.append(
            {
                "class_id": cid,
                "label": _label_text(model, cid),
                "prototype_count": g,
                "nodes": nodes,
                "edges": edges,
            }
        )
    return {
        "schema_version": TOPOLOGY_SCHEMA_VERSION,
        "dimension": model.dim,
        "classes": classes,
    }


def rules_to_document(rules: list[Rule]) -> dict:
    return {
        "schema_version": RULES_SCHEMA_VERSION,
        "rules": [
            {
                "kind": r.kind,
                "class_id": r.class_id,
                "prototype_index": r.prototype_index,
                "members": list(r.member_sample_ids),
                "text": r.text,
            }
            for r in rules
        ],
    }


def explanation_to_document(explanation: Explanation) -> dict:
    return {
        "schema_version": EXPLANATION_SCHEMA_VERSION,
        "query_id": explanation.query_id,
        "predicted": explanation.predicted,
        "runner_up": explanation.runner_up,
        "hit_prototype": explanation.hit_prototype,
        "hits": list(explanation.hits),
        "near_hit_prototype": explanation.near_hit_prototype,
        "near_hits": None if explanation.near_hits is None else list(explanation.near_hits),
        "near_miss_prototype": explanation.near_miss_prototype,
        "near_misses": None if explanation.near_misses is None else list(explanation.near_misses),
    }


def to_json(document: dict) -> str:
    """Canonical JSON: sorted keys, compact separators, newline-terminated."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"
