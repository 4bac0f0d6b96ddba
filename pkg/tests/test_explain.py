"""Rules, explanations, and topology export."""

import json

import numpy as np
import pytest

from protostream.config import ModelConfig
from protostream.errors import EmptyModel, SingleClass
from protostream.explain import (
    explain_prediction,
    explanation_to_document,
    export_topology,
    extract_rules,
    rules_to_document,
    to_json,
)
from protostream.model import PrototypeClassifier
from protostream.prototypes import find_winners
from protostream.stats import FeatureVector, normalize

from conftest import blob_stream, fabricate_model, random_unit


def trained_model(rng, n_per_class=40, dim=6, n_classes=3):
    model = PrototypeClassifier()
    stream, centers = blob_stream(rng, n_per_class, dim, n_classes, spread=0.2)
    for fv in stream:
        model.train_sample(fv)
    return model, centers


class TestExtractRules:
    def test_counts_prototype_plus_class_rules(self):
        e = np.eye(4)
        model = fabricate_model({0: [e[0]], 1: [e[1]]})
        rules = extract_rules(model)
        assert sum(r.kind == "prototype" for r in rules) == 2
        assert sum(r.kind == "class" for r in rules) == 2

    def test_rule_count_matches_prototype_total(self, rng):
        model, _ = trained_model(rng)
        rules = extract_rules(model)
        assert sum(r.kind == "prototype" for r in rules) == model.prototype_total()
        assert sum(r.kind == "class" for r in rules) == len(model.classes)

    def test_every_sample_in_exactly_one_prototype_rule(self, rng):
        model, _ = trained_model(rng)
        members = [
            m
            for r in extract_rules(model)
            if r.kind == "prototype"
            for m in r.member_sample_ids
        ]
        assert len(members) == model.sample_count
        assert len(set(members)) == len(members)

    def test_member_ids_verbatim(self, rng):
        model, _ = trained_model(rng, n_per_class=10, n_classes=2)
        for rule in extract_rules(model):
            if rule.kind == "prototype":
                proto = model.classes[rule.class_id].prototypes[rule.prototype_index]
                assert list(rule.member_sample_ids) == list(proto.members)

    def test_member_cap_keeps_newest(self, rng):
        cfg = ModelConfig(max_members_per_rule=2)
        model = PrototypeClassifier(config=cfg)
        x = random_unit(rng, 5)
        for i in range(6):
            model.train_sample(FeatureVector(f"s{i}", x, 0))
        rules = extract_rules(model)
        proto_rule = next(r for r in rules if r.kind == "prototype" and r.member_sample_ids)
        full = model.classes[0].prototypes[proto_rule.prototype_index].members
        assert list(proto_rule.member_sample_ids) == full[-2:]
        assert len(full) > 2  # the model itself keeps everything

    def test_empty_model_rejected(self):
        with pytest.raises(EmptyModel):
            extract_rules(PrototypeClassifier())


class TestExplainPrediction:
    def test_two_single_prototype_classes_forced_structure(self):
        e = np.eye(4)
        model = fabricate_model({0: [e[0]], 1: [e[1]]})
        explanation = explain_prediction(model, normalize(e[0] + 0.05 * e[2]), "q")
        assert explanation.predicted == 0
        assert explanation.runner_up == 1
        assert explanation.hits == ("fab-0-0",)
        assert explanation.near_hits is None
        assert explanation.near_misses == ("fab-1-0",)

    def test_hits_come_from_brute_force_winner(self, rng):
        model, _ = trained_model(rng)
        for _ in range(20):
            q = random_unit(rng, 6)
            explanation = explain_prediction(model, q)
            state = model.classes[explanation.predicted]
            lam = model._current_precision()
            dists = [
                float((q - p.centroid) @ lam @ (q - p.centroid)) for p in state.prototypes
            ]
            best = min(range(len(dists)), key=lambda j: (dists[j], j))
            assert explanation.hit_prototype == best
            assert explanation.hits == tuple(state.prototypes[best].members)

    def test_predicted_matches_fuse(self, rng):
        model, _ = trained_model(rng)
        for _ in range(30):
            q = random_unit(rng, 6)
            assert explain_prediction(model, q).predicted == model.fuse(q).predicted

    def test_near_hits_absent_iff_single_prototype(self, rng):
        model, _ = trained_model(rng)
        for _ in range(20):
            q = random_unit(rng, 6)
            explanation = explain_prediction(model, q)
            g = model.classes[explanation.predicted].prototype_count
            assert (explanation.near_hits is None) == (g == 1)

    def test_runner_up_differs_from_winner(self, rng):
        model, _ = trained_model(rng)
        for _ in range(20):
            explanation = explain_prediction(model, random_unit(rng, 6))
            assert explanation.runner_up is not None
            assert explanation.runner_up != explanation.predicted

    def test_degenerate_fused_row_uses_global_runner_up(self):
        e = np.eye(5)
        model = fabricate_model({0: [e[0]], 1: [e[1]], 2: [e[2]]})
        q = e[0]
        ghat = model.mcinf(q).predicted
        lhat = model.prinf(q).predicted
        model.fusion.counts[(0, ghat, lhat)] = 9  # one-hot fused row
        explanation = explain_prediction(model, q)
        assert explanation.predicted == 0
        global_post = model.mcinf(q)
        probs = global_post.probabilities.copy()
        probs[list(global_post.class_ids).index(0)] = -np.inf
        assert explanation.runner_up == global_post.class_ids[int(np.argmax(probs))]

    def test_single_class_near_misses_absent(self, rng):
        model = fabricate_model({0: [random_unit(rng, 4)]})
        explanation = explain_prediction(model, random_unit(rng, 4))
        assert explanation.runner_up is None
        assert explanation.near_misses is None
        with pytest.raises(SingleClass):
            explain_prediction(model, random_unit(rng, 4), require_runner_up=True)

    def test_empty_model_rejected(self):
        with pytest.raises(EmptyModel):
            explain_prediction(PrototypeClassifier(), np.ones(3))

    def test_document_is_deterministic(self, rng):
        model, _ = trained_model(rng)
        q = random_unit(rng, 6)
        doc_a = to_json(explanation_to_document(explain_prediction(model, q, "q1")))
        doc_b = to_json(explanation_to_document(explain_prediction(model, q, "q1")))
        assert doc_a == doc_b


class TestExportTopology:
    def test_fresh_model_single_node_no_edges(self, rng):
        model = PrototypeClassifier()
        model.train_sample(FeatureVector("a", random_unit(rng, 4), 0))
        doc = export_topology(model)
        assert doc["schema_version"] == 1
        assert len(doc["classes"]) == 1
        assert len(doc["classes"][0]["nodes"]) == 1
        assert doc["classes"][0]["edges"] == []

    def test_counts_match_model(self, rng):
        model, _ = trained_model(rng)
        doc = export_topology(model)
        assert sum(len(c["nodes"]) for c in doc["classes"]) == model.prototype_total()
        for entry in doc["classes"]:
            state = model.classes[entry["class_id"]]
            upper = np.triu(state.edges, k=1)
            assert len(entry["edges"]) == int(np.count_nonzero(upper))

    def test_round_trip_exact_values(self, rng):
        model, _ = trained_model(rng)
        doc = export_topology(model)
        parsed = json.loads(to_json(doc))
        assert parsed == json.loads(to_json(parsed))
        for entry, reparsed in zip(doc["classes"], parsed["classes"]):
            for node_a, node_b in zip(entry["nodes"], reparsed["nodes"]):
                assert node_a["centroid"] == node_b["centroid"]
                assert node_a["radius"] == node_b["radius"]

    def test_empty_model_rejected(self):
        with pytest.raises(EmptyModel):
            export_topology(PrototypeClassifier())


class TestRulesDocument:
    def test_document_shape(self, rng):
        model, _ = trained_model(rng, n_per_class=10, n_classes=2)
        doc = rules_to_document(extract_rules(model))
        assert doc["schema_version"] == 1
        kinds = {r["kind"] for r in doc["rules"]}
        assert kinds == {"prototype", "class"}
        text = json.dumps(doc)
        assert "THEN (class is" in text
