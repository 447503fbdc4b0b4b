from __future__ import annotations

import dataclasses

import pytest

from incore.config import default_config, load_config, serialize_config, validate_config
from incore.core import (
    DEFAULT_LEAD_AFFECTS,
    OCC_LABELS,
    ActiveConflict,
    OccEmotion,
    PadPoint,
    ValidationError,
)


def test_default_config_is_valid(config):
    assert validate_config(config) == []


def test_empty_document_yields_defaults():
    assert serialize_config(load_config(None)) == serialize_config(load_config({}))
    assert serialize_config(load_config("")) == serialize_config(default_config())


def test_default_covers_all_occ_labels(config):
    assert set(config.occ_centroids) == set(OCC_LABELS)
    assert set(config.occ_to_lead) == set(OCC_LABELS)
    assert set(config.tie_priority) == set(DEFAULT_LEAD_AFFECTS)


def test_default_centroids_are_pairwise_distinct(config):
    points = [
        (p.pleasure, p.arousal, p.dominance) for p in config.occ_centroids.values()
    ]
    assert len(set(points)) == len(points)


def test_threshold_ordering_violation_rejected():
    with pytest.raises(ValidationError, match="low < high"):
        load_config({"crs_thresholds": {"low": 0.5, "high": 0.4}})
    with pytest.raises(ValidationError):
        load_config({"crs_thresholds": [0.5, 0.4]})


def test_lead_to_conflict_override_round_trips():
    config = load_config(
        {"lead_to_conflict": {"defiance": {"code": "K2", "mode": "active", "confidence": 1.0}}}
    )
    assert config.lead_to_conflict["defiance"] == ActiveConflict("K2", "active", 1.0)
    # tuple-style spelling parses to the same triple
    config2 = load_config({"lead_to_conflict": {"defiance": ["K2", "active", 1.0]}})
    assert config2.lead_to_conflict["defiance"] == ActiveConflict("K2", "active", 1.0)


def test_serialization_round_trip_is_stable():
    documents = [
        None,
        {"epsilon_tie": 0.1},
        {"lead_to_relationship_delta": {"defiance": -0.2}},
        {"norm_weights": [{"norm": "x", "conflict": "K1", "mode": "passive", "weight": 0.5}]},
    ]
    for document in documents:
        once = serialize_config(load_config(document))
        twice = serialize_config(load_config(once))
        assert once == twice


def test_missing_map_entry_reported_by_name(config):
    occ_to_lead = dict(config.occ_to_lead)
    del occ_to_lead["remorse"]
    broken = dataclasses.replace(config, occ_to_lead=occ_to_lead)
    violations = validate_config(broken)
    assert len(violations) == 1
    assert "remorse" in violations[0]


def test_negative_norm_weight_reported(config):
    weights = dict(config.norm_weights)
    weights[("no_phone_in_class", "K2", "active")] = -1.0
    broken = dataclasses.replace(config, norm_weights=weights)
    violations = validate_config(broken)
    assert len(violations) == 1
    assert "negative" in violations[0]


def test_new_lead_label_requires_full_coverage():
    with pytest.raises(ValidationError, match="brooding"):
        load_config({"tie_priority": list(DEFAULT_LEAD_AFFECTS) + ["brooding"]})


def test_neutral_lead_is_mandatory():
    labels = [label for label in DEFAULT_LEAD_AFFECTS if label != "affectless-neutral"]
    with pytest.raises(ValidationError, match="affectless-neutral"):
        load_config({"tie_priority": labels})


def test_delta_range_enforced():
    with pytest.raises(ValidationError, match="outside"):
        load_config({"lead_to_relationship_delta": {"defiance": -0.5}})


def test_norm_weight_entry_validation():
    with pytest.raises(ValidationError, match="unknown conflict"):
        load_config({"norm_weights": [{"norm": "x", "conflict": "K9", "mode": "active", "weight": 1.0}]})
    with pytest.raises(ValidationError, match=">= 0"):
        load_config({"norm_weights": [{"norm": "x", "conflict": "K2", "mode": "active", "weight": -2.0}]})


def test_closed_value_types():
    with pytest.raises(ValidationError):
        OccEmotion("boredom", 0.5)
    with pytest.raises(ValidationError):
        OccEmotion("joy", 1.5)
    with pytest.raises(ValidationError):
        PadPoint(float("nan"), 0.0, 0.0)
    with pytest.raises(ValidationError):
        ActiveConflict("K9", "active")
    with pytest.raises(ValidationError):
        ActiveConflict("K1", "none")
    # PAD components clamp instead of raising
    point = PadPoint(2.0, -3.0, 0.25)
    assert (point.pleasure, point.arousal, point.dominance) == (1.0, -1.0, 0.25)


def test_default_routing_stays_in_reported_conflict_rows(config):
    reported = {
        ("K1", "passive"),
        ("K2", "active"),
        ("K3", "passive"),
        ("K3", "active"),
        ("K4", "passive"),
        ("K6", "passive"),
        ("K6", "active"),
        ("K0", "none"),
    }
    for label in config.tie_priority:
        conflict = config.lead_to_conflict[label]
        assert (conflict.code, conflict.mode) in reported or conflict.code in ("K5", "K7")
