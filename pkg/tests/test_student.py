from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incore.coreg import CoRegulationState
from incore.core import CRS_STRATEGIES, ActiveConflict, ValidationError
from incore.student import (
    StudentPsyche,
    StudentStatus,
    generate_behavior,
    load_repertoire,
    serialize_repertoire,
    update_status,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def coreg_with(relationship: float) -> CoRegulationState:
    return CoRegulationState(relationship, 0.0, "compromising", 0.5, relationship)


def test_forcing_escalates_by_default_table(config):
    status = StudentStatus(0.5, 0.0, 0.5)
    updated = update_status(status, "forcing", coreg_with(0.5), StudentPsyche(), config)
    assert updated.escalation == pytest.approx(0.7)


def test_deescalation_clamps_at_floor(config):
    status = StudentStatus(0.5, 0.0, 0.0)
    for strategy in ("smoothing", "problem-solving", "compromising"):
        updated = update_status(status, strategy, coreg_with(0.5), StudentPsyche(), config)
        assert updated.escalation == 0.0


def test_problem_solving_example(config):
    status = StudentStatus(0.5, 0.0, 0.3)
    updated = update_status(
        status, "problem-solving", coreg_with(0.5), StudentPsyche(), config
    )
    assert updated.escalation == pytest.approx(0.15)
    assert updated.task == pytest.approx(0.1)


def test_task_gain_requires_low_escalation(config):
    status = StudentStatus(0.5, 0.0, 0.9)
    updated = update_status(
        status, "problem-solving", coreg_with(0.5), StudentPsyche(), config
    )
    assert updated.escalation == pytest.approx(0.75)
    assert updated.task == 0.0


def test_relationship_mirrors_coreg(config):
    status = StudentStatus(0.2, 0.0, 0.5)
    updated = update_status(status, "smoothing", coreg_with(0.8), StudentPsyche(), config)
    assert updated.relationship == 0.8


def test_reactivity_scales_changes(config):
    status = StudentStatus(0.5, 0.0, 0.5)
    calm = StudentPsyche(reactivity=0.5)
    updated = update_status(status, "forcing", coreg_with(0.5), calm, config)
    assert updated.escalation == pytest.approx(0.6)


@settings(max_examples=200)
@given(unit, st.sampled_from(CRS_STRATEGIES), unit)
def test_status_stays_in_bounds(config, escalation, strategy, relationship):
    status = StudentStatus(0.5, 0.5, escalation)
    updated = update_status(
        status, strategy, coreg_with(relationship), StudentPsyche(), config
    )
    for value in (updated.relationship, updated.task, updated.escalation):
        assert 0.0 <= value <= 1.0


@given(unit)
def test_monotone_pressure(config, escalation):
    status = StudentStatus(0.5, 0.0, escalation)
    forced = update_status(status, "forcing", coreg_with(0.5), StudentPsyche(), config)
    solved = update_status(
        status, "problem-solving", coreg_with(0.5), StudentPsyche(), config
    )
    assert forced.escalation >= escalation
    assert solved.escalation <= escalation


@given(unit, st.floats(min_value=0.05, max_value=1.0, allow_nan=False))
def test_sustained_problem_solving_reaches_zero_within_bound(config, start, reactivity):
    psyche = StudentPsyche(reactivity=reactivity)
    step = reactivity * abs(config.escalation_effects["problem-solving"])
    bound = math.ceil(1.0 / step)
    status = StudentStatus(0.5, 0.0, start)
    for _ in range(bound):
        status = update_status(status, "problem-solving", coreg_with(0.5), psyche, config)
    assert status.escalation == 0.0


def test_sustained_forcing_reaches_one_within_bound(config):
    step = config.escalation_effects["forcing"]
    bound = math.ceil(1.0 / step)
    status = StudentStatus(0.5, 0.0, 0.0)
    for _ in range(bound):
        status = update_status(status, "forcing", coreg_with(0.5), StudentPsyche(), config)
    assert status.escalation == 1.0


def test_behavior_high_escalation_low_relationship(repertoire):
    behavior = generate_behavior(
        StudentStatus(0.2, 0.0, 0.9), StudentPsyche(), repertoire
    )
    assert behavior.utterance_tag == "defiant_refusal"
    assert behavior.animation_tag == "look_away"
    assert behavior.intensity == pytest.approx(0.9)


def test_behavior_best_case_corner(repertoire):
    behavior = generate_behavior(
        StudentStatus(1.0, 0.0, 0.0), StudentPsyche(), repertoire
    )
    assert behavior.utterance_tag == "comply_engaged"
    assert behavior.animation_tag == "put_phone_away"
    assert behavior.intensity == pytest.approx(1.0)


@given(unit, unit)
def test_behavior_deterministic(repertoire, escalation, relationship):
    status = StudentStatus(relationship, 0.0, escalation)
    assert generate_behavior(status, StudentPsyche(), repertoire) == generate_behavior(
        status, StudentPsyche(), repertoire
    )


def test_behavior_missing_repertoire_key(repertoire):
    other = StudentPsyche(conflict=ActiveConflict("K6", "passive"))
    with pytest.raises(ValidationError, match="no entry"):
        generate_behavior(StudentStatus(0.5, 0.0, 0.5), other, repertoire)


def test_repertoire_round_trip(repertoire):
    reloaded = load_repertoire(serialize_repertoire(repertoire))
    assert reloaded.cells == repertoire.cells


def test_repertoire_rejects_bad_band():
    with pytest.raises(ValidationError, match="unknown escalation band"):
        load_repertoire({"conflicts": {"K2-active": {"extreme": {}}}})


def test_psyche_reactivity_bounds():
    with pytest.raises(ValidationError):
        StudentPsyche(reactivity=0.0)
    with pytest.raises(ValidationError):
        StudentPsyche(reactivity=1.5)
