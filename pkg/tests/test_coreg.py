from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incore.coreg import (
    CoRegulationState,
    crs_classify,
    initial_coregulation_state,
    interpret_coregulation,
    relationship_delta,
)
from incore.core import CRS_STRATEGIES, LeadAffect, ValidationError
from incore.norms import RankedObligations


def ranked(task_focus: float) -> RankedObligations:
    return RankedObligations(ranking=(), most_important=None, task_focus=task_focus)


unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_delta_zero_intensity_annihilates(config):
    assert relationship_delta(LeadAffect("affectless-neutral", 0.0), config) == 0.0


def test_delta_lookup_at_full_intensity(config):
    assert config.lead_to_relationship_delta["anger-rage"] == -0.15
    assert relationship_delta(LeadAffect("anger-rage", 1.0), config) == -0.15


@given(st.sampled_from(["anger-rage", "pride-joy", "shame"]), unit)
def test_delta_is_linear_in_intensity(config, label, intensity):
    full = relationship_delta(LeadAffect(label, 1.0), config)
    assert relationship_delta(LeadAffect(label, intensity), config) == pytest.approx(
        full * intensity
    )
    half = relationship_delta(LeadAffect(label, intensity / 2), config)
    assert half == pytest.approx(relationship_delta(LeadAffect(label, intensity), config) / 2)


def test_prototype_corners(config):
    assert crs_classify(1.0, 1.0, config) == "problem-solving"
    assert crs_classify(0.0, 0.0, config) == "withdrawing"
    assert crs_classify(0.5, 0.5, config) == "compromising"
    assert crs_classify(1.0, 0.0, config) == "forcing"
    assert crs_classify(0.0, 1.0, config) == "smoothing"


def test_band_rule_examples(config):
    # (high self, mid other) resolves by Chebyshev-nearest prototype.
    assert crs_classify(0.9, 0.35, config) == "forcing"
    # mid/mid stays compromising across the whole central band
    assert crs_classify(0.34, 0.66, config) == "compromising"
    assert crs_classify(0.6, 0.4, config) == "compromising"


def test_classify_rejects_out_of_range(config):
    with pytest.raises(ValidationError):
        crs_classify(-0.1, 0.5, config)
    with pytest.raises(ValidationError):
        crs_classify(0.5, 1.1, config)


def test_grid_totality_and_coverage(config):
    seen = set()
    for i in range(101):
        for j in range(101):
            seen.add(crs_classify(i / 100, j / 100, config))
    assert seen == set(CRS_STRATEGIES)


@given(unit, unit)
def test_classify_deterministic_and_total(config, cs, co):
    assert crs_classify(cs, co, config) == crs_classify(cs, co, config)
    assert crs_classify(cs, co, config) in CRS_STRATEGIES


def test_band_interior_stability(config):
    # any two points inside the same named band pair classify identically
    low, high = config.crs_thresholds
    for points, expected in [
        ([(0.8, 0.9), (0.99, 0.7)], "problem-solving"),
        ([(0.1, 0.2), (0.3, 0.0)], "withdrawing"),
        ([(0.4, 0.5), (0.55, 0.45)], "compromising"),
    ]:
        for cs, co in points:
            assert crs_classify(cs, co, config) == expected


def test_interpret_example_forcing(config):
    prev = CoRegulationState(0.5, 0.0, "compromising", 0.5, 0.5)
    state = interpret_coregulation(
        prev, LeadAffect("anger-rage", 1.0), ranked(0.9), config
    )
    assert state.relationship == pytest.approx(0.35)
    assert state.concern_self == 0.9
    assert state.concern_other == pytest.approx(0.35)
    assert state.strategy == "forcing"
    assert state.task == prev.task


def test_interpret_clamps_at_ceiling(config):
    prev = CoRegulationState(1.0, 0.2, "compromising", 0.5, 1.0)
    state = interpret_coregulation(
        prev, LeadAffect("pride-joy", 1.0), ranked(0.5), config
    )
    assert state.relationship == 1.0


def test_interpret_zero_delta_midpoint(config):
    prev = CoRegulationState(0.5, 0.0, "compromising", 0.5, 0.5)
    state = interpret_coregulation(
        prev, LeadAffect("anger-rage", 0.0), ranked(0.5), config
    )
    assert state.relationship == 0.5
    assert state.strategy == "compromising"
    assert state.task == prev.task


@settings(max_examples=200)
@given(
    unit,
    st.sampled_from(
        ["anger-rage", "defiance", "pride-joy", "shame", "affectless-neutral"]
    ),
    unit,
    unit,
)
def test_relationship_always_clamped(config, prev_rel, label, intensity, task_focus):
    prev = initial_coregulation_state(prev_rel, 0.0, config)
    state = interpret_coregulation(
        prev, LeadAffect(label, intensity), ranked(task_focus), config
    )
    assert 0.0 <= state.relationship <= 1.0
    # internal consistency invariant
    assert state.strategy == crs_classify(state.concern_self, state.concern_other, config)


def test_state_construction_validates_strategy():
    with pytest.raises(ValidationError):
        CoRegulationState(0.5, 0.5, "winning", 0.5, 0.5)
