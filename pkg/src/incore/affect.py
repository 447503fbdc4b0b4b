"""Situative affect interpretation for a finished turn.

The emotion filter keeps, per OCC category, the strongest observation of
the turn and then retains every category within the tie band of the
global maximum. The surviving categories project onto lead-affect labels;
priority order settles disagreements, and the lead affect routes to an
internal conflict through the config table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .config import MappingConfig
from .core import (
    NEUTRAL_LEAD,
    ActiveConflict,
    EmotionEvent,
    LeadAffect,
    OccEmotion,
    ValidationError,
)


@dataclass(frozen=True)
class TurnAffectSummary:
    """Lead affect, its contributing emotions, and the derived conflict.

    contributing_occ is empty only for the empty-turn case, where the lead
    affect falls back to the neutral label by convention.
    """

    lead_affect: LeadAffect
    contributing_occ: tuple[OccEmotion, ...]
    conflict: ActiveConflict


def emotion_filter(
    events: Sequence[EmotionEvent], config: MappingConfig
) -> list[OccEmotion]:
    """Strongest emotion(s) of a turn.

    Keeps the per-label maximum intensity, then every label whose maximum
    is within epsilon_tie of the global maximum. Result is sorted by
    intensity descending, label ascending; empty input gives [].
    """
    per_label: dict[str, float] = {}
    for event in events:
        if event.occ is None:
            raise ValidationError(
                f"event {event.sequence_index} in turn {event.turn_index} "
                "has no OCC annotation"
            )
        current = per_label.get(event.occ.label)
        if current is None or event.occ.intensity > current:
            per_label[event.occ.label] = event.occ.intensity
    if not per_label:
        return []
    strongest = max(per_label.values())
    kept = [
        OccEmotion(label, intensity)
        for label, intensity in per_label.items()
        if intensity >= strongest - config.epsilon_tie
    ]
    kept.sort(key=lambda occ: (-occ.intensity, occ.label))
    return kept


def determine_lead_affect(
    filtered: Sequence[OccEmotion], config: MappingConfig
) -> LeadAffect:
    """Project filtered emotions onto a single lead affect.

    Candidate lead labels come from the occ_to_lead table; with several
    distinct candidates the first by tie_priority wins, and its intensity
    is the maximum over the emotions that project onto it. No emotions at
    all resolve to the neutral label at intensity 0.
    """
    if not filtered:
        return LeadAffect(NEUTRAL_LEAD, 0.0)
    candidates: dict[str, float] = {}
    for occ in filtered:
        lead_label = config.occ_to_lead.get(occ.label)
        if lead_label is None:
            raise ValidationError(f"occ_to_lead has no entry for {occ.label!r}")
        candidates[lead_label] = max(candidates.get(lead_label, 0.0), occ.intensity)
    for label in config.tie_priority:
        if label in candidates:
            return LeadAffect(label, candidates[label])
    raise ValidationError(
        f"no candidate lead affect appears in tie_priority: {sorted(candidates)}"
    )


def derive_conflict(lead: LeadAffect, config: MappingConfig) -> ActiveConflict:
    """Route a lead affect to its internal conflict.

    Confidence is the configured mapping confidence scaled by the lead
    intensity.
    """
    base = config.lead_to_conflict.get(lead.label)
    if base is None:
        raise ValidationError(f"lead_to_conflict has no entry for {lead.label!r}")
    return ActiveConflict(base.code, base.mode, base.confidence * lead.intensity)


def summarize_turn(
    annotated_events: Sequence[EmotionEvent], config: MappingConfig
) -> TurnAffectSummary:
    """Run filter, lead determination, and conflict derivation in order."""
    filtered = emotion_filter(annotated_events, config)
    lead = determine_lead_affect(filtered, config)
    conflict = derive_conflict(lead, config)
    return TurnAffectSummary(lead, tuple(filtered), conflict)
