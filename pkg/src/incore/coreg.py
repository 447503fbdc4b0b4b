"""Co-regulation interpretation: relationship dynamics and strategy readout.

The lead affect moves the relationship level; the relationship level feeds
concern-for-other and the norm-derived task focus feeds concern-for-self.
The dual-concern classifier turns the two concerns into one of the five
conflict-resolution strategies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import MappingConfig
from .core import LeadAffect, ValidationError, band, check_strategy, clamp
from .norms import RankedObligations

# Dual-concern prototype points as (concern_self, concern_other).
_PROTOTYPES = {
    "problem-solving": (1.0, 1.0),
    "forcing": (1.0, 0.0),
    "smoothing": (0.0, 1.0),
    "withdrawing": (0.0, 0.0),
    "compromising": (0.5, 0.5),
}

# Tie order for equidistant prototypes.
_TIE_ORDER = ("problem-solving", "compromising", "smoothing", "forcing", "withdrawing")

# Band pairs with a named strategy; everything else falls back to the
# nearest prototype in Chebyshev distance.
_BAND_RULES = {
    ("high", "high"): "problem-solving",
    ("high", "low"): "forcing",
    ("low", "high"): "smoothing",
    ("low", "low"): "withdrawing",
    ("mid", "mid"): "compromising",
}


@dataclass(frozen=True)
class CoRegulationState:
    """Relationship/task levels plus the current strategy readout."""

    relationship: float
    task: float
    strategy: str
    concern_self: float
    concern_other: float

    def __post_init__(self):
        check_strategy(self.strategy)
        for name in ("relationship", "task", "concern_self", "concern_other"):
            object.__setattr__(self, name, clamp(float(getattr(self, name))))

    def to_dict(self) -> dict:
        return {
            "relationship": self.relationship,
            "task": self.task,
            "strategy": self.strategy,
            "concern_self": self.concern_self,
            "concern_other": self.concern_other,
        }


def relationship_delta(lead: LeadAffect, config: MappingConfig) -> float:
    """Relationship change carried by a lead affect, scaled by intensity."""
    delta = config.lead_to_relationship_delta.get(lead.label)
    if delta is None:
        raise ValidationError(
            f"lead_to_relationship_delta has no entry for {lead.label!r}"
        )
    return delta * lead.intensity


def crs_classify(
    concern_self: float, concern_other: float, config: MappingConfig
) -> str:
    """Classify a dual-concern pair into a strategy.

    The five labeled band pairs map directly; mixed pairs take the
    strategy whose prototype is nearest in Chebyshev distance, ties broken
    by a fixed order. Total and deterministic over [0,1] squared.
    """
    for name, value in (("concern_self", concern_self), ("concern_other", concern_other)):
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name} must be in [0,1], got {value}")
    low, high = config.crs_thresholds
    bands = (band(concern_self, low, high), band(concern_other, low, high))
    named = _BAND_RULES.get(bands)
    if named is not None:
        return named
    best = None
    best_distance = None
    for strategy in _TIE_ORDER:
        proto_self, proto_other = _PROTOTYPES[strategy]
        distance = max(abs(concern_self - proto_self), abs(concern_other - proto_other))
        if best_distance is None or distance < best_distance:
            best, best_distance = strategy, distance
    return best


def interpret_coregulation(
    prev: CoRegulationState,
    lead: LeadAffect,
    ranked: RankedObligations,
    config: MappingConfig,
) -> CoRegulationState:
    """Advance the co-regulation state by one turn.

    The new relationship level (clamped) becomes concern-for-other, the
    turn's task focus becomes concern-for-self; the task level itself is
    carried forward untouched (only student task events move it).
    """
    relationship = clamp(prev.relationship + relationship_delta(lead, config))
    concern_self = ranked.task_focus
    concern_other = relationship
    strategy = crs_classify(concern_self, concern_other, config)
    state = CoRegulationState(
        relationship=relationship,
        task=prev.task,
        strategy=strategy,
        concern_self=concern_self,
        concern_other=concern_other,
    )
    # Internal consistency is part of the type's contract.
    assert state.strategy == crs_classify(
        state.concern_self, state.concern_other, config
    )
    return state


def initial_coregulation_state(
    relationship: float, task: float, config: MappingConfig
) -> CoRegulationState:
    """Starting state before any turn: no task focus yet."""
    concern_self = 0.0
    concern_other = clamp(relationship)
    return CoRegulationState(
        relationship=relationship,
        task=task,
        strategy=crs_classify(concern_self, concern_other, config),
        concern_self=concern_self,
        concern_other=concern_other,
    )
