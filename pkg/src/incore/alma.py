"""PAD to OCC conversion by nearest centroid.

Each OCC category owns a configured PAD centroid; an observation maps to
the category whose centroid is closest in Euclidean distance, with
intensity falling off linearly in that distance. Ties go to the
lexicographically smaller label so the mapping is a total deterministic
function of (point, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import MappingConfig
from .core import EmotionEvent, OccEmotion, PadPoint, ValidationError, clamp

# Diameter of the PAD cube [-1,1]^3; distance d maps to intensity
# 1 - d / PAD_DIAMETER, so intensity 1 happens exactly at the centroid.
PAD_DIAMETER = 2.0 * math.sqrt(3.0)


@dataclass(frozen=True)
class OccMappingResult:
    """Chosen OCC category plus the PAD distance that produced it."""

    occ: OccEmotion
    distance: float


def pad_to_occ(pad: PadPoint, config: MappingConfig) -> OccMappingResult:
    """Map a PAD point to the nearest configured OCC centroid."""
    best_label: str | None = None
    best_distance = math.inf
    for label in sorted(config.occ_centroids):
        distance = pad.distance(config.occ_centroids[label])
        if distance < best_distance:
            best_label = label
            best_distance = distance
    if best_label is None:
        raise ValidationError("config has no OCC centroids")
    intensity = clamp(1.0 - best_distance / PAD_DIAMETER)
    return OccMappingResult(OccEmotion(best_label, intensity), best_distance)


def annotate_turn(
    events: Sequence[EmotionEvent], config: MappingConfig
) -> list[EmotionEvent]:
    """Fill the OCC slot of every raw event in one turn.

    Events that already carry an OCC value (operator-injected) pass through
    untouched; order is preserved. All events must belong to one turn.
    """
    turns = {event.turn_index for event in events}
    if len(turns) > 1:
        raise ValidationError(f"events span multiple turns: {sorted(turns)}")
    annotated = []
    for event in events:
        if event.occ is None:
            event = event.with_occ(pad_to_occ(event.pad, config).occ)
        annotated.append(event)
    return annotated
