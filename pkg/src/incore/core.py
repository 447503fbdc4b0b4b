"""Shared domain types for the co-regulation engine.

Everything here is an immutable value object. The closed enumerations
(OCC emotion labels, conflict codes, conflict modes, strategies) live as
module constants; the lead-affect inventory is configurable and therefore
owned by the mapping config (see config.py), not fixed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class IncoreError(Exception):
    """Base class for engine errors."""


class ValidationError(IncoreError):
    """An artifact, payload, or argument failed validation."""


class PhaseError(IncoreError):
    """A session operation was attempted outside its allowed phase."""


class ReplayError(IncoreError):
    """Base class for event-log replay failures."""


class MalformedLogError(ReplayError):
    """The event log is not well-formed (parse error, bad sequence, bad schema)."""


class VersionMismatchError(ReplayError):
    """The supplied artifacts do not hash to the log's config version."""


class DivergenceError(ReplayError):
    """Replay recomputed an engine event that differs from the logged one."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"divergence at seq {seq}: {message}")
        self.seq = seq


# The 24 OCC appraisal categories the PAD mapper can emit.
OCC_LABELS = (
    "admiration",
    "anger",
    "disappointment",
    "disliking",
    "distress",
    "fear",
    "fears-confirmed",
    "gloating",
    "gratification",
    "gratitude",
    "happy-for",
    "hate",
    "hope",
    "joy",
    "liking",
    "love",
    "pity",
    "pride",
    "relief",
    "remorse",
    "reproach",
    "resentment",
    "satisfaction",
    "shame",
)

CONFLICT_CODES = ("K0", "K1", "K2", "K3", "K4", "K5", "K6", "K7")
CONFLICT_MODES = ("active", "passive", "none")

# Dual-concern strategies, closed five-element set.
CRS_STRATEGIES = (
    "smoothing",
    "forcing",
    "compromising",
    "withdrawing",
    "problem-solving",
)

# Default lead-affect inventory. Configurable: the config's tie_priority
# list is the authoritative enumeration for a loaded config.
DEFAULT_LEAD_AFFECTS = (
    "anger-rage",
    "defiance",
    "anxiety-fear",
    "sadness-grief",
    "shame",
    "guilt",
    "pride-joy",
    "helplessness",
    "contempt-disgust",
    "affectless-neutral",
)

# Lead label every config must keep: empty turns resolve to it.
NEUTRAL_LEAD = "affectless-neutral"

# Band thresholds shared by strategy classification and behavior lookup.
BAND_LOW = 1.0 / 3.0
BAND_HIGH = 2.0 / 3.0


def band(value: float, low: float = BAND_LOW, high: float = BAND_HIGH) -> str:
    """Classify a [0,1] value into low / mid / high.

    low is [0, low), mid is [low, high], high is (high, 1].
    """
    if value < low:
        return "low"
    if value <= high:
        return "mid"
    return "high"


def clamp(value: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return max(lo, min(hi, value))


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must be in [0,1], got {value!r}")
    return value


@dataclass(frozen=True)
class PadPoint:
    """A point in pleasure-arousal-dominance space.

    Components are clamped to [-1,1] at construction; NaN is rejected.
    """

    pleasure: float
    arousal: float
    dominance: float

    def __post_init__(self):
        for name in ("pleasure", "arousal", "dominance"):
            raw = float(getattr(self, name))
            if math.isnan(raw):
                raise ValidationError(f"PadPoint.{name} is NaN")
            object.__setattr__(self, name, clamp(raw, -1.0, 1.0))

    def distance(self, other: "PadPoint") -> float:
        return math.sqrt(
            (self.pleasure - other.pleasure) ** 2
            + (self.arousal - other.arousal) ** 2
            + (self.dominance - other.dominance) ** 2
        )

    def to_dict(self) -> dict:
        return {
            "pleasure": self.pleasure,
            "arousal": self.arousal,
            "dominance": self.dominance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PadPoint":
        try:
            return cls(data["pleasure"], data["arousal"], data["dominance"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad PAD payload: {data!r}") from exc


@dataclass(frozen=True)
class OccEmotion:
    """A categorical OCC emotion with intensity in [0,1]."""

    label: str
    intensity: float

    def __post_init__(self):
        if self.label not in OCC_LABELS:
            raise ValidationError(f"unknown OCC label {self.label!r}")
        object.__setattr__(self, "intensity", _check_unit("intensity", self.intensity))

    def to_dict(self) -> dict:
        return {"label": self.label, "intensity": self.intensity}

    @classmethod
    def from_dict(cls, data: dict) -> "OccEmotion":
        try:
            return cls(data["label"], data["intensity"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad OCC payload: {data!r}") from exc


@dataclass(frozen=True)
class EmotionEvent:
    """One affect observation inside a turn.

    occ stays None for raw PAD observations and is filled by the PAD->OCC
    mapper; operator-injected events may carry occ from the start, in which
    case the mapper leaves them untouched.
    """

    turn_index: int
    sequence_index: int
    pad: PadPoint
    occ: OccEmotion | None = None
    source_tag: str = ""

    def __post_init__(self):
        if self.turn_index < 0:
            raise ValidationError(f"turn_index must be >= 0, got {self.turn_index}")
        if self.sequence_index < 0:
            raise ValidationError(
                f"sequence_index must be >= 0, got {self.sequence_index}"
            )

    def with_occ(self, occ: OccEmotion) -> "EmotionEvent":
        return replace(self, occ=occ)


@dataclass(frozen=True)
class LeadAffect:
    """The dominant affect of a turn.

    The label set is configurable; membership is checked against the active
    config wherever a config is in scope, not at construction.
    """

    label: str
    intensity: float

    def __post_init__(self):
        if not self.label or not isinstance(self.label, str):
            raise ValidationError(f"bad lead-affect label {self.label!r}")
        object.__setattr__(self, "intensity", _check_unit("intensity", self.intensity))

    def to_dict(self) -> dict:
        return {"label": self.label, "intensity": self.intensity}


@dataclass(frozen=True)
class ConflictType:
    """An internal-conflict category with its display name."""

    code: str
    name: str

    def __post_init__(self):
        if self.code not in CONFLICT_CODES:
            raise ValidationError(f"unknown conflict code {self.code!r}")


@dataclass(frozen=True)
class ActiveConflict:
    """A conflict code with its modulation mode and engine confidence.

    Mode "none" is reserved for K0, which carries no active/passive
    modulation.
    """

    code: str
    mode: str
    confidence: float = 1.0

    def __post_init__(self):
        if self.code not in CONFLICT_CODES:
            raise ValidationError(f"unknown conflict code {self.code!r}")
        if self.mode not in CONFLICT_MODES:
            raise ValidationError(f"unknown conflict mode {self.mode!r}")
        if self.mode == "none" and self.code != "K0":
            raise ValidationError(f"mode 'none' is only valid for K0, got {self.code}")
        object.__setattr__(
            self, "confidence", _check_unit("confidence", self.confidence)
        )

    @property
    def key(self) -> str:
        """Stable 'K2-active' style identifier used in reports and tables."""
        return f"{self.code}-{self.mode}"

    def to_dict(self) -> dict:
        return {"code": self.code, "mode": self.mode, "confidence": self.confidence}

    @classmethod
    def from_dict(cls, data: dict) -> "ActiveConflict":
        try:
            return cls(data["code"], data["mode"], data.get("confidence", 1.0))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad conflict payload: {data!r}") from exc


def check_strategy(value: str) -> str:
    if value not in CRS_STRATEGIES:
        raise ValidationError(f"unknown strategy {value!r}")
    return value
