"""Deterministic turn-based co-regulation engine.

Interprets per-turn affect and social-norm signals into a lead affect, an
internal conflict, a subjective obligation ranking, and a conflict-
resolution strategy that drives a virtual-student behavior model; ships
with event-sourced sessions, a session service, a CLI, and annotation
analytics.
"""

from .config import MappingConfig, default_config, load_config, serialize_config, validate_config
from .core import (
    ActiveConflict,
    ConflictType,
    DivergenceError,
    EmotionEvent,
    IncoreError,
    LeadAffect,
    OccEmotion,
    PadPoint,
    PhaseError,
    ValidationError,
    VersionMismatchError,
)
from .norms import NormEvent, NormTaxonomy, RankedObligations, load_norms
from .session import Session, SessionArtifacts, replay_events, replay_file, start_session
from .student import StudentBehavior, StudentPsyche, StudentStatus, load_repertoire

__version__ = "0.1.0"

__all__ = [
    "ActiveConflict",
    "ConflictType",
    "DivergenceError",
    "EmotionEvent",
    "IncoreError",
    "LeadAffect",
    "MappingConfig",
    "NormEvent",
    "NormTaxonomy",
    "OccEmotion",
    "PadPoint",
    "PhaseError",
    "RankedObligations",
    "Session",
    "SessionArtifacts",
    "StudentBehavior",
    "StudentPsyche",
    "StudentStatus",
    "ValidationError",
    "VersionMismatchError",
    "default_config",
    "load_config",
    "load_norms",
    "load_repertoire",
    "replay_events",
    "replay_file",
    "serialize_config",
    "start_session",
    "validate_config",
]
