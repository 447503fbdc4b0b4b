"""Per-session turn lifecycle, interpretation pipeline, and replay.

A session owns the teacher-side co-regulation state and the student state,
collects input events during a turn, and runs the fixed pipeline when the
turn ends: annotate -> filter -> lead affect -> conflict -> obligation
ranking -> co-regulation -> student status -> behavior. Every effect is
recorded in an append-only event log; replaying the log against the same
artifacts reproduces every engine-emitted event byte for byte, which is
both the persistence format and the integrity check.

Turn lifecycle: events are collected while the phase is "collecting"; a
turn_end runs the pipeline. Automated sessions commit immediately (the
committed phase is passed through, the next turn opens right away); WoZ
sessions park in "awaiting_override_window" until commit, accepting
overrides of the lead affect, the conflict, or the student behavior, each
of which recomputes the downstream stages and appends revised events.
"""

from __future__ import annotations

import hashlib
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .affect import TurnAffectSummary, derive_conflict, summarize_turn
from .alma import annotate_turn
from .config import MappingConfig, load_config
from .coreg import CoRegulationState, initial_coregulation_state, interpret_coregulation
from .core import (
    ActiveConflict,
    DivergenceError,
    EmotionEvent,
    LeadAffect,
    MalformedLogError,
    OccEmotion,
    PadPoint,
    PhaseError,
    ValidationError,
    VersionMismatchError,
)
from .eventlog import (
    ENGINE_KINDS,
    INPUT_KINDS,
    LOG_SCHEMA,
    SessionEvent,
    canonical_json,
    canonical_line,
    parse_log,
    read_log,
)
from .norms import NormEvent, NormTaxonomy, RankedObligations, interpret_norms, load_norms
from .student import (
    BehaviorRepertoire,
    StudentBehavior,
    StudentPsyche,
    StudentStatus,
    generate_behavior,
    load_repertoire,
    update_status,
)

SESSION_MODES = ("automated", "woz")
PHASES = ("collecting", "interpreted", "awaiting_override_window", "committed")
OVERRIDE_TARGETS = ("lead_affect", "conflict", "student_behavior")

# Opening scene: neutral relationship, no task progress, a student already
# acting out (mid-high escalation) so the teacher reacts first.
INITIAL_RELATIONSHIP = 0.5
INITIAL_TASK = 0.0
INITIAL_ESCALATION = 0.6


@dataclass(frozen=True)
class SessionArtifacts:
    """The three validated artifacts a session runs against, plus their hash."""

    config: MappingConfig
    taxonomy: NormTaxonomy
    repertoire: BehaviorRepertoire
    version: str = field(init=False)

    def __post_init__(self):
        digest = hashlib.sha256(
            canonical_json(
                [
                    self.config.to_dict(),
                    self.taxonomy.to_dict(),
                    self.repertoire.to_dict(),
                ]
            ).encode("utf-8")
        ).hexdigest()[:16]
        object.__setattr__(self, "version", digest)

    @classmethod
    def load(
        cls,
        config_source: Any = None,
        norms_source: Any = None,
        repertoire_source: Any = None,
    ) -> "SessionArtifacts":
        return cls(
            config=load_config(config_source),
            taxonomy=load_norms(norms_source),
            repertoire=load_repertoire(repertoire_source),
        )


@dataclass(frozen=True)
class TurnInterpretation:
    """Every stage output of one pipeline run, in pipeline order."""

    annotated: tuple[EmotionEvent, ...]
    summary: TurnAffectSummary
    ranked: RankedObligations
    coreg: CoRegulationState
    status: StudentStatus
    behavior: StudentBehavior

    def payload(self, inputs_digest: str) -> dict:
        return {
            "annotated": [
                {
                    "sequence_index": event.sequence_index,
                    "occ": event.occ.to_dict(),
                }
                for event in self.annotated
            ],
            "filtered": [occ.to_dict() for occ in self.summary.contributing_occ],
            "lead_affect": self.summary.lead_affect.to_dict(),
            "conflict": self.summary.conflict.to_dict(),
            "obligations": self.ranked.to_dict(),
            "coreg": self.coreg.to_dict(),
            "student_status": self.status.to_dict(),
            "inputs_digest": inputs_digest,
        }


class Session:
    """Single-writer session state machine over an append-only event log."""

    def __init__(
        self,
        artifacts: SessionArtifacts,
        mode: str = "automated",
        session_id: str | None = None,
        psyche: StudentPsyche | None = None,
    ):
        if mode not in SESSION_MODES:
            raise ValidationError(f"unknown session mode {mode!r}")
        self.artifacts = artifacts
        self.mode = mode
        self.session_id = session_id or uuid.uuid4().hex
        self.psyche = psyche or StudentPsyche()
        self.turn_index = 0
        self.phase = "collecting"
        self.coreg = initial_coregulation_state(
            INITIAL_RELATIONSHIP, INITIAL_TASK, artifacts.config
        )
        self.student = StudentStatus(
            INITIAL_RELATIONSHIP, INITIAL_TASK, INITIAL_ESCALATION
        )
        self.event_log: list[SessionEvent] = []
        self._turn_inputs: list[SessionEvent] = []
        self._turn_emotions: list[EmotionEvent] = []
        self._turn_norm_events: list[NormEvent] = []
        self._pending: TurnInterpretation | None = None
        self._overrides: dict[str, Any] = {}

        self._emit(
            "turn_start",
            {
                "schema": LOG_SCHEMA,
                "session_id": self.session_id,
                "mode": self.mode,
                "config_version": artifacts.version,
            },
        )
        opening = generate_behavior(self.student, self.psyche, artifacts.repertoire)
        self._emit("student_behavior", opening.to_dict())

    # ------------------------------------------------------------------
    # event plumbing

    def _emit(self, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(len(self.event_log), kind, self.turn_index, payload)
        self.event_log.append(event)
        if kind in INPUT_KINDS:
            self._turn_inputs.append(event)
        return event

    def _inputs_digest(self) -> str:
        # Covers the session identity and every input line of the turn so
        # far, so replay detects tampering even in fields the pipeline
        # never reads (utterance text, source tags, the log's session_id).
        parts = [self.session_id, self.mode]
        parts.extend(canonical_line(event) for event in self._turn_inputs)
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()

    def _require_phase(self, operation: str, *phases: str) -> None:
        if self.phase not in phases:
            raise PhaseError(
                f"{operation} requires phase {' or '.join(phases)}, "
                f"session is in {self.phase!r}"
            )

    # ------------------------------------------------------------------
    # input collection

    def append_event(self, kind: str, payload: dict) -> SessionEvent:
        """Log one collected input event (emotion, norm_event, teacher_utterance).

        Payloads are normalized (clamped, defaulted, order-assigned) before
        logging, so the log line is the engine's view of the input.
        """
        self._require_phase("append_event", "collecting")
        if kind == "emotion":
            normalized = self._parse_emotion(payload)
        elif kind == "norm_event":
            normalized = self._parse_norm_event(payload)
        elif kind == "teacher_utterance":
            normalized = self._parse_utterance(payload)
        else:
            raise ValidationError(f"append_event does not accept kind {kind!r}")
        return self._emit(kind, normalized)

    def _parse_emotion(self, payload: dict) -> dict:
        if not isinstance(payload, dict):
            raise ValidationError("emotion payload must be an object")
        allowed = {"pad", "occ", "source_tag", "sequence_index"}
        unknown = set(payload) - allowed
        if unknown:
            raise ValidationError(f"emotion payload has unknown fields {sorted(unknown)}")
        if "pad" not in payload:
            raise ValidationError("emotion payload needs a pad object")
        pad = PadPoint.from_dict(payload["pad"])
        occ = None
        if payload.get("occ") is not None:
            occ = OccEmotion.from_dict(payload["occ"])
        event = EmotionEvent(
            turn_index=self.turn_index,
            sequence_index=len(self._turn_emotions),
            pad=pad,
            occ=occ,
            source_tag=str(payload.get("source_tag", "")),
        )
        self._turn_emotions.append(event)
        return {
            "sequence_index": event.sequence_index,
            "pad": pad.to_dict(),
            "occ": occ.to_dict() if occ else None,
            "source_tag": event.source_tag,
        }

    def _parse_norm_event(self, payload: dict) -> dict:
        if not isinstance(payload, dict):
            raise ValidationError("norm_event payload must be an object")
        allowed = {"norm_id", "obligation_id", "status", "actor"}
        unknown = set(payload) - allowed
        if unknown:
            raise ValidationError(
                f"norm_event payload has unknown fields {sorted(unknown)}"
            )
        try:
            event = NormEvent(
                turn_index=self.turn_index,
                norm_id=str(payload["norm_id"]),
                obligation_id=str(payload["obligation_id"]),
                status=str(payload["status"]),
                actor=str(payload["actor"]),
            )
        except KeyError as exc:
            raise ValidationError(f"norm_event payload missing {exc}") from exc
        # Fail fast on unknown ids; resolution is also what interpretation does.
        self.artifacts.taxonomy.resolve(event.norm_id, event.obligation_id)
        self._turn_norm_events.append(event)
        return event.to_dict()

    def _parse_utterance(self, payload: dict) -> dict:
        if not isinstance(payload, dict) or set(payload) != {"text"}:
            raise ValidationError("teacher_utterance payload must be {'text': ...}")
        if not isinstance(payload["text"], str):
            raise ValidationError("teacher_utterance text must be a string")
        return {"text": payload["text"]}

    # ------------------------------------------------------------------
    # pipeline

    def _interpret(
        self,
        lead_override: LeadAffect | None = None,
        conflict_override: ActiveConflict | None = None,
    ) -> TurnInterpretation:
        config = self.artifacts.config
        annotated = annotate_turn(self._turn_emotions, config)
        summary = summarize_turn(annotated, config)
        lead = lead_override if lead_override is not None else summary.lead_affect
        if conflict_override is not None:
            conflict = conflict_override
        elif lead_override is not None:
            conflict = derive_conflict(lead, config)
        else:
            conflict = summary.conflict
        summary = TurnAffectSummary(lead, summary.contributing_occ, conflict)
        ranked = interpret_norms(
            self._turn_norm_events, conflict, self.artifacts.taxonomy, config
        )
        coreg = interpret_coregulation(self.coreg, lead, ranked, config)
        status = update_status(self.student, coreg.strategy, coreg, self.psyche, config)
        behavior = generate_behavior(status, self.psyche, self.artifacts.repertoire)
        return TurnInterpretation(
            annotated=tuple(annotated),
            summary=summary,
            ranked=ranked,
            coreg=coreg,
            status=status,
            behavior=behavior,
        )

    def _apply_override_table(self) -> TurnInterpretation:
        interp = self._interpret(
            lead_override=self._overrides.get("lead_affect"),
            conflict_override=self._overrides.get("conflict"),
        )
        behavior = self._overrides.get("student_behavior")
        if behavior is not None:
            interp = TurnInterpretation(
                annotated=interp.annotated,
                summary=interp.summary,
                ranked=interp.ranked,
                coreg=interp.coreg,
                status=interp.status,
                behavior=behavior,
            )
        return interp

    def end_turn(self) -> TurnInterpretation:
        """Close the collecting window and run the interpretation pipeline.

        Automated sessions commit the turn immediately and open the next
        one; WoZ sessions hold the result for the override window.
        """
        self._require_phase("end_turn", "collecting")
        self._emit("turn_end", {})
        self.phase = "interpreted"
        interp = self._interpret()
        self._emit("interpretation", interp.payload(self._inputs_digest()))
        self._emit("student_behavior", interp.behavior.to_dict())
        self._pending = interp
        if self.mode == "automated":
            self.phase = "committed"
            self._commit()
        else:
            self.phase = "awaiting_override_window"
        return interp

    def apply_override(self, target: str, value: dict) -> TurnInterpretation:
        """Replace one stage of the pending turn and recompute downstream.

        Overriding the lead affect re-derives conflict, ranking, strategy,
        status, and behavior; overriding the conflict re-runs from the
        ranking on; overriding the behavior swaps only the behavior.
        """
        if self.mode != "woz":
            raise PhaseError("overrides are only accepted in woz mode")
        self._require_phase("apply_override", "awaiting_override_window")
        if target not in OVERRIDE_TARGETS:
            raise ValidationError(
                f"override target {target!r} not in {OVERRIDE_TARGETS}"
            )
        resolved = self._parse_override(target, value)
        self._emit(
            "woz_override",
            {"target": target, "value": resolved["payload"]},
        )
        self._overrides[target] = resolved["value"]
        interp = self._apply_override_table()
        self._emit("interpretation", interp.payload(self._inputs_digest()))
        self._emit("student_behavior", interp.behavior.to_dict())
        self._pending = interp
        return interp

    def _parse_override(self, target: str, value: Any) -> dict:
        if not isinstance(value, dict):
            raise ValidationError("override value must be an object")
        assert self._pending is not None
        if target == "lead_affect":
            allowed = {"label", "intensity"}
            if not set(value) <= allowed or "label" not in value:
                raise ValidationError("lead_affect override needs {'label', 'intensity'?}")
            label = str(value["label"])
            if label not in self.artifacts.config.lead_labels:
                raise ValidationError(f"unknown lead-affect label {label!r}")
            intensity = value.get("intensity")
            if intensity is None:
                intensity = self._pending.summary.lead_affect.intensity
            lead = LeadAffect(label, float(intensity))
            return {"value": lead, "payload": lead.to_dict()}
        if target == "conflict":
            conflict = ActiveConflict.from_dict(value)
            return {"value": conflict, "payload": conflict.to_dict()}
        allowed = {"utterance_tag", "animation_tag", "intensity"}
        if not set(value) <= allowed or not {"utterance_tag", "animation_tag"} <= set(value):
            raise ValidationError(
                "student_behavior override needs utterance_tag and animation_tag"
            )
        utterance = str(value["utterance_tag"])
        animation = str(value["animation_tag"])
        repertoire = self.artifacts.repertoire
        if utterance not in repertoire.utterance_tags:
            raise ValidationError(f"utterance tag {utterance!r} not in repertoire")
        if animation not in repertoire.animation_tags:
            raise ValidationError(f"animation tag {animation!r} not in repertoire")
        intensity = value.get("intensity")
        if intensity is None:
            intensity = self._pending.behavior.intensity
        behavior = StudentBehavior(utterance, animation, float(intensity))
        return {"value": behavior, "payload": behavior.to_dict()}

    def commit_turn(self) -> None:
        """Finalize the pending turn and open the next collecting window."""
        self._require_phase("commit_turn", "awaiting_override_window", "interpreted")
        self.phase = "committed"
        self._commit()

    def _commit(self) -> None:
        assert self._pending is not None
        self.coreg = self._pending.coreg
        self.student = self._pending.status
        self._pending = None
        self._overrides = {}
        self.turn_index += 1
        self.phase = "collecting"
        self._turn_inputs = []
        self._turn_emotions = []
        self._turn_norm_events = []
        self._emit("turn_start", {})

    # ------------------------------------------------------------------
    # views

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "turn_index": self.turn_index,
            "phase": self.phase,
            "config_version": self.artifacts.version,
            "coreg": self.coreg.to_dict(),
            "student": self.student.to_dict(),
            "psyche": self.psyche.to_dict(),
            "event_count": len(self.event_log),
            "pending_override_window": self.phase == "awaiting_override_window",
        }

    @property
    def log_lines(self) -> list[str]:
        return [canonical_line(event) for event in self.event_log]


def start_session(
    artifacts: SessionArtifacts,
    mode: str = "automated",
    session_id: str | None = None,
    psyche: StudentPsyche | None = None,
) -> Session:
    """Create a fresh session; the opening student behavior is already logged."""
    return Session(artifacts, mode=mode, session_id=session_id, psyche=psyche)


# ----------------------------------------------------------------------
# replay


def replay_events(logged: Sequence[SessionEvent], artifacts: SessionArtifacts) -> Session:
    """Reconstruct a session from its log, verifying every engine event.

    Input events are re-applied through the normal operations; every event
    the engine emits (including the echo of normalized inputs) must match
    the logged line byte for byte, otherwise DivergenceError names the
    first differing sequence number.
    """
    if not logged:
        return start_session(artifacts, "automated")
    head = logged[0]
    if head.kind != "turn_start" or head.seq != 0 or head.turn != 0:
        raise MalformedLogError("log must open with turn_start for turn 0")
    meta = head.payload
    for key in ("schema", "session_id", "mode", "config_version"):
        if key not in meta:
            raise MalformedLogError(f"opening turn_start payload missing {key!r}")
    if meta["schema"] != LOG_SCHEMA:
        raise MalformedLogError(f"unsupported log schema {meta['schema']!r}")
    if meta["config_version"] != artifacts.version:
        raise VersionMismatchError(
            f"log was produced with config version {meta['config_version']}, "
            f"artifacts hash to {artifacts.version}"
        )
    if meta["mode"] not in SESSION_MODES:
        raise MalformedLogError(f"unknown session mode {meta['mode']!r}")

    session = Session(artifacts, mode=meta["mode"], session_id=meta["session_id"])
    consumed = 0
    while consumed < len(session.event_log) or consumed < len(logged):
        # First verify everything the engine has emitted so far.
        while consumed < len(session.event_log):
            if consumed >= len(logged):
                raise DivergenceError(
                    consumed,
                    f"engine emits {session.event_log[consumed].kind} but the "
                    "log ends here",
                )
            emitted = canonical_line(session.event_log[consumed])
            expected = canonical_line(logged[consumed])
            if emitted != expected:
                raise DivergenceError(
                    consumed,
                    f"recomputed {session.event_log[consumed].kind} does not "
                    "match the logged event",
                )
            consumed += 1
        if consumed >= len(logged):
            break
        event = logged[consumed]
        if event.kind in ("emotion", "norm_event", "teacher_utterance"):
            session.append_event(event.kind, event.payload)
        elif event.kind == "turn_end":
            session.end_turn()
        elif event.kind == "woz_override":
            payload = event.payload
            if set(payload) != {"target", "value"}:
                raise MalformedLogError(
                    f"line {event.seq}: woz_override payload needs target and value"
                )
            session.apply_override(payload["target"], payload["value"])
        elif event.kind == "turn_start":
            # A turn_start the engine did not emit on its own is the commit
            # marker of a WoZ override window.
            session.commit_turn()
        else:
            raise DivergenceError(
                event.seq,
                f"logged engine event {event.kind} was not produced by any "
                "operation",
            )
    return session


def replay_text(text: str, artifacts: SessionArtifacts) -> Session:
    return replay_events(parse_log(text), artifacts)


def replay_file(path: Path | str, artifacts: SessionArtifacts) -> Session:
    return replay_events(read_log(path), artifacts)
