"""Declarative teacher policies for scripted simulation runs.

A policy is a YAML document listing per-turn input events (emotions, norm
events, utterances). Running a policy replays those inputs through a real
session turn by turn, cycling over the list when more turns are requested
than scripted, so long runs of a fixed teaching style are one-liners.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .core import ValidationError
from .session import Session, SessionArtifacts, start_session
from .student import StudentPsyche


@dataclass(frozen=True)
class PolicyTurn:
    emotions: tuple[dict, ...] = ()
    norm_events: tuple[dict, ...] = ()
    utterances: tuple[str, ...] = ()


@dataclass(frozen=True)
class TeacherPolicy:
    name: str
    mode: str = "automated"
    turns: tuple[PolicyTurn, ...] = ()

    def turn_script(self, index: int) -> PolicyTurn:
        if not self.turns:
            return PolicyTurn()
        return self.turns[index % len(self.turns)]


def load_policy(source: Any) -> TeacherPolicy:
    """Load a policy from a YAML path/text/mapping."""
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    elif isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml")):
        source = Path(source).read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            document = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise ValidationError(f"policy document does not parse: {exc}") from exc
    else:
        document = copy.deepcopy(source)
    if not isinstance(document, dict):
        raise ValidationError("policy document must be a mapping")
    turns = []
    for index, entry in enumerate(document.get("turns") or []):
        if entry is None:
            entry = {}
        if not isinstance(entry, dict):
            raise ValidationError(f"policy turn {index} must be a mapping")
        unknown = set(entry) - {"emotions", "norm_events", "utterances"}
        if unknown:
            raise ValidationError(
                f"policy turn {index} has unknown fields {sorted(unknown)}"
            )
        turns.append(
            PolicyTurn(
                emotions=tuple(entry.get("emotions") or ()),
                norm_events=tuple(entry.get("norm_events") or ()),
                utterances=tuple(str(u) for u in entry.get("utterances") or ()),
            )
        )
    mode = str(document.get("mode", "automated"))
    return TeacherPolicy(
        name=str(document.get("name", "unnamed")),
        mode=mode,
        turns=tuple(turns),
    )


def run_policy(
    policy: TeacherPolicy,
    artifacts: SessionArtifacts,
    turns: int,
    session_id: str | None = None,
    psyche: StudentPsyche | None = None,
) -> Session:
    """Drive a fresh session through the scripted turns and commit each one."""
    if turns < 0:
        raise ValidationError(f"turns must be >= 0, got {turns}")
    session = start_session(
        artifacts, mode=policy.mode, session_id=session_id, psyche=psyche
    )
    for index in range(turns):
        script = policy.turn_script(index)
        for emotion in script.emotions:
            session.append_event("emotion", emotion)
        for norm_event in script.norm_events:
            session.append_event("norm_event", norm_event)
        for text in script.utterances:
            session.append_event("teacher_utterance", {"text": text})
        session.end_turn()
        if session.phase == "awaiting_override_window":
            session.commit_turn()
    return session


def strategy_distribution(session: Session) -> dict[str, int]:
    """Count committed-turn strategies from the session's event log."""
    last_per_turn: dict[int, str] = {}
    for event in session.event_log:
        if event.kind == "interpretation":
            last_per_turn[event.turn] = event.payload["coreg"]["strategy"]
    distribution: dict[str, int] = {}
    for strategy in last_per_turn.values():
        distribution[strategy] = distribution.get(strategy, 0) + 1
    return dict(sorted(distribution.items()))
