"""Append-only session event log and its JSONL persistence.

One JSON object per line with exactly the fields seq, kind, turn, payload,
serialized canonically (sorted keys, no whitespace). Sequence numbers are
the line numbers; replay re-derives every engine-emitted line and demands
byte equality, so the on-disk form is part of the engine contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import MalformedLogError

LOG_SCHEMA = "incore-log/1"

EVENT_KINDS = (
    "turn_start",
    "emotion",
    "norm_event",
    "teacher_utterance",
    "turn_end",
    "interpretation",
    "woz_override",
    "student_behavior",
)

# Client-supplied kinds; everything else is emitted by the engine.
INPUT_KINDS = ("emotion", "norm_event", "teacher_utterance", "turn_end", "woz_override")
ENGINE_KINDS = ("turn_start", "interpretation", "student_behavior")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    turn: int
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "turn": self.turn,
            "payload": self.payload,
        }


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_line(event: SessionEvent) -> str:
    return canonical_json(event.to_dict())


def parse_line(raw: str, expected_seq: int) -> SessionEvent:
    """Parse one log line, enforcing schema and canonical form."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedLogError(f"line {expected_seq}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or set(data) != {"seq", "kind", "turn", "payload"}:
        raise MalformedLogError(
            f"line {expected_seq}: expected fields seq, kind, turn, payload"
        )
    if data["kind"] not in EVENT_KINDS:
        raise MalformedLogError(f"line {expected_seq}: unknown kind {data['kind']!r}")
    if data["seq"] != expected_seq:
        raise MalformedLogError(
            f"line {expected_seq}: sequence number {data['seq']!r} out of order"
        )
    if not isinstance(data["turn"], int) or isinstance(data["turn"], bool) or data["turn"] < 0:
        raise MalformedLogError(f"line {expected_seq}: bad turn {data['turn']!r}")
    if not isinstance(data["payload"], dict):
        raise MalformedLogError(f"line {expected_seq}: payload must be an object")
    event = SessionEvent(data["seq"], data["kind"], data["turn"], data["payload"])
    if canonical_line(event) != raw:
        raise MalformedLogError(f"line {expected_seq}: not in canonical form")
    return event


def parse_log(text: str) -> list[SessionEvent]:
    events = []
    for index, raw in enumerate(text.splitlines()):
        events.append(parse_line(raw, index))
    return events


def read_log(path: Path | str) -> list[SessionEvent]:
    return parse_log(Path(path).read_text(encoding="utf-8"))


def write_log(path: Path | str, events: Sequence[SessionEvent]) -> None:
    Path(path).write_text(
        "".join(canonical_line(event) + "\n" for event in events), encoding="utf-8"
    )


def append_log(path: Path | str, events: Iterable[SessionEvent]) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        for event in events:
            handle.write(canonical_line(event) + "\n")
