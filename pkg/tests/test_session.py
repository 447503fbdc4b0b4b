from __future__ import annotations

import json
import random

import pytest

from incore.core import (
    DivergenceError,
    MalformedLogError,
    PhaseError,
    ValidationError,
    VersionMismatchError,
)
from incore.eventlog import canonical_line, parse_log
from incore.session import (
    SessionArtifacts,
    replay_events,
    replay_text,
    start_session,
)

ANGER_PAD = {"pleasure": -0.51, "arousal": 0.59, "dominance": 0.25}
JOY_PAD = {"pleasure": 0.4, "arousal": 0.2, "dominance": 0.1}
PHONE_BROKEN = {
    "norm_id": "no_phone_in_class",
    "obligation_id": "phone_stowed",
    "status": "broken",
    "actor": "student",
}


def masked(snapshot: dict) -> dict:
    data = dict(snapshot)
    data.pop("session_id")
    return data


def log_text(session) -> str:
    return "\n".join(session.log_lines) + "\n"


def test_start_session_emits_opening_scene(artifacts):
    session = start_session(artifacts, "automated")
    kinds = [event.kind for event in session.event_log]
    assert kinds == ["turn_start", "student_behavior"]
    assert session.phase == "collecting"
    assert session.turn_index == 0
    meta = session.event_log[0].payload
    assert meta["config_version"] == artifacts.version
    assert meta["mode"] == "automated"


def test_invalid_artifacts_fail_before_session_creation():
    with pytest.raises(ValidationError):
        SessionArtifacts.load(config_source={"crs_thresholds": [0.9, 0.1]})


def test_two_sessions_identical_modulo_id(artifacts):
    a = start_session(artifacts, "woz")
    b = start_session(artifacts, "woz")
    assert a.session_id != b.session_id
    assert masked(a.snapshot()) == masked(b.snapshot())
    assert [e.kind for e in a.event_log] == [e.kind for e in b.event_log]
    assert a.event_log[1].payload == b.event_log[1].payload


def test_append_grows_log_in_order(artifacts):
    session = start_session(artifacts, "automated")
    before = len(session.event_log)
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    session.append_event("norm_event", dict(PHONE_BROKEN))
    session.append_event("teacher_utterance", {"text": "Phone away, please."})
    assert len(session.event_log) == before + 3
    assert [e.seq for e in session.event_log] == list(range(len(session.event_log)))


def test_append_outside_collecting_rejected(artifacts):
    session = start_session(artifacts, "woz")
    session.end_turn()
    assert session.phase == "awaiting_override_window"
    with pytest.raises(PhaseError, match="append_event"):
        session.append_event("emotion", {"pad": ANGER_PAD})


def test_append_malformed_payloads(artifacts):
    session = start_session(artifacts, "automated")
    with pytest.raises(ValidationError):
        session.append_event("emotion", {"source_tag": "voice"})
    with pytest.raises(ValidationError):
        session.append_event("emotion", {"pad": ANGER_PAD, "bogus": 1})
    with pytest.raises(ValidationError):
        session.append_event("norm_event", {"norm_id": "no_phone_in_class"})
    with pytest.raises(ValidationError):
        session.append_event("norm_event", {**PHONE_BROKEN, "norm_id": "nope"})
    with pytest.raises(ValidationError):
        session.append_event("teacher_utterance", {"text": 5})
    with pytest.raises(ValidationError):
        session.append_event("turn_end", {})


def test_end_turn_pipeline_and_auto_commit(artifacts):
    session = start_session(artifacts, "automated")
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    session.append_event("norm_event", dict(PHONE_BROKEN))
    interp = session.end_turn()
    assert interp.summary.lead_affect.label == "anger-rage"
    assert interp.summary.conflict.key == "K2-active"
    assert interp.coreg.strategy == "forcing"
    assert interp.behavior.utterance_tag == "defiant_refusal"
    # automated mode commits and opens the next turn
    assert session.phase == "collecting"
    assert session.turn_index == 1
    kinds = [e.kind for e in session.event_log]
    assert kinds[-4:] == ["turn_end", "interpretation", "student_behavior", "turn_start"]


def test_empty_turn_conventions(artifacts):
    session = start_session(artifacts, "automated")
    relationship_before = session.coreg.relationship
    interp = session.end_turn()
    assert interp.summary.lead_affect.to_dict() == {
        "label": "affectless-neutral",
        "intensity": 0.0,
    }
    assert interp.summary.conflict.code == "K0"
    assert interp.coreg.relationship == relationship_before


def test_end_turn_requires_collecting(artifacts):
    session = start_session(artifacts, "woz")
    session.end_turn()
    with pytest.raises(PhaseError, match="end_turn"):
        session.end_turn()


def test_woz_override_lead_affect_rederives_downstream(artifacts):
    session = start_session(artifacts, "woz")
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    automated = session.end_turn()
    assert automated.summary.conflict.key == "K2-active"
    revised = session.apply_override("lead_affect", {"label": "shame"})
    assert revised.summary.lead_affect.label == "shame"
    # intensity defaults to the automated lead's intensity
    assert revised.summary.lead_affect.intensity == automated.summary.lead_affect.intensity
    assert revised.summary.conflict.key == "K4-passive"
    assert revised.coreg.strategy != automated.coreg.strategy or True
    session.commit_turn()
    assert session.coreg == revised.coreg
    assert session.student == revised.status


def test_woz_override_behavior_is_stage_local(artifacts):
    session = start_session(artifacts, "woz")
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    automated = session.end_turn()
    revised = session.apply_override(
        "student_behavior",
        {"utterance_tag": "talk_back", "animation_tag": "wave_phone"},
    )
    assert revised.behavior.utterance_tag == "talk_back"
    assert revised.behavior.intensity == automated.behavior.intensity
    assert revised.status == automated.status
    assert revised.summary == automated.summary


def test_woz_override_conflict_keeps_lead(artifacts):
    session = start_session(artifacts, "woz")
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    automated = session.end_turn()
    revised = session.apply_override("conflict", {"code": "K6", "mode": "passive"})
    assert revised.summary.lead_affect == automated.summary.lead_affect
    assert revised.summary.conflict.key == "K6-passive"


def test_override_rejections(artifacts):
    automated = start_session(artifacts, "automated")
    automated.end_turn()
    with pytest.raises(PhaseError, match="woz"):
        automated.apply_override("lead_affect", {"label": "shame"})

    session = start_session(artifacts, "woz")
    session.end_turn()
    with pytest.raises(ValidationError, match="target"):
        session.apply_override("strategy", {"value": "forcing"})
    with pytest.raises(ValidationError, match="unknown lead-affect"):
        session.apply_override("lead_affect", {"label": "brooding"})
    with pytest.raises(ValidationError, match="not in repertoire"):
        session.apply_override(
            "student_behavior",
            {"utterance_tag": "nope", "animation_tag": "look_away"},
        )


def test_commit_lifecycle(artifacts):
    session = start_session(artifacts, "woz")
    session.end_turn()
    session.commit_turn()
    assert session.phase == "collecting"
    assert session.turn_index == 1
    with pytest.raises(PhaseError, match="commit_turn"):
        session.commit_turn()


def test_exactly_one_effective_interpretation_per_committed_turn(artifacts):
    session = start_session(artifacts, "automated")
    for _ in range(4):
        session.append_event("emotion", {"pad": JOY_PAD})
        session.end_turn()
    per_turn: dict[int, int] = {}
    for event in session.event_log:
        if event.kind == "interpretation":
            per_turn[event.turn] = per_turn.get(event.turn, 0) + 1
    assert per_turn == {0: 1, 1: 1, 2: 1, 3: 1}


# ----------------------------------------------------------------------
# replay


def drive_session(artifacts, mode="automated", seed=0, turns=4):
    rng = random.Random(seed)
    session = start_session(artifacts, mode)
    for _ in range(turns):
        for _ in range(rng.randrange(0, 3)):
            session.append_event(
                "emotion",
                {
                    "pad": {
                        "pleasure": rng.uniform(-1, 1),
                        "arousal": rng.uniform(-1, 1),
                        "dominance": rng.uniform(-1, 1),
                    },
                    "source_tag": "sim",
                },
            )
        if rng.random() < 0.6:
            session.append_event("norm_event", dict(PHONE_BROKEN))
        if rng.random() < 0.4:
            session.append_event("teacher_utterance", {"text": "Please focus."})
        session.end_turn()
        if mode == "woz":
            if rng.random() < 0.5:
                session.apply_override("lead_affect", {"label": "defiance"})
            session.commit_turn()
    return session


def test_replay_reproduces_live_state(artifacts):
    for mode in ("automated", "woz"):
        session = drive_session(artifacts, mode=mode, seed=7)
        replayed = replay_text(log_text(session), artifacts)
        assert replayed.log_lines == session.log_lines
        assert replayed.snapshot() == session.snapshot()


def test_replay_after_every_operation(artifacts):
    session = start_session(artifacts, "woz")
    checkpoints = []

    def check():
        replayed = replay_events(list(session.event_log), artifacts)
        assert replayed.snapshot() == session.snapshot()
        assert replayed.log_lines == session.log_lines

    check()
    session.append_event("emotion", {"pad": ANGER_PAD, "source_tag": "voice"})
    check()
    session.append_event("norm_event", dict(PHONE_BROKEN))
    check()
    session.end_turn()
    check()
    session.apply_override("lead_affect", {"label": "guilt"})
    check()
    session.commit_turn()
    check()


def test_replay_empty_log_gives_fresh_state(artifacts):
    replayed = replay_events([], artifacts)
    fresh = start_session(artifacts, "automated")
    assert masked(replayed.snapshot()) == masked(fresh.snapshot())


def test_replay_version_mismatch(artifacts):
    session = drive_session(artifacts, seed=3, turns=2)
    other = SessionArtifacts.load(config_source={"epsilon_tie": 0.2})
    with pytest.raises(VersionMismatchError):
        replay_text(log_text(session), other)


def test_replay_detects_tampered_interpretation(artifacts):
    session = drive_session(artifacts, seed=5, turns=3)
    lines = session.log_lines
    index = next(
        i for i, line in enumerate(lines) if json.loads(line)["kind"] == "interpretation"
    )
    data = json.loads(lines[index])
    data["payload"]["lead_affect"]["intensity"] = 0.123456
    lines[index] = canonical_line(
        type(session.event_log[0])(data["seq"], data["kind"], data["turn"], data["payload"])
    )
    with pytest.raises(DivergenceError) as err:
        replay_text("\n".join(lines) + "\n", artifacts)
    assert err.value.seq == index


def test_replay_detects_noncanonical_line(artifacts):
    session = drive_session(artifacts, seed=5, turns=1)
    lines = session.log_lines
    lines[2] = lines[2].replace(",", ", ", 1)
    with pytest.raises(MalformedLogError, match="canonical"):
        replay_text("\n".join(lines) + "\n", artifacts)


def test_replay_detects_truncation(artifacts):
    session = drive_session(artifacts, seed=5, turns=2)
    lines = session.log_lines[:-1]
    with pytest.raises(DivergenceError):
        replay_text("\n".join(lines) + "\n", artifacts)


def test_replay_detects_tampered_utterance_text(artifacts):
    # utterance text never feeds the pipeline; the inputs digest still
    # pins it down.
    session = start_session(artifacts, "automated")
    session.append_event("teacher_utterance", {"text": "AAAA"})
    session.end_turn()
    lines = session.log_lines
    index = next(
        i
        for i, line in enumerate(lines)
        if json.loads(line)["kind"] == "teacher_utterance"
    )
    lines[index] = lines[index].replace("AAAA", "AAAB")
    with pytest.raises(DivergenceError):
        replay_text("\n".join(lines) + "\n", artifacts)


def test_replay_detects_any_single_byte_substitution(artifacts):
    session = drive_session(artifacts, mode="woz", seed=11, turns=2)
    text = log_text(session)
    data = bytearray(text.encode("utf-8"))
    rng = random.Random(99)
    alphabet = b"abcdefghijklmnopqrstuvwxyz0123456789{}[]\",.:-"
    for _ in range(120):
        position = rng.randrange(len(data))
        original = data[position]
        replacement = rng.choice([b for b in alphabet if b != original])
        mutated = bytes(data[:position]) + bytes([replacement]) + bytes(data[position + 1 :])
        try:
            decoded = mutated.decode("utf-8")
        except UnicodeDecodeError:
            continue
        with pytest.raises((MalformedLogError, DivergenceError, ValidationError, PhaseError, VersionMismatchError, json.JSONDecodeError)):
            replay_text(decoded, artifacts)
