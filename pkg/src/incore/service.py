"""HTTP + WebSocket session service.

One process owns a set of live sessions. All mutations to a session pass
through its asyncio lock (single writer per session); subscribers receive
the full event history on connect and every later event in log order, so
any two subscribers observe identical, prefix-consistent streams of the
persisted log.

Wire protocol (one JSON object per frame):
  client -> server: {"msg_id": str, "kind": K, "payload": {...}} where K is
    emotion | norm_event | teacher_utterance | turn_end | woz_override |
    commit | state_snapshot
  server -> client: {"kind": "ack", "msg_id": ...} for applied inputs,
    {"kind": "error", "msg_id": ..., "message": ...} on rejection (the
    connection stays open), {"kind": "state_snapshot", ...} on request,
    and {"kind": <event kind>, "session_id": ..., "event": {seq, kind,
    turn, payload}} for every streamed session event.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from .core import IncoreError, PhaseError, ValidationError
from .eventlog import SessionEvent, canonical_line
from .session import SESSION_MODES, Session, SessionArtifacts, start_session

_INPUT_MESSAGE_KINDS = ("emotion", "norm_event", "teacher_utterance")


class SessionRuntime:
    """A live session plus its lock, subscribers, and persistence state."""

    def __init__(self, session: Session, log_path: Path):
        self.session = session
        self.log_path = log_path
        self.lock = asyncio.Lock()
        self.subscribers: list[asyncio.Queue] = []
        self.persisted = 0

    def flush(self) -> list[SessionEvent]:
        """Persist and return the events appended since the last flush."""
        fresh = self.session.event_log[self.persisted :]
        if fresh:
            with open(self.log_path, "a", encoding="utf-8") as handle:
                for event in fresh:
                    handle.write(canonical_line(event) + "\n")
            self.persisted = len(self.session.event_log)
        return fresh

    def broadcast(self, events: list[SessionEvent]) -> None:
        session_id = self.session.session_id
        for queue in self.subscribers:
            for event in events:
                queue.put_nowait(_event_frame(session_id, event))


def _event_frame(session_id: str, event: SessionEvent) -> dict:
    return {
        "kind": event.kind,
        "session_id": session_id,
        "event": event.to_dict(),
    }


def build_app(artifacts: SessionArtifacts, log_dir: Path) -> FastAPI:
    app = FastAPI(title="incore session service")
    runtimes: dict[str, SessionRuntime] = {}
    log_dir = Path(log_dir)

    def _runtime(session_id: str) -> SessionRuntime:
        runtime = runtimes.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return runtime

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        mode = body.get("mode", "automated")
        if mode not in SESSION_MODES:
            raise HTTPException(status_code=422, detail=f"unknown mode {mode!r}")
        session_id = body.get("session_id")
        if session_id is not None and session_id in runtimes:
            raise HTTPException(status_code=409, detail=f"session {session_id} exists")
        session = start_session(artifacts, mode=mode, session_id=session_id)
        log_dir.mkdir(parents=True, exist_ok=True)
        runtime = SessionRuntime(session, log_dir / f"{session.session_id}.jsonl")
        runtimes[session.session_id] = runtime
        runtime.flush()
        return {
            "kind": "session_created",
            "session_id": session.session_id,
            "state": session.snapshot(),
        }

    @app.get("/sessions")
    async def list_sessions():
        return {
            "sessions": [
                {
                    "session_id": runtime.session.session_id,
                    "mode": runtime.session.mode,
                    "turn_index": runtime.session.turn_index,
                    "phase": runtime.session.phase,
                }
                for runtime in runtimes.values()
            ]
        }

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return {"kind": "state_snapshot", "state": _runtime(session_id).session.snapshot()}

    @app.get("/sessions/{session_id}/log")
    async def get_log(session_id: str):
        runtime = _runtime(session_id)
        async with runtime.lock:
            body = "".join(line + "\n" for line in runtime.session.log_lines)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    async def _apply_message(runtime: SessionRuntime, kind: str, payload: dict) -> None:
        """Run one mutating wire message under the session lock."""
        session = runtime.session
        async with runtime.lock:
            if kind in _INPUT_MESSAGE_KINDS:
                session.append_event(kind, payload)
            elif kind == "turn_end":
                session.end_turn()
            elif kind == "woz_override":
                if not isinstance(payload, dict) or {"target", "value"} - set(payload):
                    raise ValidationError("woz_override payload needs target and value")
                session.apply_override(payload["target"], payload["value"])
            elif kind == "commit":
                session.commit_turn()
            else:
                raise ValidationError(f"unknown message kind {kind!r}")
            runtime.broadcast(runtime.flush())

    @app.websocket("/sessions/{session_id}/ws")
    async def session_socket(websocket: WebSocket, session_id: str):
        await websocket.accept()
        runtime = runtimes.get(session_id)
        if runtime is None:
            await websocket.send_json(
                {"kind": "error", "msg_id": None, "message": f"unknown session {session_id}"}
            )
            await websocket.close()
            return

        # Every outbound frame goes through this connection's queue, so one
        # writer task owns the socket and frames keep a total order: the
        # history prefix, then live events, with acks/errors after the
        # events their message produced.
        queue: asyncio.Queue = asyncio.Queue()
        async with runtime.lock:
            for event in runtime.session.event_log:
                queue.put_nowait(_event_frame(session_id, event))
            runtime.subscribers.append(queue)

        async def pump():
            while True:
                await websocket.send_json(await queue.get())

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                raw = await websocket.receive_text()
                msg_id = None
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict):
                        raise ValidationError("message must be a JSON object")
                    msg_id = message.get("msg_id")
                    kind = message.get("kind")
                    payload = message.get("payload") or {}
                    if kind == "state_snapshot":
                        queue.put_nowait(
                            {
                                "kind": "state_snapshot",
                                "msg_id": msg_id,
                                "state": runtime.session.snapshot(),
                            }
                        )
                        continue
                    await _apply_message(runtime, kind, payload)
                except json.JSONDecodeError:
                    queue.put_nowait(
                        {"kind": "error", "msg_id": msg_id, "message": "frame is not valid JSON"}
                    )
                    continue
                except (ValidationError, PhaseError, IncoreError) as exc:
                    queue.put_nowait(
                        {"kind": "error", "msg_id": msg_id, "message": str(exc)}
                    )
                    continue
                queue.put_nowait(
                    {"kind": "ack", "msg_id": msg_id, "session_id": session_id}
                )
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()
            async with runtime.lock:
                if queue in runtime.subscribers:
                    runtime.subscribers.remove(queue)

    return app
