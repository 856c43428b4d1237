"""HTTP service: exercises, live sessions, transcripts, shares, blueprints.

Sessions live in memory for their lifetime; every exchange is persisted to
the transcript store immediately, so reloading a page (or restarting the
service) never loses recorded history. Within one session requests are
serialized by a lock; distinct sessions are fully independent.

Streaming uses server-sent events; every streaming endpoint also answers
plain JSON so the service stays usable without an SSE client.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import catalog as _catalog
from .compiler import BlueprintError, InterviewAnswers, compile_blueprint
from .exercises import ExerciseSpec, ParseError, SlotBindingError, parse_exercise
from .model_client import ChatResponse, FinishReason, ModelHandle, Role, ScriptedModel
from .session import (
    EngineError,
    SessionNotActive,
    SessionState,
    enforce_budget,
    ingest_assistant_turn,
    rebuild_request,
    snapshot_transcript,
    start_session,
    submit_user_turn,
    summarize_history,
)
from .store import StoreError, TranscriptStore, UnknownSessionError
from .transcripts import Annotation, Transcript

__all__ = ["create_app", "scripted_model_factory"]

DEFAULT_DATA_DIR = "praxis_data"


@dataclass
class _Runtime:
    state: SessionState
    model: ModelHandle
    lock: threading.Lock = field(default_factory=threading.Lock)


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


class CreateSessionBody(BaseModel):
    exercise_id: str
    bindings: dict[str, str] = Field(default_factory=dict)
    hide_instructions: bool = False


class PostMessageBody(BaseModel):
    text: str
    stream: bool = False


class AnnotationBody(BaseModel):
    author: str
    turn_ordinal: int
    note: str


class BlueprintBody(BaseModel):
    kind: str
    answers: dict[str, str] = Field(default_factory=dict)


def scripted_model_factory(script_path: str | Path) -> Callable[[], ModelHandle]:
    """Each session gets its own rewound scripted model from one file."""
    with open(script_path, encoding="utf-8") as fh:
        script = json.load(fh)

    def factory() -> ModelHandle:
        return ScriptedModel.from_dict(script)

    return factory


def _exercise_summary(spec: ExerciseSpec) -> dict:
    return {
        "id": spec.id,
        "title": spec.title,
        "kind": spec.kind.value,
        "steps": [{"index": s.index, "name": s.name} for s in spec.steps],
        "slots": [
            {
                "name": s.name,
                "description": s.description,
                "default": s.default_text,
                "required": s.required,
            }
            for s in spec.slots
        ],
    }


def _transcript_view(transcript: Transcript, viewer: str, status: str | None) -> dict:
    """Role-aware transcript JSON.

    Student viewers never see system turns when the session hides its
    instructions, and never see findings, traces, or annotations.
    """
    instructor = viewer == "instructor"
    turns = []
    for ordinal, turn in enumerate(transcript.turns):
        if turn.role is Role.SYSTEM and transcript.hide_instructions and not instructor:
            continue
        entry: dict = {
            "ordinal": ordinal,
            "role": turn.role.value,
            "text": turn.text,
            "step_index": turn.step_index,
        }
        if instructor:
            entry["markers"] = [m.token for m in turn.detected_markers]
            entry["flags"] = [f.rule.value for f in turn.findings]
        turns.append(entry)
    view: dict = {
        "session_id": transcript.session_id,
        "exercise_id": transcript.spec_id,
        "title": transcript.spec_title,
        "kind": transcript.spec_kind,
        "turns": turns,
        "hide_instructions": transcript.hide_instructions,
    }
    if status is not None:
        view["status"] = status
    if instructor:
        view["step_trace"] = [list(pair) for pair in transcript.step_trace]
        view["step_names"] = {str(k): v for k, v in transcript.step_names.items()}
        view["findings"] = [
            {
                "turn_ordinal": ordinal,
                "rule": f.rule.value,
                "evidence": f.evidence,
                "severity": f.severity,
            }
            for ordinal, f in transcript.findings
        ]
        view["annotations"] = [
            {
                "author": a.author,
                "turn_ordinal": a.turn_ordinal,
                "note": a.note,
                "created_at": a.created_at.isoformat(),
            }
            for a in transcript.annotations
        ]
    return view


def create_app(
    data_dir: str | Path | None = None,
    model_factory: Callable[[], ModelHandle] | None = None,
) -> FastAPI:
    """Build the service around one store and one model factory.

    Without an explicit factory the service refuses to create sessions
    (compile/review endpoints still work); `praxis serve` wires either a
    scripted or an HTTP-backed factory.
    """
    root = Path(data_dir or os.environ.get("PRAXIS_DATA_DIR", DEFAULT_DATA_DIR))
    store = TranscriptStore(root)
    app = FastAPI(title="praxis", version="0.1.0")
    runtimes: dict[str, _Runtime] = {}
    custom_exercises: dict[str, ExerciseSpec] = {}
    registry_lock = threading.Lock()

    exercises_dir = root / "exercises"
    if exercises_dir.is_dir():
        for path in sorted(exercises_dir.glob("*.json")):
            spec = parse_exercise(path.read_text(encoding="utf-8"))
            custom_exercises[spec.id] = spec

    def lookup_exercise(exercise_id: str) -> ExerciseSpec:
        if exercise_id in custom_exercises:
            return custom_exercises[exercise_id]
        try:
            return _catalog.get_exercise(exercise_id)
        except KeyError:
            raise _error(404, "not_found", f"no exercise {exercise_id!r}")

    def lookup_runtime(session_id: str) -> _Runtime:
        runtime = runtimes.get(session_id)
        if runtime is None:
            raise _error(404, "not_found", f"no active session {session_id!r}")
        return runtime

    @app.exception_handler(HTTPException)
    async def handle_http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content={"error": detail})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/exercises")
    def list_exercises() -> list[dict]:
        seen = list(custom_exercises.values()) + [
            s for s in _catalog.builtin_catalog() if s.id not in custom_exercises
        ]
        return [_exercise_summary(s) for s in seen]

    @app.post("/exercises", status_code=201)
    def register_exercise(body: dict) -> dict:
        try:
            spec = parse_exercise(json.dumps(body))
        except ParseError as exc:
            raise _error(400, "invalid_input", str(exc))
        with registry_lock:
            custom_exercises[spec.id] = spec
            exercises_dir.mkdir(parents=True, exist_ok=True)
            (exercises_dir / f"{spec.id}.json").write_text(
                json.dumps(body, indent=2, ensure_ascii=False), encoding="utf-8"
            )
        return {"id": spec.id}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        if model_factory is None:
            raise _error(409, "conflict", "service is running without a model backend")
        spec = lookup_exercise(body.exercise_id)
        try:
            state = start_session(
                spec, body.bindings, hide_instructions=body.hide_instructions
            )
        except (SlotBindingError, ParseError) as exc:
            raise _error(400, "invalid_input", str(exc))
        runtimes[state.session_id] = _Runtime(state=state, model=model_factory())
        store.save_session(snapshot_transcript(state))
        return {
            "session_id": state.session_id,
            "exercise_id": spec.id,
            "created_at": state.started_at.isoformat(),
            "status": state.status.value,
        }

    def _exchange(runtime: _Runtime, text: str) -> ChatResponse:
        state = runtime.state
        try:
            request = submit_user_turn(state, text)
        except SessionNotActive as exc:
            raise _error(409, "conflict", str(exc))
        try:
            response = runtime.model.complete(request)
            if response.finish_reason is FinishReason.LENGTH:
                response = _retry_with_summary(runtime, response)
        except Exception as exc:
            # Roll nothing back: the user turn stays recorded; the client
            # may retry, producing a fresh assistant turn.
            store.save_session(snapshot_transcript(state))
            raise _error(502, "model_failure", f"model call failed (retryable): {exc}")
        ingest_assistant_turn(state, response.content)
        enforce_budget(state)
        store.save_session(snapshot_transcript(state))
        return response

    def _retry_with_summary(runtime: _Runtime, original: ChatResponse) -> ChatResponse:
        """Over-length reply: summarize the elided history and retry once."""
        state = runtime.state
        tail_len = sum(1 for t in state.history[1:] if t.role in (Role.USER, Role.ASSISTANT))
        # Keep the trailing window but make sure something actually elides.
        keep = min(state.history_window or 4, max(tail_len - 2, 1))
        try:
            summarize_history(state, runtime.model, keep_last=keep)
            state.history_window = keep
            return runtime.model.complete(rebuild_request(state))
        except EngineError:
            return original  # nothing to elide; keep what we got

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: PostMessageBody, request: Request):
        runtime = lookup_runtime(session_id)
        wants_stream = body.stream or "text/event-stream" in request.headers.get("accept", "")
        if not wants_stream:
            with runtime.lock:
                response = _exchange(runtime, body.text)
                state = runtime.state
                return {
                    "reply": response.content,
                    "status": state.status.value,
                    "step_index": state.current_step,
                }

        def event_stream() -> Iterator[str]:
            with runtime.lock:
                state = runtime.state
                try:
                    chat_request = submit_user_turn(state, body.text)
                except SessionNotActive as exc:
                    yield "data: " + json.dumps({"error": {"code": "conflict", "message": str(exc)}}) + "\n\n"
                    return
                parts: list[str] = []
                streamer = getattr(runtime.model, "stream", None)
                try:
                    if streamer is None:
                        response = runtime.model.complete(chat_request)
                        parts = [response.content]
                        yield "data: " + json.dumps({"delta": response.content}) + "\n\n"
                    else:
                        response = None
                        for item in streamer(chat_request):
                            if isinstance(item, ChatResponse):
                                response = item
                            else:
                                parts.append(item)
                                yield "data: " + json.dumps({"delta": item}) + "\n\n"
                        if response is None:
                            raise RuntimeError("stream ended without a terminal response")
                except Exception as exc:
                    store.save_session(snapshot_transcript(state))
                    yield "data: " + json.dumps(
                        {"error": {"code": "model_failure", "message": str(exc)}}
                    ) + "\n\n"
                    return
                ingest_assistant_turn(state, response.content)
                enforce_budget(state)
                store.save_session(snapshot_transcript(state))
                yield "data: " + json.dumps(
                    {
                        "done": True,
                        "text": response.content,
                        "status": state.status.value,
                        "step_index": state.current_step,
                    }
                ) + "\n\n"

        return StreamingResponse(event_stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str, viewer: str = "instructor") -> dict:
        runtime = runtimes.get(session_id)
        status = runtime.state.status.value if runtime else None
        try:
            transcript = store.load(session_id)
        except UnknownSessionError as exc:
            raise _error(404, "not_found", str(exc))
        return _transcript_view(transcript, viewer, status)

    @app.post("/sessions/{session_id}/share", status_code=201)
    def share_session(session_id: str) -> dict:
        try:
            token = store.create_share_token(session_id)
        except UnknownSessionError as exc:
            raise _error(404, "not_found", str(exc))
        return {"token": token.token, "url": f"/share/{token.token}"}

    @app.get("/share/{token}")
    def resolve_share(token: str) -> dict:
        try:
            transcript = store.resolve_share_token(token)
        except UnknownSessionError as exc:
            raise _error(404, "not_found", str(exc))
        view = _transcript_view(transcript, "student", status=None)
        view["read_only"] = True
        return view

    @app.post("/sessions/{session_id}/annotations", status_code=201)
    def annotate_session(session_id: str, body: AnnotationBody) -> dict:
        annotation = Annotation(
            author=body.author,
            turn_ordinal=body.turn_ordinal,
            note=body.note,
            created_at=datetime.now(timezone.utc),
        )
        try:
            transcript = store.annotate(session_id, annotation)
        except UnknownSessionError as exc:
            raise _error(404, "not_found", str(exc))
        except StoreError as exc:
            raise _error(400, "invalid_input", str(exc))
        return _transcript_view(transcript, "instructor", status=None)

    @app.post("/blueprints")
    def expand_blueprint(body: BlueprintBody) -> dict:
        try:
            prompt = compile_blueprint(body.kind, InterviewAnswers(**body.answers))
        except (BlueprintError, TypeError) as exc:
            raise _error(400, "invalid_input", str(exc))
        return {
            "opener": prompt.opener,
            "body": prompt.body,
            "fenced": prompt.fenced,
            "closer": prompt.closer,
            "rendered": prompt.rendered(),
        }

    return app
