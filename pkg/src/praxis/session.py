"""The live session state machine.

One session runs one exercise: the compiled prompt is pinned as the first
system turn, student and assistant turns alternate, and every assistant
turn is scanned for markers and constraint findings. Transitions advance
the current step; turn budgets fire a one-shot nudge that is injected as a
system reminder on the next request, so the student's own words are never
rewritten.

Each session has a single logical owner: operations mutate the state
in place and must be serialized by the caller. Distinct sessions share
nothing.
"""
from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .compiler import NudgeText, compile_system_prompt
from .constraints import DriftIssue, check_constraints
from .exercises import ExerciseSpec, TransitionTrigger, apply_customizations
from .markers import detect_markers
from .model_client import ChatMessage, ChatRequest, ChatResponse, ModelHandle, Role
from .transcripts import Transcript, Turn

__all__ = [
    "EngineError",
    "SessionNotActive",
    "SessionState",
    "SessionStatus",
    "end_session",
    "enforce_budget",
    "ingest_assistant_turn",
    "run_exchange",
    "snapshot_transcript",
    "start_session",
    "submit_user_turn",
    "summarize_history",
]

# An assistant turn that lists two or more numbered options is treated as
# the "here are your choices" moment that satisfies info_gathered.
_NUMBERED_OPTION = re.compile(r"^\s*\d+[.)]\s+\S", re.MULTILINE)

# A short reply that picks one of the offered options.
_CHOICE_REPLY = re.compile(
    r"^\s*(?:i\s+(?:choose|pick)\s+|option\s+|let'?s\s+go\s+with\s+|number\s+|#)?"
    r"(?:\d{1,2}|one|two|three|first|second|third)\s*[.!)]*\s*$",
    re.IGNORECASE,
)

_SUMMARIZER_INSTRUCTION = (
    "You summarize tutoring conversations. Summarize the conversation below in "
    "under 150 words so a mentor can pick it up later: note the scenario, the "
    "choices made, and any advice given. Reply with the summary only."
)


class EngineError(Exception):
    """Session operations called out of contract."""


class SessionNotActive(EngineError):
    """Operation requires an active session."""


class SessionStatus(str, Enum):
    ACTIVE = "active"
    WRAPPED = "wrapped"
    ABORTED = "aborted"


@dataclass
class SessionState:
    """Mutable state for one running session (single writer)."""

    session_id: str
    spec_id: str
    spec: ExerciseSpec  # customized: all slots resolved
    system_prompt: str
    status: SessionStatus = SessionStatus.ACTIVE
    current_step: int = 1
    student_turns_in_step: int = 0
    assistant_turns_in_step: int = 0
    pending_nudge: NudgeText | None = None
    history: list[Turn] = field(default_factory=list)
    summary: str | None = None
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    hide_instructions: bool = False
    # Request defaults for this session.
    model_id: str = "scripted"
    temperature: float = 0.7
    max_output_tokens: int = 1024
    # When set, requests keep only this many trailing turns verbatim and
    # substitute the stored summary for the elided ones.
    history_window: int | None = None
    # Assistant turns allowed in a step before info_gathered gives up waiting.
    info_gathered_cap: int = 4
    nudged_steps: set[int] = field(default_factory=set)

    @property
    def is_active(self) -> bool:
        return self.status is SessionStatus.ACTIVE


def _now() -> datetime:
    return datetime.now(timezone.utc)


def start_session(
    spec: ExerciseSpec,
    bindings: dict[str, str] | None = None,
    *,
    hide_instructions: bool = False,
    model_id: str = "scripted",
    temperature: float = 0.7,
    max_output_tokens: int = 1024,
    history_window: int | None = None,
) -> SessionState:
    """Create a session at step 1 with the compiled prompt as history[0].

    Validation and binding errors propagate from customization/compilation.
    """
    bound = apply_customizations(spec, bindings or {})
    prompt = compile_system_prompt(bound)
    state = SessionState(
        session_id=uuid.uuid4().hex,
        spec_id=spec.id,
        spec=bound,
        system_prompt=prompt.body,
        hide_instructions=hide_instructions,
        model_id=model_id,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
        history_window=history_window,
    )
    state.history.append(
        Turn(role=Role.SYSTEM, text=prompt.body, timestamp=state.started_at, step_index=1)
    )
    return state


def _tail_messages(state: SessionState) -> list[ChatMessage]:
    """History after the pinned prompt, summarized when the window is on."""
    tail = state.history[1:]
    messages: list[ChatMessage] = []
    if state.history_window is not None and state.summary and len(tail) > state.history_window:
        messages.append(
            ChatMessage(Role.SYSTEM, f"Summary of the conversation so far: {state.summary}")
        )
        tail = tail[-state.history_window :]
    messages.extend(ChatMessage(t.role, t.text) for t in tail)
    return messages


def submit_user_turn(state: SessionState, text: str) -> ChatRequest:
    """Record a student turn and build the request for the model.

    A pending nudge is delivered as a system reminder just before the new
    user message (and recorded in history), then cleared.
    """
    if not state.is_active:
        raise SessionNotActive(f"session is {state.status.value}")
    if state.history and state.history[-1].role is Role.USER:
        raise EngineError("user turns must alternate with assistant turns")
    if not text.strip():
        raise EngineError("user turn text must be non-empty")

    messages = [ChatMessage(Role.SYSTEM, state.system_prompt)]
    messages.extend(_tail_messages(state))
    if state.pending_nudge is not None:
        nudge = state.pending_nudge
        messages.append(ChatMessage(Role.SYSTEM, nudge.text))
        state.history.append(
            Turn(role=Role.SYSTEM, text=nudge.text, timestamp=_now(), step_index=state.current_step)
        )
        state.pending_nudge = None
    messages.append(ChatMessage(Role.USER, text))
    state.history.append(
        Turn(role=Role.USER, text=text, timestamp=_now(), step_index=state.current_step)
    )
    state.student_turns_in_step += 1
    return ChatRequest(
        messages=tuple(messages),
        model_id=state.model_id,
        temperature=state.temperature,
        max_output_tokens=state.max_output_tokens,
    )


def rebuild_request(state: SessionState) -> ChatRequest:
    """Request for the history exactly as recorded, without adding a turn.

    Used to retry after an over-length reply: the caller summarizes, sets
    a history window, and resends the same (now shorter) conversation.
    """
    if not state.history or state.history[-1].role is not Role.USER:
        raise EngineError("nothing to retry: the last turn is not a user turn")
    messages = [ChatMessage(Role.SYSTEM, state.system_prompt)]
    messages.extend(_tail_messages(state))
    return ChatRequest(
        messages=tuple(messages),
        model_id=state.model_id,
        temperature=state.temperature,
        max_output_tokens=state.max_output_tokens,
    )


def _last_user_text(state: SessionState) -> str | None:
    for turn in reversed(state.history):
        if turn.role is Role.USER:
            return turn.text
    return None


def _transition_fires(state: SessionState, assistant_text: str, detected_tokens: set[str]) -> bool:
    step = state.spec.step(state.current_step)
    rule = step.transition
    if rule.trigger is TransitionTrigger.ASSISTANT_MARKER:
        return rule.marker in detected_tokens
    if rule.trigger is TransitionTrigger.STUDENT_CHOICE_MADE:
        last = _last_user_text(state)
        return last is not None and _CHOICE_REPLY.match(last) is not None
    if rule.trigger is TransitionTrigger.INFO_GATHERED:
        if len(_NUMBERED_OPTION.findall(assistant_text)) >= 2:
            return True
        return state.assistant_turns_in_step >= state.info_gathered_cap
    if rule.trigger is TransitionTrigger.BUDGET_EXHAUSTED:
        budget = step.turn_budget
        return budget is not None and state.student_turns_in_step > budget.max_student_turns
    return False  # manual


def ingest_assistant_turn(state: SessionState, text: str) -> SessionState:
    """Record an assistant turn: detect markers, check constraints, and
    advance the step when the current transition fires.

    Ingest is total over content: anomalies become findings, never errors.
    Firing the final step's transition wraps the session.
    """
    if not state.is_active:
        raise SessionNotActive(f"session is {state.status.value}")
    if not state.history or state.history[-1].role is not Role.USER:
        raise EngineError("assistant turn must follow a user turn")

    detected = detect_markers(text, state.spec.custom_markers())
    rules = state.spec.constraints_for_step(state.current_step)
    findings = check_constraints(text, rules)
    state.history.append(
        Turn(
            role=Role.ASSISTANT,
            text=text,
            timestamp=_now(),
            step_index=state.current_step,
            detected_markers=tuple(detected),
            findings=tuple(findings),
        )
    )
    state.assistant_turns_in_step += 1

    if _transition_fires(state, text, {m.token for m in detected}):
        if state.current_step == state.spec.final_step_index:
            state.status = SessionStatus.WRAPPED
        else:
            state.current_step += 1
            state.student_turns_in_step = 0
            state.assistant_turns_in_step = 0
    return state


def enforce_budget(state: SessionState) -> NudgeText | None:
    """Fire the step's exhaustion nudge exactly when the student turn count
    reaches the budget; at most once per step."""
    if not state.is_active:
        return None
    step = state.spec.step(state.current_step)
    if step.turn_budget is None or state.current_step in state.nudged_steps:
        return None
    if state.student_turns_in_step == step.turn_budget.max_student_turns:
        nudge = NudgeText(text=step.turn_budget.exhaustion_nudge, issue=DriftIssue.OFF_TRACK)
        state.pending_nudge = nudge
        state.nudged_steps.add(state.current_step)
        return nudge
    return None


def summarize_history(
    state: SessionState, model: ModelHandle, keep_last: int | None = None
) -> str:
    """Ask the model to summarize the elided turns and store the result.

    ``keep_last`` defaults to the session's history window; the request
    contains the full text of every turn that would be elided.
    """
    keep = keep_last if keep_last is not None else (state.history_window or 0)
    tail = [t for t in state.history[1:] if t.role in (Role.USER, Role.ASSISTANT)]
    if len(tail) < 2:
        raise EngineError("history must contain at least 2 non-system turns")
    elided = tail[:-keep] if keep else tail
    if not elided:
        raise EngineError("nothing to summarize: all turns fit in the window")
    conversation = "\n\n".join(f"{t.role.value}: {t.text}" for t in elided)
    request = ChatRequest(
        messages=(
            ChatMessage(Role.SYSTEM, _SUMMARIZER_INSTRUCTION),
            ChatMessage(Role.USER, conversation),
        ),
        model_id=state.model_id,
        temperature=0.0,
        max_output_tokens=state.max_output_tokens,
    )
    response = model.complete(request)
    state.summary = response.content
    return response.content


def snapshot_transcript(state: SessionState) -> Transcript:
    """Transcript of the session so far, without changing its status."""
    turns = tuple(state.history)
    return Transcript(
        session_id=state.session_id,
        spec_id=state.spec_id,
        created_at=state.started_at,
        turns=turns,
        step_trace=tuple((i, t.step_index) for i, t in enumerate(turns)),
        findings=tuple((i, f) for i, t in enumerate(turns) for f in t.findings),
        annotations=(),
        spec_title=state.spec.title,
        spec_kind=state.spec.kind.value,
        step_names=dict(state.spec.step_names),
        hide_instructions=state.hide_instructions,
    )


def end_session(state: SessionState) -> Transcript:
    """Wrap the session (if still active) and return its transcript.

    Idempotent: calling again returns an equal transcript.
    """
    if state.is_active:
        state.status = SessionStatus.WRAPPED
    return snapshot_transcript(state)


def run_exchange(
    state: SessionState, model: ModelHandle, text: str
) -> tuple[ChatResponse, NudgeText | None]:
    """One full exchange: submit -> model -> ingest -> budget check.

    Returns the model response and the nudge, if this exchange armed one
    (it is delivered on the next request).
    """
    request = submit_user_turn(state, text)
    response = model.complete(request)
    ingest_assistant_turn(state, response.content)
    nudge = enforce_budget(state)
    return response, nudge
