"""Append-only persistence for session transcripts.

One JSON-Lines event file per session under ``events/``, plus a flat index
file updated atomically via write-then-rename. Events are never rewritten:
saving a longer version of the same session appends only the new turns,
findings, and annotations. Desk-scale by design; everything is inspectable
with a text editor.

Event schema: {"type": "meta"|"turn"|"finding"|"annotation",
"payload": {...}, "at": rfc3339}.
"""
from __future__ import annotations

import json
import os
import secrets
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .constraints import ConstraintFinding
from .exercises import ConstraintKind
from .markers import Marker
from .model_client import Role
from .transcripts import Annotation, Transcript, TranscriptError, Turn, check_transcript

__all__ = [
    "REFLECTION_QUESTIONS",
    "ShareToken",
    "StoreError",
    "TranscriptStore",
    "UnknownSessionError",
    "export_markdown",
]


class StoreError(Exception):
    """Persistence failure or invariant violation."""


class UnknownSessionError(StoreError):
    """No stored session with that id (or no such share token)."""


@dataclass(frozen=True)
class ShareToken:
    """Unguessable read-only handle to one session's transcript."""

    token: str
    session_id: str
    created_at: datetime

    @classmethod
    def mint(cls, session_id: str) -> "ShareToken":
        # 16 bytes = 128 bits of cryptographic randomness, URL-safe encoded.
        return cls(
            token=secrets.token_urlsafe(16),
            session_id=session_id,
            created_at=datetime.now(timezone.utc),
        )


def _rfc3339(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


def _parse_time(raw: str) -> datetime:
    return datetime.fromisoformat(raw)


def _turn_payload(ordinal: int, turn: Turn) -> dict:
    return {
        "ordinal": ordinal,
        "role": turn.role.value,
        "text": turn.text,
        "timestamp": _rfc3339(turn.timestamp),
        "step_index": turn.step_index,
        "detected_markers": [m.token for m in turn.detected_markers],
    }


def _finding_payload(ordinal: int, finding: ConstraintFinding) -> dict:
    return {
        "turn_ordinal": ordinal,
        "rule": finding.rule.value,
        "evidence": finding.evidence,
        "severity": finding.severity,
    }


def _annotation_payload(a: Annotation) -> dict:
    return {
        "author": a.author,
        "turn_ordinal": a.turn_ordinal,
        "note": a.note,
        "created_at": _rfc3339(a.created_at),
    }


class TranscriptStore:
    """Single-writer-per-session event log with unlimited readers."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.events_dir = self.root / "events"
        self.index_path = self.root / "index.json"
        self.events_dir.mkdir(parents=True, exist_ok=True)

    # -- index ------------------------------------------------------

    def _read_index(self) -> dict:
        if not self.index_path.exists():
            return {"sessions": {}, "tokens": {}}
        with open(self.index_path, encoding="utf-8") as fh:
            return json.load(fh)

    def _write_index(self, index: dict) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".index-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(index, fh, indent=2, ensure_ascii=False)
            os.replace(tmp, self.index_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # -- events -----------------------------------------------------

    def _event_path(self, session_id: str) -> Path:
        return self.events_dir / f"{session_id}.jsonl"

    def _append_events(self, session_id: str, events: list[dict]) -> None:
        with open(self._event_path(session_id), "a", encoding="utf-8") as fh:
            for event in events:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _read_events(self, session_id: str) -> list[dict]:
        path = self._event_path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no stored session {session_id}")
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    # -- public API --------------------------------------------------

    def exists(self, session_id: str) -> bool:
        return self._event_path(session_id).exists()

    def save_session(self, transcript: Transcript) -> str:
        """Persist a transcript; appends only events not yet on disk."""
        try:
            check_transcript(transcript)
        except TranscriptError as exc:
            raise StoreError(f"refusing to save invalid transcript: {exc}") from exc

        now = _rfc3339(datetime.now(timezone.utc))
        stored_turns = 0
        stored_annotations = 0
        events: list[dict] = []
        if self.exists(transcript.session_id):
            for event in self._read_events(transcript.session_id):
                if event["type"] == "turn":
                    stored_turns += 1
                elif event["type"] == "annotation":
                    stored_annotations += 1
            if len(transcript.turns) < stored_turns:
                raise StoreError(
                    "event log is append-only: transcript has fewer turns than stored"
                )
        else:
            events.append(
                {
                    "type": "meta",
                    "payload": {
                        "session_id": transcript.session_id,
                        "spec_id": transcript.spec_id,
                        "spec_title": transcript.spec_title,
                        "spec_kind": transcript.spec_kind,
                        "step_names": {str(k): v for k, v in transcript.step_names.items()},
                        "created_at": _rfc3339(transcript.created_at),
                        "hide_instructions": transcript.hide_instructions,
                    },
                    "at": now,
                }
            )

        findings_by_turn: dict[int, list[ConstraintFinding]] = {}
        for ordinal, finding in transcript.findings:
            findings_by_turn.setdefault(ordinal, []).append(finding)

        for ordinal in range(stored_turns, len(transcript.turns)):
            events.append(
                {
                    "type": "turn",
                    "payload": _turn_payload(ordinal, transcript.turns[ordinal]),
                    "at": now,
                }
            )
            for finding in findings_by_turn.get(ordinal, []):
                events.append(
                    {"type": "finding", "payload": _finding_payload(ordinal, finding), "at": now}
                )
        for annotation in transcript.annotations[stored_annotations:]:
            events.append(
                {"type": "annotation", "payload": _annotation_payload(annotation), "at": now}
            )

        if events:
            self._append_events(transcript.session_id, events)

        index = self._read_index()
        index["sessions"][transcript.session_id] = {
            "spec_id": transcript.spec_id,
            "spec_title": transcript.spec_title,
            "created_at": _rfc3339(transcript.created_at),
            "turns": len(transcript.turns),
        }
        self._write_index(index)
        return transcript.session_id

    def load(self, session_id: str) -> Transcript:
        """Rebuild a transcript by replaying its event log."""
        meta: dict = {}
        turns: list[Turn] = []
        findings: list[tuple[int, ConstraintFinding]] = []
        annotations: list[Annotation] = []
        pending_findings: dict[int, list[ConstraintFinding]] = {}

        for event in self._read_events(session_id):
            payload = event["payload"]
            if event["type"] == "meta":
                meta = payload
            elif event["type"] == "turn":
                turns.append(
                    Turn(
                        role=Role(payload["role"]),
                        text=payload["text"],
                        timestamp=_parse_time(payload["timestamp"]),
                        step_index=payload["step_index"],
                        detected_markers=tuple(
                            Marker(t) for t in payload.get("detected_markers", [])
                        ),
                    )
                )
            elif event["type"] == "finding":
                finding = ConstraintFinding(
                    rule=ConstraintKind(payload["rule"]),
                    evidence=payload["evidence"],
                    severity=payload["severity"],
                )
                pending_findings.setdefault(payload["turn_ordinal"], []).append(finding)
            elif event["type"] == "annotation":
                annotations.append(
                    Annotation(
                        author=payload["author"],
                        turn_ordinal=payload["turn_ordinal"],
                        note=payload["note"],
                        created_at=_parse_time(payload["created_at"]),
                    )
                )

        rebuilt: list[Turn] = []
        for ordinal, turn in enumerate(turns):
            turn_findings = tuple(pending_findings.get(ordinal, []))
            if turn_findings:
                turn = Turn(
                    role=turn.role,
                    text=turn.text,
                    timestamp=turn.timestamp,
                    step_index=turn.step_index,
                    detected_markers=turn.detected_markers,
                    findings=turn_findings,
                )
            rebuilt.append(turn)
            findings.extend((ordinal, f) for f in turn_findings)

        return Transcript(
            session_id=meta.get("session_id", session_id),
            spec_id=meta.get("spec_id", ""),
            created_at=_parse_time(meta["created_at"]),
            turns=tuple(rebuilt),
            step_trace=tuple((i, t.step_index) for i, t in enumerate(rebuilt)),
            findings=tuple(findings),
            annotations=tuple(annotations),
            spec_title=meta.get("spec_title", ""),
            spec_kind=meta.get("spec_kind", ""),
            step_names={int(k): v for k, v in meta.get("step_names", {}).items()},
            hide_instructions=bool(meta.get("hide_instructions", False)),
        )

    def create_share_token(self, session_id: str) -> ShareToken:
        if not self.exists(session_id):
            raise UnknownSessionError(f"no stored session {session_id}")
        token = ShareToken.mint(session_id)
        index = self._read_index()
        index["tokens"][token.token] = {
            "session_id": session_id,
            "created_at": _rfc3339(token.created_at),
        }
        self._write_index(index)
        return token

    def resolve_share_token(self, token: str) -> Transcript:
        entry = self._read_index()["tokens"].get(token)
        if entry is None:
            raise UnknownSessionError("unknown share token")
        return self.load(entry["session_id"])

    def annotate(self, session_id: str, annotation: Annotation) -> Transcript:
        """Append one annotation; out-of-bounds ordinals leave the log untouched."""
        transcript = self.load(session_id)
        if not 0 <= annotation.turn_ordinal < len(transcript.turns):
            raise StoreError(
                f"annotation ordinal {annotation.turn_ordinal} out of bounds "
                f"(transcript has {len(transcript.turns)} turns)"
            )
        self._append_events(
            session_id,
            [
                {
                    "type": "annotation",
                    "payload": _annotation_payload(annotation),
                    "at": _rfc3339(datetime.now(timezone.utc)),
                }
            ],
        )
        return self.load(session_id)

    def list_sessions(self) -> list[dict]:
        index = self._read_index()
        return [
            {"session_id": sid, **entry}
            for sid, entry in sorted(index["sessions"].items(), key=lambda kv: kv[1]["created_at"])
        ]


# ------------------------------------------------------------------
# Markdown export
# ------------------------------------------------------------------

_SIMULATION_QUESTIONS = (
    "What happened? What did you do?",
    "How did the simulation end?",
    "What would you do differently next time and why?",
    "To what extent was the scenario realistic? Did the simulation play out?",
    "Did the AI get stuck in a loop? Did you detect bias in the scenario or interaction?",
)

REFLECTION_QUESTIONS: dict[str, tuple[str, ...]] = {
    "role_play": _SIMULATION_QUESTIONS,
    "goal_play": _SIMULATION_QUESTIONS,
    "critique_scenario": (
        "How did the scene illustrate the concept?",
        "Did the AI capture all of the elements of the concept?",
        "What instructions did you give the AI to revise the scenario?",
        "Did you detect bias in the AI's output, or spot any hallucinations?",
    ),
    "teach_ai": (
        "Which student did you choose to teach?",
        "What questions did the AI ask?",
        "To what extent did the AI realistically portray a novice?",
        "Did the AI ask a question that you weren't sure how to answer?",
        "What question did you suggest asking the AI student to check for understanding?",
    ),
    "co_create_case": (
        "Does the case illustrate the problem effectively? Why or why not?",
        "What might be your recommendation?",
        "How might a peer react to this case?",
    ),
    "integration_agent": (
        "Did the AI surprise you in any of your interactions?",
        "Was it helpful in thinking deeply about course content?",
        "Did it show bias and if so, how?",
        "Did it hallucinate or make a plausible sounding error about a topic we studied?",
    ),
}

_DEFAULT_QUESTIONS = (
    "What happened? What did you do?",
    "What would you do differently next time and why?",
)

_ROLE_LABELS = {Role.SYSTEM: "System", Role.USER: "Student", Role.ASSISTANT: "Assistant"}


def export_markdown(transcript: Transcript) -> str:
    """Instructor-reviewable document: step banners, every turn with its
    role label, finding flags inline, annotation footnotes, and the
    reflection footer for the exercise kind. Deterministic."""
    check_transcript(transcript)
    lines: list[str] = []
    title = transcript.spec_title or transcript.spec_id
    lines.append(f"# {title}")
    lines.append("")
    lines.append(f"- Session: {transcript.session_id}")
    lines.append(f"- Exercise: {transcript.spec_id} ({transcript.spec_kind})")
    lines.append(f"- Date: {transcript.created_at.date().isoformat()}")
    lines.append("")

    notes_by_turn: dict[int, list[int]] = {}
    for number, annotation in enumerate(transcript.annotations, start=1):
        notes_by_turn.setdefault(annotation.turn_ordinal, []).append(number)

    previous_step: int | None = None
    for ordinal, turn in enumerate(transcript.turns):
        if turn.step_index != previous_step:
            lines.append(f"— STEP {turn.step_index}: {transcript.step_name(turn.step_index)} —")
            lines.append("")
            previous_step = turn.step_index
        suffix = "".join(f" ⚑ {f.rule.value}" for f in turn.findings)
        suffix += "".join(f" [note {n}]" for n in notes_by_turn.get(ordinal, []))
        lines.append(f"**{_ROLE_LABELS[turn.role]}:** {turn.text}{suffix}")
        lines.append("")

    if transcript.annotations:
        lines.append("## Notes")
        lines.append("")
        for number, annotation in enumerate(transcript.annotations, start=1):
            lines.append(
                f"{number}. ({annotation.author}, turn {annotation.turn_ordinal}) {annotation.note}"
            )
        lines.append("")

    lines.append("## Reflection")
    lines.append("")
    questions = REFLECTION_QUESTIONS.get(transcript.spec_kind, _DEFAULT_QUESTIONS)
    for question in questions:
        lines.append(f"- {question}")
    lines.append("")
    return "\n".join(lines)
