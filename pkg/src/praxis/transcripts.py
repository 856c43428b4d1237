"""Transcript value types shared by the session engine and the store."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping

from .constraints import ConstraintFinding
from .markers import Marker
from .model_client import Role

__all__ = ["Annotation", "Transcript", "Turn", "TranscriptError", "check_transcript"]


class TranscriptError(Exception):
    """Transcript violates a structural invariant."""


@dataclass(frozen=True)
class Turn:
    """One message in a session, annotated with what the monitors saw.

    Markers and findings only ever apply to assistant output; user and
    system turns carry none.
    """

    role: Role
    text: str
    timestamp: datetime
    step_index: int
    detected_markers: tuple[Marker, ...] = ()
    findings: tuple[ConstraintFinding, ...] = ()

    def __post_init__(self) -> None:
        if self.role is not Role.ASSISTANT and (self.detected_markers or self.findings):
            raise ValueError("markers/findings only apply to assistant turns")


@dataclass(frozen=True)
class Annotation:
    author: str
    turn_ordinal: int
    note: str
    created_at: datetime


@dataclass(frozen=True)
class Transcript:
    """Persisted record of one session: ordered turns plus derived traces."""

    session_id: str
    spec_id: str
    created_at: datetime
    turns: tuple[Turn, ...]
    step_trace: tuple[tuple[int, int], ...]  # (turn ordinal, step index)
    findings: tuple[tuple[int, ConstraintFinding], ...] = ()
    annotations: tuple[Annotation, ...] = ()
    spec_title: str = ""
    spec_kind: str = ""
    step_names: Mapping[int, str] = field(default_factory=dict)
    hide_instructions: bool = False

    def step_name(self, index: int) -> str:
        return self.step_names.get(index, f"STEP {index}")


def check_transcript(transcript: Transcript) -> None:
    """Raise TranscriptError if a structural invariant is broken."""
    if not transcript.turns:
        raise TranscriptError("transcript must contain at least the system turn")
    if transcript.turns[0].role is not Role.SYSTEM:
        raise TranscriptError("transcript must begin with a system turn")
    ordinals = [o for o, _ in transcript.step_trace]
    if ordinals != sorted(set(ordinals)):
        raise TranscriptError("step trace ordinals must be strictly increasing")
    n = len(transcript.turns)
    if any(o < 0 or o >= n for o in ordinals):
        raise TranscriptError("step trace references a turn that does not exist")
    if any(o < 0 or o >= n for o, _ in transcript.findings):
        raise TranscriptError("finding references a turn that does not exist")
    if any(a.turn_ordinal < 0 or a.turn_ordinal >= n for a in transcript.annotations):
        raise TranscriptError("annotation references a turn that does not exist")
