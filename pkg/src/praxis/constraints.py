"""Behavior monitors applied to assistant turns.

The engine never forces the model to obey its instructions; it observes
each assistant turn, records findings for the rules the exercise declares,
and lets the nudge machinery react. Two rules are exact and load-bearing:

- one_question_per_turn: counts sentence-terminal '?' and flags when the
  count exceeds one. A '?' followed by a closing quote/paren still ends a
  sentence; '?' inside inline code spans or fenced code blocks is ignored.
- feedback_format: flags a feedback-step turn that lacks either required
  heading (GENERAL FEEDBACK / ADVICE MOVING FORWARD).

The remaining rules are documented keyword heuristics and only ever
produce warn-severity findings.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .exercises import ConstraintKind, ConstraintRule

__all__ = [
    "ConstraintFinding",
    "DriftIssue",
    "check_constraints",
    "count_terminal_questions",
]

FEEDBACK_HEADINGS = ("GENERAL FEEDBACK", "ADVICE MOVING FORWARD")

# Keyword lists for the heuristic rules. Deliberately small and documented:
# they catch the canonical phrasings, not every possible one.
ANSWER_GIVING_PHRASES = (
    "the answer is",
    "here is the answer",
    "here's the answer",
    "the correct answer is",
    "the solution is",
)
SELF_BEHAVIOR_PHRASES = (
    "my instructions",
    "i am programmed",
    "i was instructed",
    "as an ai language model",
    "what i'll do next",
    "my next step is",
    "i am playing the role",
)

_EVIDENCE_LIMIT = 240
_CODE_FENCE = re.compile(r"```.*?```", re.DOTALL)
_CODE_SPAN = re.compile(r"`[^`\n]*`")
_QUESTION_RUN = re.compile(r"\?+[)\"'’”\]]*")
_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s", re.MULTILINE)
_STEP_MENTION = re.compile(r"\bSTEP \d", re.IGNORECASE)
_STEP_HEADING_LINE = re.compile(r"^\s*#{0,6}\s*STEP \d+\s*:", re.IGNORECASE)


class DriftIssue(str, Enum):
    """Failure modes a live model drifts into, named after the mitigation
    table rows they map back to."""

    LOOP = "loop"
    OFF_TRACK = "off_track"
    MULTI_QUESTION = "multi_question"
    STEP_MENTION = "step_mention"
    REFUSAL = "refusal"
    ARGUMENTATIVE = "argumentative"
    SHALLOW = "shallow"


@dataclass(frozen=True)
class ConstraintFinding:
    """One rule violation observed on a turn; evidence is a literal excerpt
    (substring) of the turn text."""

    rule: ConstraintKind
    evidence: str
    severity: str = "warn"


def _mask_code(text: str) -> str:
    """Replace code spans/fences with spaces, preserving offsets."""

    def blank(match: re.Match) -> str:
        return " " * (match.end() - match.start())

    return _CODE_SPAN.sub(blank, _CODE_FENCE.sub(blank, text))


def _question_spans(text: str) -> list[tuple[int, int]]:
    masked = _mask_code(text)
    return [m.span() for m in _QUESTION_RUN.finditer(masked)]


def count_terminal_questions(text: str) -> int:
    """Number of sentence-terminal question marks, per the documented rule."""
    return len(_question_spans(text))


def _sentence_start(text: str, pos: int) -> int:
    for i in range(pos - 1, -1, -1):
        if text[i] in ".!?\n":
            return i + 1
    return 0


def _clip(evidence: str) -> str:
    return evidence if len(evidence) <= _EVIDENCE_LIMIT else evidence[:_EVIDENCE_LIMIT]


def _check_one(rule: ConstraintRule, text: str) -> ConstraintFinding | None:
    kind = rule.kind

    if kind is ConstraintKind.ONE_QUESTION_PER_TURN:
        spans = _question_spans(text)
        if len(spans) > 1:
            start = _sentence_start(text, spans[0][0])
            evidence = text[start : spans[-1][1]].strip()
            return ConstraintFinding(kind, _clip(evidence), rule.severity)
        return None

    if kind is ConstraintKind.NUMBERED_QUESTIONS:
        if _question_spans(text) and not _NUMBERED_LINE.search(_mask_code(text)):
            span = _question_spans(text)[0]
            start = _sentence_start(text, span[0])
            return ConstraintFinding(kind, _clip(text[start : span[1]].strip()), rule.severity)
        return None

    if kind is ConstraintKind.NO_STEP_MENTION:
        masked = _mask_code(text)
        for match in _STEP_MENTION.finditer(masked):
            line_start = masked.rfind("\n", 0, match.start()) + 1
            line_end = masked.find("\n", match.end())
            line = masked[line_start : line_end if line_end >= 0 else len(masked)]
            if _STEP_HEADING_LINE.match(line):
                continue  # step banners are headings, not chatter about steps
            return ConstraintFinding(
                kind, _clip(text[match.start() : match.start() + 80].strip()), rule.severity
            )
        return None

    if kind is ConstraintKind.FEEDBACK_FORMAT:
        if all(h in text for h in FEEDBACK_HEADINGS):
            return None
        return ConstraintFinding(kind, _clip(text[:80].strip()), rule.severity)

    if kind is ConstraintKind.NO_ANSWER_GIVING:
        lowered = text.lower()
        for phrase in ANSWER_GIVING_PHRASES:
            pos = lowered.find(phrase)
            if pos >= 0:
                return ConstraintFinding(kind, _clip(text[pos : pos + 80].strip()), "warn")
        return None

    if kind is ConstraintKind.NO_SELF_BEHAVIOR_DESCRIPTION:
        lowered = text.lower()
        for phrase in SELF_BEHAVIOR_PHRASES:
            pos = lowered.find(phrase)
            if pos >= 0:
                return ConstraintFinding(kind, _clip(text[pos : pos + 80].strip()), "warn")
        return None

    raise ValueError(f"unknown constraint kind: {kind}")  # pragma: no cover


def check_constraints(text: str, rules: Iterable[ConstraintRule]) -> list[ConstraintFinding]:
    """Apply each rule to one assistant turn; returns findings, never raises."""
    findings = []
    for rule in rules:
        finding = _check_one(rule, text)
        if finding is not None:
            findings.append(finding)
    return findings
