"""Detection of proclamation markers in assistant output.

Exercises instruct the model to proclaim literal tokens (BEGIN ROLE PLAY,
END OF SCENE, LESSON COMPLETE, ...) and the session engine advances steps
when it sees them. Models decorate these tokens freely - bold, headings,
mixed case, trailing punctuation - so detection runs on a normalized view
of the text: markdown emphasis characters stripped, case folded, curly
quotes straightened.

Longer tokens are matched first and claim their span, which resolves the
lexical collision between SCENE and END OF SCENE: a turn proclaiming
"END OF SCENE" never also counts as a SCENE proclamation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

__all__ = ["MARKER_CATALOG", "Marker", "detect_markers", "normalize_marker_text"]

# Tokens the built-in exercises proclaim. Custom tokens from a spec's
# transitions are merged in at detection time.
MARKER_CATALOG: tuple[str, ...] = (
    "BEGIN ROLE PLAY",
    "BEGIN ROLEPLAY",
    "END OF SCENE",
    "SCENE",
    "LESSON COMPLETE",
    "CASE COMPLETE",
    "LET'S BEGIN",
)

_EMPHASIS_CHARS = re.compile(r"[*_#]+")
_CURLY_QUOTES = str.maketrans({"‘": "'", "’": "'", "“": '"', "”": '"'})


@dataclass(frozen=True)
class Marker:
    """One detected (or declared) marker token, stored uppercase."""

    token: str

    def __post_init__(self) -> None:
        if not self.token.strip():
            raise ValueError("marker token must be non-empty")
        object.__setattr__(self, "token", self.token.strip().upper())


def normalize_marker_text(text: str) -> str:
    """Strip markdown emphasis and case-fold; positions are preserved 1:1
    except for removed emphasis characters."""
    return _EMPHASIS_CHARS.sub("", text.translate(_CURLY_QUOTES)).upper()


def _is_boundary(text: str, pos: int) -> bool:
    return pos < 0 or pos >= len(text) or not text[pos].isalnum()


def detect_markers(text: str, extra_tokens: Iterable[str] = ()) -> list[Marker]:
    """Find catalog and extra tokens in ``text``, ordered by position.

    Matching is case-insensitive after emphasis stripping, requires
    non-alphanumeric boundaries on both sides (so SCENERY never matches
    SCENE), and consumes matched spans longest-token-first so that shorter
    tokens cannot fire inside a longer match.
    """
    norm = normalize_marker_text(text)
    tokens = dict.fromkeys(MARKER_CATALOG)
    for tok in extra_tokens:
        tokens.setdefault(tok.strip().upper())

    claimed: list[tuple[int, int]] = []
    hits: list[tuple[int, str]] = []
    for token in sorted(tokens, key=len, reverse=True):
        start = 0
        while True:
            pos = norm.find(token, start)
            if pos < 0:
                break
            end = pos + len(token)
            start = pos + 1
            if not (_is_boundary(norm, pos - 1) and _is_boundary(norm, end)):
                continue
            if any(pos < c_end and end > c_start for c_start, c_end in claimed):
                continue
            claimed.append((pos, end))
            hits.append((pos, token))

    seen: set[str] = set()
    ordered: list[Marker] = []
    for _, token in sorted(hits):
        if token not in seen:
            seen.add(token)
            ordered.append(Marker(token))
    return ordered
