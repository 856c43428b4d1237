"""Built-in exercise catalog.

Eight ready-to-run exercises ship with the package as JSON documents in
``catalog_data/``. They are parsed through the same public file format an
instructor would use for a custom exercise, so loading the catalog also
exercises the parser.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .exercises import ExerciseSpec, parse_exercise

__all__ = ["CATALOG_IDS", "builtin_catalog", "get_exercise", "load_catalog_document"]

CATALOG_IDS: tuple[str, ...] = (
    "negotiation",
    "goal_setting",
    "self_distancing",
    "critique_groupthink",
    "teach_ai",
    "integration_agent",
    "tutor",
    "co_create_case",
)


def load_catalog_document(exercise_id: str) -> str:
    """Raw JSON document for one built-in exercise."""
    if exercise_id not in CATALOG_IDS:
        raise KeyError(f"unknown catalog exercise: {exercise_id}")
    path = resources.files("praxis").joinpath(f"catalog_data/{exercise_id}.json")
    return path.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _load(exercise_id: str) -> ExerciseSpec:
    return parse_exercise(load_catalog_document(exercise_id))


def builtin_catalog() -> list[ExerciseSpec]:
    """All eight built-in exercises, in catalog order."""
    return [_load(eid) for eid in CATALOG_IDS]


def get_exercise(exercise_id: str) -> ExerciseSpec:
    if exercise_id not in CATALOG_IDS:
        raise KeyError(f"unknown catalog exercise: {exercise_id}")
    return _load(exercise_id)
