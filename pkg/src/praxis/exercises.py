"""Exercise specifications: the declarative description of one AI exercise.

An exercise spec mirrors the skeleton used by all built-in exercises
(goal, persona, narrative, ordered steps, optional lesson) and adds the
machinery that makes a prompt executable: customization slots, step
transitions, turn budgets, and constraint rules for the session monitors.

Specs are plain immutable values. Parsing, validation, and customization
all return new objects and never mutate their inputs.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

__all__ = [
    "ConstraintKind",
    "ConstraintRule",
    "CustomizationSlot",
    "ExerciseError",
    "ExerciseKind",
    "ExerciseSpec",
    "ParseError",
    "SlotBindingError",
    "StepSpec",
    "TransitionRule",
    "TransitionTrigger",
    "TurnBudget",
    "ValidationFinding",
    "ValidationReport",
    "apply_customizations",
    "parse_exercise",
    "serialize_exercise",
    "validate",
]

PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")

# Kinds that simulate a scenario around domain knowledge and therefore
# must carry a LESSON section.
KINDS_REQUIRING_LESSON = frozenset({"role_play", "goal_play", "critique_scenario"})


class ExerciseError(Exception):
    """Base error for exercise spec handling."""


class ParseError(ExerciseError):
    """Document is malformed or violates a spec invariant."""


class SlotBindingError(ExerciseError):
    """Customization bindings do not satisfy the spec's slots."""


class ExerciseKind(str, Enum):
    ROLE_PLAY = "role_play"
    GOAL_PLAY = "goal_play"
    CRITIQUE_SCENARIO = "critique_scenario"
    TEACH_AI = "teach_ai"
    CO_CREATE_CASE = "co_create_case"
    REFLECTION_COACH = "reflection_coach"
    INTEGRATION_AGENT = "integration_agent"
    TUTOR = "tutor"


class TransitionTrigger(str, Enum):
    ASSISTANT_MARKER = "assistant_marker"
    STUDENT_CHOICE_MADE = "student_choice_made"
    INFO_GATHERED = "info_gathered"
    BUDGET_EXHAUSTED = "budget_exhausted"
    MANUAL = "manual"


class ConstraintKind(str, Enum):
    ONE_QUESTION_PER_TURN = "one_question_per_turn"
    NUMBERED_QUESTIONS = "numbered_questions"
    NO_STEP_MENTION = "no_step_mention"
    FEEDBACK_FORMAT = "feedback_format"
    NO_ANSWER_GIVING = "no_answer_giving"
    NO_SELF_BEHAVIOR_DESCRIPTION = "no_self_behavior_description"


@dataclass(frozen=True)
class TransitionRule:
    """When a session may advance past a step.

    ``description`` carries the human-readable "Next step:" sentence and is
    rendered verbatim into the compiled prompt (empty for final steps).
    """

    trigger: TransitionTrigger
    marker: str | None = None
    description: str = ""


@dataclass(frozen=True)
class TurnBudget:
    """Cap on student turns within one step; the nudge fires at the cap."""

    max_student_turns: int
    exhaustion_nudge: str


@dataclass(frozen=True)
class StepSpec:
    index: int
    name: str
    do_items: tuple[str, ...] = ()
    dont_items: tuple[str, ...] = ()
    context_items: tuple[str, ...] = ()
    example_items: tuple[str, ...] = ()
    transition: TransitionRule = field(
        default_factory=lambda: TransitionRule(TransitionTrigger.MANUAL)
    )
    turn_budget: TurnBudget | None = None


@dataclass(frozen=True)
class CustomizationSlot:
    """A named hole an instructor may fill. Required slots have no default."""

    name: str
    description: str = ""
    default_text: str = ""
    required: bool = False


@dataclass(frozen=True)
class ConstraintRule:
    """A behavior monitor applied to assistant turns during a session.

    ``applies_to_steps`` is None for "all steps" or an explicit index tuple.
    """

    kind: ConstraintKind
    severity: str = "warn"  # "warn" | "fail"
    applies_to_steps: tuple[int, ...] | None = None

    def applies_to(self, step_index: int) -> bool:
        return self.applies_to_steps is None or step_index in self.applies_to_steps


DEFAULT_LESSON_INTRO = (
    "You can draw on this information to create the scenario and to give the student feedback."
)


@dataclass(frozen=True)
class ExerciseSpec:
    id: str
    title: str
    kind: ExerciseKind
    goal_text: str
    persona_text: str
    narrative_text: str
    steps: tuple[StepSpec, ...]
    lesson_text: str | None = None
    # Sentence rendered on the "LESSON:" header line; the body follows it.
    lesson_intro: str = DEFAULT_LESSON_INTRO
    slots: tuple[CustomizationSlot, ...] = ()
    constraints: tuple[ConstraintRule, ...] = ()

    def step(self, index: int) -> StepSpec:
        for s in self.steps:
            if s.index == index:
                return s
        raise KeyError(f"no step with index {index}")

    @property
    def final_step_index(self) -> int:
        return self.steps[-1].index

    @property
    def step_names(self) -> dict[int, str]:
        return {s.index: s.name for s in self.steps}

    def custom_markers(self) -> tuple[str, ...]:
        """Marker tokens referenced by transitions (catalog or custom)."""
        return tuple(
            s.transition.marker for s in self.steps if s.transition.marker is not None
        )

    def constraints_for_step(self, step_index: int) -> tuple[ConstraintRule, ...]:
        return tuple(c for c in self.constraints if c.applies_to(step_index))


@dataclass(frozen=True)
class ValidationFinding:
    path: str
    rule: str
    severity: str = "fail"

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return f"{self.path}: {self.rule} ({self.severity})"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[ValidationFinding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def rules(self) -> list[str]:
        return [f.rule for f in self.findings]


def validate(spec: ExerciseSpec) -> ValidationReport:
    """Check every spec invariant and report all violations, not just the first."""
    findings: list[ValidationFinding] = []

    def bad(path: str, rule: str) -> None:
        findings.append(ValidationFinding(path=path, rule=rule))

    if not spec.id.strip():
        bad("id", "empty_id")
    for name in ("goal_text", "persona_text", "narrative_text"):
        if not getattr(spec, name).strip():
            bad(name, f"empty_{name}")

    if spec.kind.value in KINDS_REQUIRING_LESSON and not (spec.lesson_text or "").strip():
        bad("lesson_text", "missing_lesson")

    if not spec.steps:
        bad("steps", "no_steps")
    indices = [s.index for s in spec.steps]
    if indices != list(range(1, len(indices) + 1)):
        bad("steps", "non_contiguous_step_indices")

    for s in spec.steps:
        where = f"steps[{s.index}]"
        if not s.name.strip():
            bad(f"{where}.name", "empty_step_name")
        elif s.name != s.name.upper():
            bad(f"{where}.name", "step_name_not_uppercase")
        t = s.transition
        if t.trigger is TransitionTrigger.ASSISTANT_MARKER and not t.marker:
            bad(f"{where}.transition", "marker_required")
        if t.trigger is not TransitionTrigger.ASSISTANT_MARKER and t.marker:
            bad(f"{where}.transition", "marker_forbidden")
        if t.trigger is TransitionTrigger.BUDGET_EXHAUSTED and s.turn_budget is None:
            bad(f"{where}.transition", "budget_required_for_trigger")
        if s.turn_budget is not None and s.turn_budget.max_student_turns < 1:
            bad(f"{where}.turn_budget", "budget_below_one")

    seen: set[str] = set()
    for slot in spec.slots:
        where = f"slots[{slot.name}]"
        if slot.name in seen:
            bad(where, "duplicate_slot_name")
        seen.add(slot.name)
        if slot.required and slot.default_text:
            bad(where, "required_slot_has_default")
        if not slot.required and not slot.default_text:
            bad(where, "optional_slot_missing_default")

    valid_indices = set(indices)
    for i, rule in enumerate(spec.constraints):
        if rule.applies_to_steps is not None and not set(rule.applies_to_steps) <= valid_indices:
            bad(f"constraints[{i}]", "constraint_step_out_of_range")
        if rule.severity not in ("warn", "fail"):
            bad(f"constraints[{i}]", "invalid_severity")

    declared = {slot.name for slot in spec.slots}
    for path, text in _text_fields(spec):
        for name in PLACEHOLDER_RE.findall(text):
            if name not in declared:
                bad(path, "undeclared_placeholder")

    return ValidationReport(tuple(findings))


def _text_fields(spec: ExerciseSpec) -> list[tuple[str, str]]:
    fields: list[tuple[str, str]] = [
        ("goal_text", spec.goal_text),
        ("persona_text", spec.persona_text),
        ("narrative_text", spec.narrative_text),
    ]
    if spec.lesson_text:
        fields.append(("lesson_text", spec.lesson_text))
        fields.append(("lesson_intro", spec.lesson_intro))
    for s in spec.steps:
        where = f"steps[{s.index}]"
        for label, items in (
            ("do", s.do_items),
            ("dont", s.dont_items),
            ("context", s.context_items),
            ("examples", s.example_items),
        ):
            for j, item in enumerate(items):
                fields.append((f"{where}.{label}[{j}]", item))
        fields.append((f"{where}.transition.description", s.transition.description))
        if s.turn_budget is not None:
            fields.append((f"{where}.turn_budget.exhaustion_nudge", s.turn_budget.exhaustion_nudge))
    return fields


# ------------------------------------------------------------------
# Parsing / serialization (UTF-8 JSON exercise file format)
# ------------------------------------------------------------------


def _require(obj: Mapping, key: str, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing required field '{key}'")
    return obj[key]


def _str_list(value, where: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ParseError(f"{where}: expected a list of strings")
    return tuple(value)


def _parse_step(obj: Mapping, where: str) -> StepSpec:
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: step must be an object")
    index = _require(obj, "index", where)
    if not isinstance(index, int) or index < 1:
        raise ParseError(f"{where}: step index must be a positive integer")
    name = _require(obj, "name", where)
    if not isinstance(name, str) or not name.strip():
        raise ParseError(f"{where}: step name must be non-empty text")

    t_obj = _require(obj, "transition", where)
    if not isinstance(t_obj, Mapping):
        raise ParseError(f"{where}: transition must be an object")
    trigger_raw = _require(t_obj, "trigger", f"{where}.transition")
    try:
        trigger = TransitionTrigger(trigger_raw)
    except ValueError:
        raise ParseError(f"{where}.transition: unknown trigger '{trigger_raw}'") from None
    marker = t_obj.get("marker")
    if trigger is TransitionTrigger.ASSISTANT_MARKER:
        if not isinstance(marker, str) or not marker.strip():
            raise ParseError(f"{where}.transition: assistant_marker requires a marker token")
        marker = marker.strip().upper()
    elif marker is not None:
        raise ParseError(f"{where}.transition: marker only allowed with assistant_marker")
    transition = TransitionRule(
        trigger=trigger, marker=marker, description=t_obj.get("description", "")
    )

    budget = None
    b_obj = obj.get("turn_budget")
    if b_obj is not None:
        if not isinstance(b_obj, Mapping):
            raise ParseError(f"{where}: turn_budget must be an object")
        max_turns = _require(b_obj, "max_student_turns", f"{where}.turn_budget")
        if not isinstance(max_turns, int) or max_turns < 1:
            raise ParseError(f"{where}.turn_budget: max_student_turns must be >= 1")
        budget = TurnBudget(
            max_student_turns=max_turns,
            exhaustion_nudge=_require(b_obj, "exhaustion_nudge", f"{where}.turn_budget"),
        )

    return StepSpec(
        index=index,
        name=name.strip().upper(),
        do_items=_str_list(obj.get("do"), f"{where}.do"),
        dont_items=_str_list(obj.get("dont"), f"{where}.dont"),
        context_items=_str_list(obj.get("context"), f"{where}.context"),
        example_items=_str_list(obj.get("examples"), f"{where}.examples"),
        transition=transition,
        turn_budget=budget,
    )


def _parse_slot(obj: Mapping, where: str) -> CustomizationSlot:
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: slot must be an object")
    name = _require(obj, "name", where)
    if not isinstance(name, str) or not re.fullmatch(r"\w+", name):
        raise ParseError(f"{where}: slot name must be an identifier")
    return CustomizationSlot(
        name=name,
        description=obj.get("description", ""),
        default_text=obj.get("default", ""),
        required=bool(obj.get("required", False)),
    )


def _parse_constraint(obj: Mapping, where: str) -> ConstraintRule:
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: constraint must be an object")
    kind_raw = _require(obj, "kind", where)
    try:
        kind = ConstraintKind(kind_raw)
    except ValueError:
        raise ParseError(f"{where}: unknown constraint kind '{kind_raw}'") from None
    steps = obj.get("applies_to_steps", "all")
    if steps == "all":
        applies: tuple[int, ...] | None = None
    elif isinstance(steps, list) and all(isinstance(i, int) for i in steps):
        applies = tuple(steps)
    else:
        raise ParseError(f"{where}: applies_to_steps must be 'all' or a list of step indices")
    return ConstraintRule(
        kind=kind, severity=obj.get("severity", "warn"), applies_to_steps=applies
    )


def parse_exercise(document: str) -> ExerciseSpec:
    """Parse an exercise document (UTF-8 JSON) into a validated spec.

    Raises ParseError for malformed documents and for any spec-invariant
    violation (duplicate slot names, unknown kind, missing lesson for
    simulation kinds, non-contiguous step indices, ...).
    """
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed document: {exc}") from exc
    if not isinstance(obj, Mapping):
        raise ParseError("malformed document: top level must be an object")

    kind_raw = _require(obj, "kind", "exercise")
    try:
        kind = ExerciseKind(kind_raw)
    except ValueError:
        raise ParseError(f"exercise: unknown kind '{kind_raw}'") from None

    steps_raw = _require(obj, "steps", "exercise")
    if not isinstance(steps_raw, list) or not steps_raw:
        raise ParseError("exercise: steps must be a non-empty list")
    steps = tuple(_parse_step(s, f"steps[{i}]") for i, s in enumerate(steps_raw, start=1))

    spec = ExerciseSpec(
        id=str(_require(obj, "id", "exercise")),
        title=str(_require(obj, "title", "exercise")),
        kind=kind,
        goal_text=str(_require(obj, "goal", "exercise")),
        persona_text=str(_require(obj, "persona", "exercise")),
        narrative_text=str(_require(obj, "narrative", "exercise")),
        steps=steps,
        lesson_text=obj.get("lesson"),
        lesson_intro=obj.get("lesson_intro", DEFAULT_LESSON_INTRO),
        slots=tuple(
            _parse_slot(s, f"slots[{i}]") for i, s in enumerate(obj.get("slots", []), start=1)
        ),
        constraints=tuple(
            _parse_constraint(c, f"constraints[{i}]")
            for i, c in enumerate(obj.get("constraints", []), start=1)
        ),
    )

    report = validate(spec)
    if not report.ok:
        raise ParseError(
            "document violates spec invariants: "
            + "; ".join(str(f) for f in report.findings)
        )
    return spec


def serialize_exercise(spec: ExerciseSpec) -> str:
    """Render a spec back to the exercise file format (stable key order)."""

    def step_obj(s: StepSpec) -> dict:
        t: dict = {"trigger": s.transition.trigger.value}
        if s.transition.marker is not None:
            t["marker"] = s.transition.marker
        if s.transition.description:
            t["description"] = s.transition.description
        out: dict = {"index": s.index, "name": s.name}
        if s.do_items:
            out["do"] = list(s.do_items)
        if s.dont_items:
            out["dont"] = list(s.dont_items)
        if s.context_items:
            out["context"] = list(s.context_items)
        if s.example_items:
            out["examples"] = list(s.example_items)
        out["transition"] = t
        if s.turn_budget is not None:
            out["turn_budget"] = {
                "max_student_turns": s.turn_budget.max_student_turns,
                "exhaustion_nudge": s.turn_budget.exhaustion_nudge,
            }
        return out

    obj: dict = {
        "id": spec.id,
        "title": spec.title,
        "kind": spec.kind.value,
        "goal": spec.goal_text,
        "persona": spec.persona_text,
        "narrative": spec.narrative_text,
        "steps": [step_obj(s) for s in spec.steps],
    }
    if spec.lesson_text is not None:
        obj["lesson"] = spec.lesson_text
        if spec.lesson_intro != DEFAULT_LESSON_INTRO:
            obj["lesson_intro"] = spec.lesson_intro
    if spec.slots:
        obj["slots"] = [
            {
                "name": s.name,
                "description": s.description,
                "default": s.default_text,
                "required": s.required,
            }
            for s in spec.slots
        ]
    if spec.constraints:
        obj["constraints"] = [
            {
                "kind": c.kind.value,
                "severity": c.severity,
                "applies_to_steps": (
                    "all" if c.applies_to_steps is None else list(c.applies_to_steps)
                ),
            }
            for c in spec.constraints
        ]
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# ------------------------------------------------------------------
# Customization
# ------------------------------------------------------------------


def _splice(text: str, values: Mapping[str, str]) -> str:
    # Single pass over the template: replacement text is inserted literally
    # and never rescanned, so placeholder-like syntax in a binding survives.
    # Placeholders naming undeclared slots are left for validate to report.
    return PLACEHOLDER_RE.sub(lambda m: values.get(m.group(1), m.group(0)), text)


def apply_customizations(spec: ExerciseSpec, bindings: Mapping[str, str]) -> ExerciseSpec:
    """Fill every slot placeholder; unbound optional slots use their default.

    Raises SlotBindingError when a required slot is unbound or a binding
    names a slot the spec does not declare.
    """
    known = {slot.name for slot in spec.slots}
    unknown = set(bindings) - known
    if unknown:
        raise SlotBindingError(f"unknown slot name(s): {', '.join(sorted(unknown))}")
    missing = [s.name for s in spec.slots if s.required and s.name not in bindings]
    if missing:
        raise SlotBindingError(f"missing required binding(s): {', '.join(missing)}")

    values = {s.name: bindings.get(s.name, s.default_text) for s in spec.slots}

    def sub(text: str) -> str:
        return _splice(text, values)

    def sub_all(items: Iterable[str]) -> tuple[str, ...]:
        return tuple(sub(t) for t in items)

    steps = tuple(
        replace(
            s,
            do_items=sub_all(s.do_items),
            dont_items=sub_all(s.dont_items),
            context_items=sub_all(s.context_items),
            example_items=sub_all(s.example_items),
            transition=replace(s.transition, description=sub(s.transition.description)),
            turn_budget=(
                None
                if s.turn_budget is None
                else replace(s.turn_budget, exhaustion_nudge=sub(s.turn_budget.exhaustion_nudge))
            ),
        )
        for s in spec.steps
    )
    return replace(
        spec,
        goal_text=sub(spec.goal_text),
        persona_text=sub(spec.persona_text),
        narrative_text=sub(spec.narrative_text),
        lesson_text=None if spec.lesson_text is None else sub(spec.lesson_text),
        lesson_intro=sub(spec.lesson_intro),
        steps=steps,
    )
