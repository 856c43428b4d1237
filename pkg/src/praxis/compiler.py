"""Deterministic rendering of exercises, blueprints, and nudges.

Everything in this module is a pure function of its arguments: the same
spec always compiles to byte-identical prompt text (LF line endings), and
blueprint prompts are assembled from fixed sentence templates, never from
model output. Compiled catalog prompts are pinned by golden files under
``goldens/``.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .constraints import DriftIssue
from .exercises import (
    ExerciseSpec,
    SlotBindingError,
    StepSpec,
    apply_customizations,
    validate,
)

__all__ = [
    "BlueprintError",
    "CompileError",
    "GeneratedPrompt",
    "InterviewAnswers",
    "NudgeText",
    "PromptText",
    "TA_CLOSER",
    "TA_OPENER_PREFIX",
    "TUTOR_OPENER_PREFIX",
    "build_nudge",
    "compile_blueprint",
    "compile_system_prompt",
    "render_tutor_proactivity_rule",
]

logger = logging.getLogger(__name__)

TUTOR_OPENER_PREFIX = "You are an AI tutor and your job is to help the user"
TA_OPENER_PREFIX = "You are an AI teaching assistant and your job is to help the teacher"
TA_CLOSER = "this is a draft. Please adjust so that it works for you."

# An educational myth; blueprint output must never recommend it.
_FORBIDDEN_PHRASE = re.compile(r"learning\s+styles", re.IGNORECASE)


class CompileError(Exception):
    """Spec cannot be rendered (invalid or has unbound required slots)."""


class BlueprintError(Exception):
    """Interview answers cannot produce a prompt."""


@dataclass(frozen=True)
class PromptText:
    """A rendered system prompt."""

    body: str

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError("prompt body must be non-empty")

    @property
    def byte_length(self) -> int:
        return len(self.body.encode("utf-8"))


@dataclass(frozen=True)
class NudgeText:
    """A corrective system reminder, mapped from an observed drift issue."""

    text: str
    issue: DriftIssue

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("nudge text must be non-empty")


@dataclass(frozen=True)
class GeneratedPrompt:
    """Output of a blueprint interview: a fenced prompt plus wrapping text."""

    opener: str
    body: str
    fenced: bool = True
    closer: str | None = None

    def rendered(self) -> str:
        """The full markdown deliverable: code block, then the closer."""
        block = f"```\n{self.opener}\n\n{self.body}\n```"
        if self.closer:
            block += f"\n\n{self.closer}"
        return block


# ------------------------------------------------------------------
# System prompt rendering
# ------------------------------------------------------------------


def _items_block(heading: str, items: tuple[str, ...], numbered: bool) -> str:
    if numbered:
        lines = [f"{i}. {item}" for i, item in enumerate(items, start=1)]
    else:
        lines = [f"- {item}" for item in items]
    return heading + "\n\n" + "\n".join(lines)


def _labeled_block(label: str, items: tuple[str, ...]) -> str:
    if len(items) == 1:
        return f"{label}: {items[0]}"
    return f"{label}:\n\n" + "\n".join(f"- {item}" for item in items)


def _step_blocks(step: StepSpec) -> list[str]:
    blocks = [f"STEP {step.index}: {step.name}"]
    if step.do_items:
        blocks.append(_items_block("You should do this:", step.do_items, numbered=True))
    if step.dont_items:
        blocks.append(_items_block("You should not do this:", step.dont_items, numbered=False))
    if step.context_items:
        blocks.append(_labeled_block(f"Context for step {step.index}", step.context_items))
    if step.example_items:
        blocks.append(_labeled_block(f"Examples for step {step.index}", step.example_items))
    if step.transition.description:
        blocks.append(f"Next step: {step.transition.description}")
    return blocks


def compile_system_prompt(spec: ExerciseSpec) -> PromptText:
    """Render a spec into the fixed system-prompt layout.

    Unbound optional slots are filled with their defaults; an unbound
    required slot raises. Rendering is deterministic: the same spec always
    produces byte-identical output with LF line endings.
    """
    try:
        resolved = apply_customizations(spec, {})
    except SlotBindingError as exc:
        raise CompileError(f"unbound required slot: {exc}") from exc
    report = validate(resolved)
    if not report.ok:
        raise CompileError(
            "spec does not validate: " + "; ".join(str(f) for f in report.findings)
        )

    blocks = [
        f"GOAL: {resolved.goal_text}",
        f"PERSONA: {resolved.persona_text}",
        f"NARRATIVE: {resolved.narrative_text}",
        "Follow these steps in order:",
    ]
    for step in resolved.steps:
        blocks.extend(_step_blocks(step))
    if resolved.lesson_text:
        blocks.append(f"LESSON: {resolved.lesson_intro}\n\n{resolved.lesson_text}")

    body = "\n\n".join(blocks) + "\n"
    if "{{" in body:
        raise CompileError("compiled output contains an unexpanded placeholder")
    return PromptText(body=body)


# ------------------------------------------------------------------
# Blueprint expansion
# ------------------------------------------------------------------


@dataclass(frozen=True)
class InterviewAnswers:
    """Answers gathered by a blueprint interview.

    The tutor blueprint reads topic/key_elements/sticking_points/
    examples_analogies; the teaching-assistant blueprint reads
    task/elements/formatting/categorization. Unused fields are ignored.
    """

    topic: str = ""
    key_elements: str = ""
    sticking_points: str = ""
    examples_analogies: str = ""
    task: str = ""
    elements: str = ""
    formatting: str = ""
    categorization: str = ""


def _scrub(text: str) -> str:
    """Remove the forbidden phrase from interview text, logging the edit."""
    if not _FORBIDDEN_PHRASE.search(text):
        return text
    logger.warning("filtered 'learning styles' from blueprint answer text")
    while _FORBIDDEN_PHRASE.search(text):
        text = _FORBIDDEN_PHRASE.sub("", text)
        text = re.sub(r"[ \t]{2,}", " ", text)
    return text.strip()


def _compile_tutor(a: InterviewAnswers) -> GeneratedPrompt:
    topic = _scrub(a.topic.strip())
    if not topic:
        raise BlueprintError("tutor blueprint requires a non-empty topic")
    key_elements = _scrub(a.key_elements.strip())
    sticking_points = _scrub(a.sticking_points.strip())
    examples = _scrub(a.examples_analogies.strip())

    opener = f"{TUTOR_OPENER_PREFIX} learn about {topic}."

    intro = (
        "First, introduce yourself to the user. Say: \"Hello! I'm here to help you "
        f"learn about {topic}. What do you already know about {topic}?\" "
        "Wait for the student to respond. Do not move on until the student responds."
    )
    guide = (
        f"Given this information, help the student understand {topic} by providing "
        "explanations, examples, and analogies tailored to their prior knowledge."
    )
    if key_elements:
        guide += f" Key elements of the topic are: {key_elements}."
    if sticking_points:
        guide += f" Common sticking points or misconceptions are: {sticking_points}."
    if examples:
        guide += f" Helpful examples or analogies include: {examples}."
    method = (
        "Guide the student in an open-ended way. Do not provide immediate answers or "
        "solutions to problems; help the student generate their own answers by asking "
        "leading questions and providing hints. Ask the student to explain their "
        "thinking. If the student struggles or gets the answer wrong, give them "
        "additional support or a hint. If the student improves, praise them and show "
        "excitement. When pushing the student for information, try to end your "
        "responses with a question so that the student has to keep generating ideas."
    )
    assessment = (
        "Once the student shows an appropriate level of understanding, ask them to "
        "explain the concept in their own words, give examples and connect them to "
        "the concept, or apply the concept to a new problem or situation. Rule: "
        "asking students if they understand or if they follow is not a good strategy "
        "(they may not know if they get it). Instead, probe their understanding by "
        "asking them to explain, give examples, or apply their knowledge."
    )
    close = (
        "This is a dialogue, so ask only one question at a time and always wait for "
        "the user to respond. Do not get sidetracked and discuss something else; "
        "stick to the learning goal. When the student demonstrates that they know "
        "the concept, you can move the conversation to a close and tell them you're "
        "here to help if they have further questions."
    )
    body = "\n\n".join([intro, guide, method, assessment, close])
    closer = (
        "This is a draft. Copy and paste the prompt into a new chat, test it out "
        "with someone who is new to the topic in mind, and refine it so that it "
        "works for you."
    )
    return GeneratedPrompt(opener=opener, body=body, fenced=True, closer=closer)


def _compile_teaching_assistant(a: InterviewAnswers) -> GeneratedPrompt:
    task = _scrub(a.task.strip())
    if not task:
        raise BlueprintError("teaching-assistant blueprint requires a non-empty task")
    elements = _scrub(a.elements.strip()) or "the key points"
    formatting = _scrub(a.formatting.strip())
    categorization = _scrub(a.categorization.strip())

    opener = f"{TA_OPENER_PREFIX} {task}."

    intro = (
        "First, introduce yourself to the user. Ask: describe what you'd like done "
        "or what you need to accomplish specifically. Wait for the teacher to "
        "respond. Do not move on until the teacher responds."
    )
    goal = (
        f"Your goal is to help the teacher {task} and to create a repeatable "
        "process they can reuse and share."
    )
    organize = (
        f"Step 3: Organize what you found based on {categorization}."
        if categorization
        else "Step 3: Organize what you found into clear categories."
    )
    fmt = (
        f"Step 4: Format the information into a structured document with {formatting}."
        if formatting
        else "Step 4: Format the information into a structured document."
    )
    steps = "\n".join(
        [
            "Follow these steps in order:",
            "Step 1: Ask the teacher to provide the source material or details you need for the task.",
            f"Step 2: Analyze the content to identify {elements}.",
            organize,
            fmt,
            "Step 5: Present the initial draft to the teacher and ask if there are any adjustments or additional details needed.",
        ]
    )
    reminder = "Remember, this is a draft. Please adjust so that it works for you."
    body = "\n\n".join([intro, goal, steps, reminder])
    return GeneratedPrompt(opener=opener, body=body, fenced=True, closer=TA_CLOSER)


def compile_blueprint(kind: str, answers: InterviewAnswers) -> GeneratedPrompt:
    """Expand a blueprint interview into a generated prompt.

    ``kind`` is "tutor" or "teaching_assistant" (alias "ta"). The output is
    always fenced, always carries the mandated opener, and never contains
    the phrase "learning styles" regardless of what the answers contain.
    """
    if kind == "tutor":
        return _compile_tutor(answers)
    if kind in ("teaching_assistant", "ta"):
        return _compile_teaching_assistant(answers)
    raise BlueprintError(f"unknown blueprint kind: {kind}")


# ------------------------------------------------------------------
# Nudges and reusable fragments
# ------------------------------------------------------------------

_NUDGE_TEXTS: dict[DriftIssue, str] = {
    DriftIssue.LOOP: (
        "You appear to be stuck in a loop. Remember your goal{goal} and move the "
        "exercise forward instead of repeating yourself."
    ),
    DriftIssue.OFF_TRACK: (
        "Stay on track. Return to the exercise{goal} and keep the student focused "
        "on what the current step asks for."
    ),
    DriftIssue.MULTI_QUESTION: (
        "Ask only one question at a time. Do not ask more than 1 question at a time; "
        "wait for the student to respond before asking the next one."
    ),
    DriftIssue.STEP_MENTION: (
        "Do not mention the steps during your interaction with the user. Continue "
        "the exercise without describing its internal structure."
    ),
    DriftIssue.REFUSAL: (
        "You are capable of performing this task. Continue the exercise as "
        "instructed and respond to the student."
    ),
    DriftIssue.ARGUMENTATIVE: (
        "Redirect the conversation back to the exercise and move it forward "
        "constructively."
    ),
    DriftIssue.SHALLOW: (
        "Add more depth: explain with specific details and concrete examples, as "
        "though you were explaining to a person."
    ),
}


def build_nudge(issue: DriftIssue, step: StepSpec | None = None) -> NudgeText:
    """Map a drift issue to its corrective reminder.

    The mapping is total over DriftIssue. When ``step`` is given, loop and
    off-track nudges restate the current step's goal.
    """
    template = _NUDGE_TEXTS[issue]
    if "{goal}" in template:
        if step is not None and step.do_items:
            goal = f': complete "{step.name}" ({step.do_items[0]})'
        elif step is not None:
            goal = f': complete "{step.name}"'
        else:
            goal = " for the current step"
        return NudgeText(text=template.format(goal=goal), issue=issue)
    return NudgeText(text=template, issue=issue)


# Cross-model behavior note: some models keep deferring to student
# self-assessment; appending this fragment to a tutor prompt makes the
# tutor probe understanding instead of asking for confirmation.
_TUTOR_PROACTIVITY_RULE = (
    "Rule: Never ask the student if they understand or have any more questions; "
    "DO NOT ask if they follow, or if it makes sense, or if the explanation was "
    "helpful, or if something helps explain the general concept. The student "
    "doesn't know enough to know if they understand and it's your job to take the "
    "lead and scaffold the student and gauge their understanding. Always push the "
    "student to explain, talk a lot, give you examples until the student can "
    "explain all in their own words. That's how you can tell if they know "
    "something."
)


def render_tutor_proactivity_rule() -> str:
    """The reusable proactivity fragment, byte-stable across calls."""
    return _TUTOR_PROACTIVITY_RULE
