"""The prompt test battery.

Runs scripted students against compiled exercises and scores each session
against the spec: did it visit the steps in order, did markers fire, were
budgets respected, what did the monitors flag. Battery rows are
operationalized as checkable predicates; the rows that remain heuristic
(output_quality, breaks_when_pushed, edge_case) are documented as such in
the row descriptions.

With scripted models everything here is exactly deterministic: the same
plan produces identical reports on every run.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from . import catalog as _catalog
from .exercises import ConstraintKind, ExerciseSpec, TransitionTrigger, validate
from .model_client import HttpModel, ModelHandle, ProviderConfig, Role, ScriptedModel, ScriptRule
from .session import end_session, run_exchange, start_session
from .transcripts import Transcript

__all__ = [
    "AdherenceReport",
    "BatteryReport",
    "BATTERY_ROWS",
    "Divergence",
    "PERSONAS",
    "PlanError",
    "RowResult",
    "RunRecord",
    "ScriptTurn",
    "StudentScript",
    "TestPlan",
    "build_run",
    "cooperative_dialogue",
    "diff_cross_model",
    "render_battery_table",
    "run_battery",
    "run_scripted_session",
    "score_adherence",
]

BATTERY_ROWS: tuple[str, ...] = (
    "works_as_intended",
    "consistency",
    "loses_track",
    "breaks_when_pushed",
    "follows_steps",
    "proficiency_levels",
    "edge_case",
    "output_quality",
    "cross_model",
)

PERSONAS: tuple[str, ...] = (
    "cooperative",
    "proficient",
    "struggling",
    "refuses_to_play",
    "asks_for_answer",
    "argumentative",
    "long_winded",
)

# Which student personas each battery row exercises.
ROW_PERSONAS: dict[str, tuple[str, ...]] = {
    "works_as_intended": ("cooperative",),
    "consistency": ("cooperative",),
    "loses_track": ("cooperative",),
    "breaks_when_pushed": ("refuses_to_play", "argumentative"),
    "follows_steps": ("cooperative",),
    "proficiency_levels": ("proficient", "struggling"),
    "edge_case": ("refuses_to_play", "asks_for_answer"),
    "output_quality": ("cooperative",),
    "cross_model": ("cooperative",),
}


class PlanError(Exception):
    """Test plan is inconsistent with its spec or itself."""


@dataclass(frozen=True)
class ScriptTurn:
    """One student line; conditional entries are skipped unless the last
    assistant message matches ``when``."""

    text: str
    when: str | None = None


@dataclass(frozen=True)
class StudentScript:
    persona: str
    turns: tuple[ScriptTurn, ...]
    max_turns: int

    def __post_init__(self) -> None:
        if not self.turns:
            raise ValueError("student script must have at least one turn")
        mandatory = sum(1 for t in self.turns if t.when is None)
        if self.max_turns < mandatory:
            raise ValueError("max_turns must cover every mandatory turn")


@dataclass(frozen=True)
class TestPlan:
    __test__ = False  # not a pytest class, despite the name

    spec_id: str
    battery: tuple[str, ...] = BATTERY_ROWS
    repetitions: int = 1
    personas: tuple[str, ...] = PERSONAS
    # Each entry is the literal "scripted" or a live ProviderConfig.
    models: tuple[str | ProviderConfig, ...] = ("scripted",)
    # None resolves to 1.0 for all-scripted plans, 0.8 when a live model
    # is involved (live output varies; scripted runs must be exact).
    pass_threshold: float | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        unknown = set(self.battery) - set(BATTERY_ROWS)
        if unknown:
            raise ValueError(f"unknown battery rows: {sorted(unknown)}")
        if "cross_model" in self.battery and len(self.models) not in (1, 2):
            raise ValueError("cross_model requires 1-2 model configs")

    @property
    def all_scripted(self) -> bool:
        return all(m == "scripted" for m in self.models)

    @property
    def threshold(self) -> float:
        if self.pass_threshold is not None:
            return self.pass_threshold
        return 1.0 if self.all_scripted else 0.8


@dataclass(frozen=True)
class AdherenceReport:
    """Pure scoring of one transcript against its spec.

    Deliberately contains no identifiers or timestamps so that repeated
    runs of the same script compare equal.
    """

    spec_id: str
    steps_visited: tuple[int, ...]
    in_order: bool
    markers_seen: tuple[str, ...]
    budget_respected: bool
    findings_count: tuple[tuple[str, int], ...]
    fail_findings: int
    feedback_format_present: bool
    final_assistant_chars: int
    verdict: str  # "pass" | "warn" | "fail"


@dataclass(frozen=True)
class RunRecord:
    row: str
    persona: str
    model_label: str
    repetition: int
    report: AdherenceReport | None = None
    error: str | None = None


@dataclass(frozen=True)
class RowResult:
    row: str
    skipped: bool = False
    reason: str = ""
    pass_rate: float | None = None
    passed: bool | None = None


@dataclass(frozen=True)
class BatteryReport:
    spec_id: str
    battery: tuple[str, ...]
    repetitions: int
    runs: tuple[RunRecord, ...]
    rows: tuple[RowResult, ...]

    @property
    def any_fail_verdict(self) -> bool:
        return any(r.report is not None and r.report.verdict == "fail" for r in self.runs)

    @property
    def all_rows_passed(self) -> bool:
        return all(r.skipped or r.passed for r in self.rows)


# ------------------------------------------------------------------
# Scoring
# ------------------------------------------------------------------


def score_adherence(transcript: Transcript, spec: ExerciseSpec) -> AdherenceReport:
    """Score one transcript; pure function, no I/O, no mutation."""
    if transcript.spec_id != spec.id:
        raise PlanError(
            f"transcript belongs to {transcript.spec_id!r}, not {spec.id!r}"
        )

    visited: list[int] = []
    for _, step_index in transcript.step_trace:
        if not visited or visited[-1] != step_index:
            visited.append(step_index)
    trace_steps = [s for _, s in transcript.step_trace]
    non_decreasing = all(a <= b for a, b in zip(trace_steps, trace_steps[1:]))
    final = spec.final_step_index
    in_order = (
        non_decreasing
        and visited == list(range(1, len(visited) + 1))
        and bool(visited)
        and visited[-1] == final
    )

    markers_seen: list[str] = []
    for turn in transcript.turns:
        for marker in turn.detected_markers:
            if marker.token not in markers_seen:
                markers_seen.append(marker.token)

    budget_respected = True
    for step in spec.steps:
        if step.turn_budget is None:
            continue
        budget = step.turn_budget.max_student_turns
        student_turns = sum(
            1 for t in transcript.turns if t.role is Role.USER and t.step_index == step.index
        )
        nudged = any(
            t.role is Role.SYSTEM and t.step_index == step.index
            for t in transcript.turns[1:]
        )
        if student_turns > budget and not nudged:
            budget_respected = False
        if student_turns > budget + 1:
            budget_respected = False

    counts: Counter[str] = Counter()
    fail_findings = 0
    warn_findings = 0
    for _, finding in transcript.findings:
        counts[finding.rule.value] += 1
        if finding.severity == "fail":
            fail_findings += 1
        else:
            warn_findings += 1

    feedback_present = any(
        t.role is Role.ASSISTANT and "ADVICE MOVING FORWARD" in t.text
        for t in transcript.turns
    )
    final_chars = 0
    for turn in reversed(transcript.turns):
        if turn.role is Role.ASSISTANT:
            final_chars = len(turn.text)
            break

    if fail_findings or not budget_respected:
        verdict = "fail"
    elif warn_findings or not in_order:
        verdict = "warn"
    else:
        verdict = "pass"

    return AdherenceReport(
        spec_id=spec.id,
        steps_visited=tuple(visited),
        in_order=in_order,
        markers_seen=tuple(markers_seen),
        budget_respected=budget_respected,
        findings_count=tuple(sorted(counts.items())),
        fail_findings=fail_findings,
        feedback_format_present=feedback_present,
        final_assistant_chars=final_chars,
        verdict=verdict,
    )


# ------------------------------------------------------------------
# Cooperative dialogue builder
# ------------------------------------------------------------------

_STUDENT_FLAVOR = {
    "cooperative": "Here is some background: I've studied the material and I'm ready to apply it.",
    "proficient": "I have extensive experience with this material and want a real challenge.",
    "struggling": "I'm honestly not sure I understood the material, but I'll try my best.",
    "long_winded": (
        "Let me give you the full picture first. I've read everything twice, taken "
        "extensive notes, discussed it with two classmates, and I still want to go "
        "over every detail carefully before we begin, because context matters to me."
    ),
}


def _roleplay_pair(k: int) -> tuple[str, str]:
    return (
        f"Here is my move for this part of the scene, round {k}.",
        f"The scene develops in response to your move, round {k}.",
    )


def _chatter_pair(k: int) -> tuple[str, str]:
    return (
        f"Let me think out loud a little more, aside {k}.",
        f"Of course, take your time. Noted, aside {k}.",
    )


def cooperative_dialogue(
    spec: ExerciseSpec,
    *,
    persona: str = "cooperative",
    chatter_turns: int = 0,
) -> tuple[list[str], list[str]]:
    """Student lines and assistant replies that walk a spec's steps 1..N.

    The assistant side is written to stay finding-free and to fire each
    step's transition the way a well-behaved model would. ``chatter_turns``
    inserts extra exchange pairs into the largest-budget step (the
    loses_track row uses this to stretch a session).
    """
    student: list[str] = []
    assistant: list[str] = []
    background = _STUDENT_FLAVOR.get(persona, _STUDENT_FLAVOR["cooperative"])

    budgeted = [s for s in spec.steps if s.turn_budget is not None]
    chatter_step = (
        max(budgeted, key=lambda s: s.turn_budget.max_student_turns).index
        if budgeted
        else spec.final_step_index
    )

    def emit(user: str, reply: str) -> None:
        student.append(user)
        assistant.append(reply)

    for position, step in enumerate(spec.steps):
        rule = step.transition
        is_first = position == 0
        is_final = step.index == spec.final_step_index
        next_trigger = (
            spec.steps[position + 1].transition.trigger if not is_final else None
        )
        budget = step.turn_budget.max_student_turns if step.turn_budget else 0
        extra = chatter_turns if step.index == chatter_step else 0

        if rule.trigger is TransitionTrigger.INFO_GATHERED:
            if next_trigger is TransitionTrigger.STUDENT_CHOICE_MADE:
                emit(
                    "Hello! I'd like to work through this exercise.",
                    "1. Could you tell me about your experience level and anything else you'd like to share?",
                )
                emit(
                    background,
                    "Thanks, that helps. Here are three options to choose from:\n"
                    "1. A straightforward version of the scenario.\n"
                    "2. A more challenging version with higher stakes.\n"
                    "3. An unusual setting that tests the same ideas.\n"
                    "Which option would you like?",
                )
            else:
                emit(
                    "Hello! I'd like to work through this exercise.",
                    "Welcome! To tailor this well: what would you like to focus on, specifically?",
                )
                emit(background, "That sounds interesting. What is your experience level?")
                emit(
                    "I would call myself an intermediate learner.",
                    "Good to know. What do you already know about the topic?",
                )
                emit(
                    "I know the basic ideas but not the details.",
                    "Perfect, that gives me everything I need. Let us begin with a brief explanation and build from there.",
                )
        elif rule.trigger is TransitionTrigger.STUDENT_CHOICE_MADE:
            if is_first:
                emit(
                    "Hello! I'd like to work through this exercise.",
                    "Welcome! You can decide how this goes:\n"
                    "1. The first way of running the exercise.\n"
                    "2. The second way, with a different style.\n"
                    "Please choose a number.",
                )
            emit("1", "Great choice! Let me set everything up based on option 1.")
        elif rule.trigger is TransitionTrigger.ASSISTANT_MARKER:
            for k in range(1, budget + 1):
                user, reply = _roleplay_pair(k)
                if k == 1 and step.name == "BEGIN ROLE PLAY":
                    reply = "BEGIN ROLEPLAY\n" + reply
                elif k == 1 and rule.marker == "LESSON COMPLETE":
                    reply = "LET'S BEGIN\n" + reply
                emit(user, reply)
            for k in range(1, extra + 1):
                emit(*_chatter_pair(k))
            emit(*_marker_pair(rule.marker or ""))
        elif rule.trigger is TransitionTrigger.BUDGET_EXHAUSTED:
            for k in range(1, budget + 1):
                emit(*_roleplay_pair(k))
            for k in range(1, extra + 1):
                emit(*_chatter_pair(k))
            emit(
                "Here is my final, consequential decision for this part.",
                "A sound decision. This part of the exercise concludes here, well done.",
            )
        else:  # manual
            if not is_final:
                raise PlanError(
                    f"step {step.index} of {spec.id} has a manual transition before the final step"
                )
            emit(
                "Thank you, this was genuinely useful.",
                "You're welcome! I'm happy to keep talking about this scenario or answer anything else.",
            )
            for k in range(1, extra + 1):
                emit(*_chatter_pair(k))

    return student, assistant


def _marker_pair(marker: str) -> tuple[str, str]:
    if marker == "ADVICE MOVING FORWARD":
        return (
            "I'm ready for my feedback now.",
            "GENERAL FEEDBACK: You worked through the scenario with care; one thing "
            "to improve is pacing your key decisions.\n\n"
            "ADVICE MOVING FORWARD: Apply the lesson deliberately in real settings "
            "and review what worked afterwards.",
        )
    if marker == "BEGIN ROLE PLAY":
        return (
            "I'm ready, please set the scene.",
            "Here is everything you need for your part: your objective, your "
            "constraints, and what happens if no agreement is reached. "
            "BEGIN ROLE PLAY\nThe room falls quiet as your counterpart looks up and "
            "greets you with a cautious smile.",
        )
    if marker == "END OF SCENE":
        return (
            "I've done what I set out to do in this scene.",
            "SCENE closes around the character as they take your final advice to "
            "heart. END OF SCENE\nThat was a thoughtful piece of guidance.",
        )
    if marker == "LESSON COMPLETE":
        return (
            "That covers everything I wanted to teach you.",
            "I learned so much from you today. LESSON COMPLETE\nLet me reflect back "
            "on your teaching now.",
        )
    if marker == "CASE COMPLETE":
        return (
            "Please write the case draft now.",
            "Here is the draft case, built from everything you told me: a central "
            "issue, its context, the stakeholders, and a final ask. CASE COMPLETE",
        )
    if marker == "LET'S BEGIN":
        return (
            "I'd like to teach you about my topic.",
            "LET'S BEGIN\nI'm excited to learn from you.",
        )
    return (
        "I'm ready for the next part.",
        f"Acknowledged. {marker}\nMoving right along.",
    )


# ------------------------------------------------------------------
# Per-persona run construction
# ------------------------------------------------------------------


def _sequence_script(persona: str, lines: list[str]) -> StudentScript:
    return StudentScript(
        persona=persona,
        turns=tuple(ScriptTurn(text) for text in lines),
        max_turns=len(lines),
    )


def build_run(
    spec: ExerciseSpec, persona: str, *, chatter_turns: int = 0
) -> tuple[StudentScript, ScriptedModel]:
    """A paired (student script, scripted model) for one persona."""
    if persona in ("cooperative", "proficient", "struggling", "long_winded"):
        student, assistant = cooperative_dialogue(
            spec, persona=persona, chatter_turns=chatter_turns
        )
        return _sequence_script(persona, student), ScriptedModel(replies=tuple(assistant))

    if persona == "refuses_to_play":
        script = StudentScript(
            persona=persona,
            turns=(
                ScriptTurn("I don't want to do this exercise."),
                ScriptTurn("No. This feels pointless."),
                ScriptTurn("I refuse to participate."),
                ScriptTurn("Stop asking me things."),
                ScriptTurn("I'm done here."),
            ),
            max_turns=5,
        )
        model = ScriptedModel(
            rules=(
                ScriptRule(
                    ".*",
                    "I understand this might feel uncomfortable. Whenever you're "
                    "ready, we can pick the exercise back up together.",
                ),
            )
        )
        return script, model

    if persona == "asks_for_answer":
        script = StudentScript(
            persona=persona,
            turns=(
                ScriptTurn("Hi, I need help with this."),
                ScriptTurn("Just tell me the answer."),
                ScriptTurn("Please, give me the solution directly.", when="(?i)together|work|try"),
                ScriptTurn("Fine, I'll give it a shot."),
            ),
            max_turns=4,
        )
        # A deliberately misbehaving model: the monitors must flag it.
        model = ScriptedModel(
            rules=(
                ScriptRule("(?i)answer|solution", "The answer is 42. The solution is simple."),
                ScriptRule(".*", "Let's keep working on it together."),
            )
        )
        return script, model

    if persona == "argumentative":
        script = StudentScript(
            persona=persona,
            turns=(
                ScriptTurn("That setup is wrong."),
                ScriptTurn("I disagree with your whole framing."),
                ScriptTurn("You are not making sense."),
                ScriptTurn("This scenario is unrealistic.", when="(?i)exercise|scenario|moving"),
                ScriptTurn("Whatever, continue."),
            ),
            max_turns=5,
        )
        model = ScriptedModel(
            rules=(
                ScriptRule(
                    ".*",
                    "I hear you. Let's adjust what isn't working and keep the "
                    "exercise moving forward.",
                ),
            )
        )
        return script, model

    raise PlanError(f"unknown persona: {persona}")


@dataclass
class SessionRun:
    """Everything one scripted session produced."""

    transcript: Transcript
    report: AdherenceReport
    nudge_events: tuple[tuple[int, int], ...] = ()  # (step index, student turn)


def run_scripted_session(
    spec: ExerciseSpec,
    script: StudentScript,
    model: ModelHandle,
    *,
    bindings: dict[str, str] | None = None,
    temperature: float = 0.7,
) -> SessionRun:
    """Drive one full session from a student script and score it."""
    state = start_session(spec, bindings, temperature=temperature)
    nudges: list[tuple[int, int]] = []
    sent = 0
    last_assistant = ""
    for entry in script.turns:
        if sent >= script.max_turns or not state.is_active:
            break
        if entry.when is not None and re.search(entry.when, last_assistant) is None:
            continue
        response, nudge = run_exchange(state, model, entry.text)
        last_assistant = response.content
        sent += 1
        if nudge is not None:
            nudges.append((state.current_step, state.student_turns_in_step))
    transcript = end_session(state)
    return SessionRun(
        transcript=transcript,
        report=score_adherence(transcript, spec),
        nudge_events=tuple(nudges),
    )


# ------------------------------------------------------------------
# Battery
# ------------------------------------------------------------------


def _longest_budget(spec: ExerciseSpec) -> int:
    budgets = [s.turn_budget.max_student_turns for s in spec.steps if s.turn_budget]
    return max(budgets, default=2)


def _run_passes(row: str, record: RunRecord, spec: ExerciseSpec) -> bool:
    if record.report is None:
        return False
    report = record.report
    if row in ("works_as_intended", "consistency"):
        return report.verdict == "pass"
    if row in ("loses_track", "proficiency_levels"):
        return report.in_order
    if row in ("breaks_when_pushed", "edge_case"):
        return report.fail_findings == 0
    if row == "follows_steps":
        expected = set(spec.custom_markers())
        return report.in_order and expected <= set(report.markers_seen)
    if row == "output_quality":
        has_feedback_rule = any(
            c.kind is ConstraintKind.FEEDBACK_FORMAT for c in spec.constraints
        )
        if has_feedback_rule:
            return report.feedback_format_present
        return report.final_assistant_chars >= 80
    if row == "cross_model":
        return True  # judged in aggregate
    raise PlanError(f"unknown battery row: {row}")


def run_battery(plan: TestPlan, spec: ExerciseSpec | None = None) -> BatteryReport:
    """Execute the plan: repetitions x scripts per battery row.

    Model failures are recorded per run and the battery continues. Every
    row in the plan yields run records or an explicit skip entry.
    """
    if spec is None:
        spec = _catalog.get_exercise(plan.spec_id)
    if spec.id != plan.spec_id:
        raise PlanError(f"plan is for {plan.spec_id!r} but spec is {spec.id!r}")
    report = validate(spec)
    if not report.ok:
        raise PlanError("spec does not validate: " + "; ".join(report.rules()))

    runs: list[RunRecord] = []
    rows: list[RowResult] = []

    for row in plan.battery:
        personas = [p for p in ROW_PERSONAS[row] if p in plan.personas]
        if not personas:
            rows.append(RowResult(row=row, skipped=True, reason="no matching persona in plan"))
            continue
        if row == "cross_model" and len(plan.models) < 2:
            rows.append(RowResult(row=row, skipped=True, reason="needs two model configs"))
            continue
        model_labels = list(plan.models) if row == "cross_model" else [plan.models[0]]

        chatter = 3 * _longest_budget(spec) if row == "loses_track" else 0
        # Consistency runs want minimal variance from live providers.
        temperature = 0.0 if row == "consistency" else 0.7
        row_runs: list[RunRecord] = []
        for label_index, entry in enumerate(model_labels):
            base = "scripted" if entry == "scripted" else getattr(entry, "model_id", str(entry))
            model_label = f"{base}#{label_index}" if len(model_labels) > 1 else base
            for persona in personas:
                for repetition in range(plan.repetitions):
                    try:
                        script, scripted = build_run(spec, persona, chatter_turns=chatter)
                        model: ModelHandle = (
                            scripted if entry == "scripted" else HttpModel(entry)  # type: ignore[arg-type]
                        )
                        outcome = run_scripted_session(
                            spec, script, model, temperature=temperature
                        )
                        row_runs.append(
                            RunRecord(row, persona, model_label, repetition, report=outcome.report)
                        )
                    except Exception as exc:  # record and continue
                        row_runs.append(
                            RunRecord(row, persona, model_label, repetition, error=str(exc))
                        )
        runs.extend(row_runs)

        passes = sum(1 for r in row_runs if _run_passes(row, r, spec))
        rate = passes / len(row_runs) if row_runs else 0.0
        passed = rate >= plan.threshold
        if row == "consistency":
            reports = [r.report for r in row_runs if r.report is not None]
            passed = passed and len(set(reports)) <= 1 and len(reports) == len(row_runs)
        if row == "cross_model":
            by_label: dict[str, list[str]] = {}
            for r in row_runs:
                by_label.setdefault(r.model_label, []).append(
                    r.report.verdict if r.report else f"error:{r.error}"
                )
            verdict_sets = list(by_label.values())
            passed = all(v == verdict_sets[0] for v in verdict_sets)
            rate = 1.0 if passed else 0.0
        rows.append(RowResult(row=row, pass_rate=rate, passed=passed))

    return BatteryReport(
        spec_id=plan.spec_id,
        battery=plan.battery,
        repetitions=plan.repetitions,
        runs=tuple(runs),
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class Divergence:
    """Where two battery reports disagree."""

    rows: tuple[str, ...] = ()
    findings: tuple[tuple[str, tuple[int, int]], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.rows and not self.findings


def _row_verdicts(report: BatteryReport, row: str) -> list[str]:
    return [
        r.report.verdict if r.report is not None else f"error:{r.error}"
        for r in report.runs
        if r.row == row
    ]


def _finding_totals(report: BatteryReport) -> Counter[str]:
    totals: Counter[str] = Counter()
    for record in report.runs:
        if record.report is not None:
            for rule, count in record.report.findings_count:
                totals[rule] += count
    return totals


def diff_cross_model(report_a: BatteryReport, report_b: BatteryReport) -> Divergence:
    """Rows whose verdicts differ and finding rules whose counts differ.

    Symmetric up to labeling: diff(a, b) mirrors diff(b, a).
    """
    if report_a.spec_id != report_b.spec_id or report_a.battery != report_b.battery:
        raise PlanError("reports come from different plans")

    differing_rows = tuple(
        row
        for row in report_a.battery
        if _row_verdicts(report_a, row) != _row_verdicts(report_b, row)
    )
    totals_a = _finding_totals(report_a)
    totals_b = _finding_totals(report_b)
    differing_findings = tuple(
        (rule, (totals_a.get(rule, 0), totals_b.get(rule, 0)))
        for rule in sorted(set(totals_a) | set(totals_b))
        if totals_a.get(rule, 0) != totals_b.get(rule, 0)
    )
    return Divergence(rows=differing_rows, findings=differing_findings)


def render_battery_table(report: BatteryReport) -> str:
    """Human-readable battery summary, one line per row."""
    lines = [f"Battery report for {report.spec_id} (repetitions={report.repetitions})"]
    lines.append(f"{'row':<20} {'result':<8} {'pass rate':<10} note")
    for row in report.rows:
        if row.skipped:
            lines.append(f"{row.row:<20} {'SKIP':<8} {'-':<10} {row.reason}")
        else:
            status = "PASS" if row.passed else "FAIL"
            lines.append(f"{row.row:<20} {status:<8} {row.pass_rate:<10.2f}")
    verdicts = Counter(
        r.report.verdict for r in report.runs if r.report is not None
    )
    errors = sum(1 for r in report.runs if r.error is not None)
    summary = ", ".join(f"{k}={v}" for k, v in sorted(verdicts.items()))
    if errors:
        summary += f", errors={errors}"
    lines.append(f"runs: {len(report.runs)} ({summary})")
    return "\n".join(lines)
