"""Prompt compilation, golden files, blueprints, and nudges."""
from __future__ import annotations

import dataclasses
import json
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from praxis.catalog import CATALOG_IDS, builtin_catalog, get_exercise
from praxis.compiler import (
    TA_CLOSER,
    TA_OPENER_PREFIX,
    TUTOR_OPENER_PREFIX,
    BlueprintError,
    CompileError,
    InterviewAnswers,
    build_nudge,
    compile_blueprint,
    compile_system_prompt,
    render_tutor_proactivity_rule,
)
from praxis.constraints import DriftIssue
from praxis.exercises import apply_customizations, parse_exercise


def golden(spec_id: str) -> str:
    return (
        resources.files("praxis").joinpath(f"goldens/{spec_id}.prompt.txt").read_text("utf-8")
    )


class TestSystemPrompt:
    @pytest.mark.parametrize("spec_id", CATALOG_IDS)
    def test_catalog_matches_golden_bytes(self, spec_id):
        body = compile_system_prompt(get_exercise(spec_id)).body
        assert body == golden(spec_id), f"{spec_id} drifted from its golden file"

    def test_negotiation_contains_source_lines(self):
        body = compile_system_prompt(get_exercise("negotiation")).body
        assert "STEP 1: GATHER INFORMATION" in body
        assert "Proclaim BEGIN ROLE PLAY and describe the scene" in body
        assert body.startswith("GOAL: This is a role-playing scenario")

    def test_section_order_is_fixed(self):
        body = compile_system_prompt(get_exercise("negotiation")).body
        positions = [body.index(h) for h in ("GOAL:", "PERSONA:", "NARRATIVE:", "Follow these steps in order:", "STEP 1:", "LESSON:")]
        assert positions == sorted(positions)

    def test_spec_without_lesson_has_no_lesson_heading(self):
        body = compile_system_prompt(get_exercise("tutor")).body
        assert "LESSON:" not in body
        assert body.rstrip().endswith("further questions.")

    def test_compilation_is_deterministic(self):
        spec = get_exercise("co_create_case")
        assert compile_system_prompt(spec).body == compile_system_prompt(spec).body

    def test_lf_line_endings_only(self):
        for spec in builtin_catalog():
            assert "\r" not in compile_system_prompt(spec).body

    def test_byte_length_matches_body(self):
        prompt = compile_system_prompt(get_exercise("teach_ai"))
        assert prompt.byte_length == len(prompt.body.encode("utf-8"))

    def test_bindings_change_slot_text_only_never_structure(self):
        spec = get_exercise("negotiation")
        default = compile_system_prompt(spec).body
        bound = compile_system_prompt(
            apply_customizations(spec, {"topic": "salary negotiations"})
        ).body
        skeleton = lambda text: [  # noqa: E731
            line for line in text.splitlines() if line.startswith(("STEP", "You should", "Next step:"))
        ]
        assert skeleton(default) == skeleton(bound)
        assert "salary negotiations" in bound

    def test_unbound_required_slot_raises(self):
        doc = {
            "id": "custom",
            "title": "Custom",
            "kind": "tutor",
            "goal": "Teach {{subject}}.",
            "persona": "A tutor.",
            "narrative": "A chat.",
            "steps": [{"index": 1, "name": "TUTOR", "do": ["Teach."], "transition": {"trigger": "manual"}}],
            "slots": [{"name": "subject", "required": True, "default": ""}],
        }
        with pytest.raises(CompileError, match="required"):
            compile_system_prompt(parse_exercise(json.dumps(doc)))

    def test_no_unexpanded_placeholder_in_output(self):
        for spec in builtin_catalog():
            assert "{{" not in compile_system_prompt(spec).body


answers_strategy = st.builds(
    InterviewAnswers,
    topic=st.text(min_size=1, max_size=40).filter(lambda s: s.strip()),
    key_elements=st.text(max_size=60),
    sticking_points=st.text(max_size=60),
    examples_analogies=st.text(max_size=60),
    task=st.text(min_size=1, max_size=40).filter(lambda s: s.strip()),
    elements=st.text(max_size=60),
    formatting=st.text(max_size=60),
    categorization=st.text(max_size=60),
)

# Mix plain text with deliberate injections of the forbidden phrase.
poisoned = st.sampled_from(
    [
        "learning styles",
        "Learning Styles matter",
        "use LEARNING  STYLES theory",
        "learning styles and learning styles",
        "visual learning\tstyles",
    ]
)
poisoned_answers = st.builds(
    InterviewAnswers,
    topic=st.one_of(st.just("startup pitching"), poisoned),
    key_elements=st.one_of(st.text(max_size=40), poisoned),
    sticking_points=st.one_of(st.text(max_size=40), poisoned),
    examples_analogies=st.one_of(st.text(max_size=40), poisoned),
    task=st.one_of(st.just("grading rubrics"), poisoned),
    elements=st.one_of(st.text(max_size=40), poisoned),
    formatting=st.one_of(st.text(max_size=40), poisoned),
    categorization=st.one_of(st.text(max_size=40), poisoned),
)


class TestBlueprints:
    def test_tutor_example_interview(self):
        prompt = compile_blueprint(
            "tutor",
            InterviewAnswers(
                topic="startup pitching",
                key_elements="product name, category, target market",
                sticking_points="being too vague or saying everything at once",
                examples_analogies="pitching is like telling a story",
            ),
        )
        assert prompt.opener.startswith(TUTOR_OPENER_PREFIX)
        assert "startup pitching" in prompt.body
        assert "What do you already know" in prompt.body
        assert "not a good strategy" in prompt.body
        assert prompt.fenced

    def test_ta_example_interview(self):
        prompt = compile_blueprint(
            "teaching_assistant",
            InterviewAnswers(
                task="create takeaway documents from recorded lectures",
                elements="key questions and points",
                formatting="bullet points under each category",
                categorization="the topics discussed",
            ),
        )
        assert prompt.opener.startswith(TA_OPENER_PREFIX)
        assert prompt.closer == TA_CLOSER
        assert "Step 1:" in prompt.body and "Step 5:" in prompt.body

    def test_rendered_prompt_is_fenced(self):
        prompt = compile_blueprint("tutor", InterviewAnswers(topic="chess"))
        rendered = prompt.rendered()
        assert rendered.startswith("```\n")
        assert "\n```" in rendered

    def test_forbidden_phrase_filtered_and_logged(self, caplog):
        with caplog.at_level("WARNING"):
            prompt = compile_blueprint(
                "tutor",
                InterviewAnswers(topic="pedagogy", key_elements="learning styles for everyone"),
            )
        assert "learning styles" not in prompt.rendered().lower()
        assert any("filtered" in r.message for r in caplog.records)

    @pytest.mark.parametrize("kind", ["tutor", "teaching_assistant"])
    def test_empty_subject_rejected(self, kind):
        with pytest.raises(BlueprintError):
            compile_blueprint(kind, InterviewAnswers(topic="  ", task="  "))

    def test_unknown_kind_rejected(self):
        with pytest.raises(BlueprintError):
            compile_blueprint("sommelier", InterviewAnswers(topic="wine"))

    @settings(max_examples=300, deadline=None)
    @given(answers=answers_strategy, kind=st.sampled_from(["tutor", "teaching_assistant"]))
    def test_invariants_over_random_answers(self, answers, kind):
        prompt = compile_blueprint(kind, answers)
        assert prompt.fenced is True
        if kind == "tutor":
            assert prompt.opener.startswith(TUTOR_OPENER_PREFIX)
        else:
            assert prompt.opener.startswith(TA_OPENER_PREFIX)
            assert prompt.closer == TA_CLOSER
        assert "learning styles" not in prompt.rendered().lower()

    @settings(max_examples=300, deadline=None)
    @given(answers=poisoned_answers, kind=st.sampled_from(["tutor", "teaching_assistant"]))
    def test_forbidden_phrase_never_survives(self, answers, kind):
        # A subject that scrubs down to nothing is refused outright; any
        # prompt that does come back must be clean.
        try:
            rendered = compile_blueprint(kind, answers).rendered()
        except BlueprintError:
            return
        assert "learning styles" not in " ".join(rendered.lower().split())


class TestNudges:
    def test_mapping_total_over_enum(self):
        for issue in DriftIssue:
            assert build_nudge(issue).text.strip()

    def test_loop_nudge_restates_step_goal(self):
        step = get_exercise("negotiation").step(4)
        nudge = build_nudge(DriftIssue.LOOP, step)
        assert "BEGIN ROLE PLAY" in nudge.text
        assert "Play their counterpart in the negotiation." in nudge.text

    def test_multi_question_nudge_wording(self):
        text = build_nudge(DriftIssue.MULTI_QUESTION).text.lower()
        assert "ask only one question at a time" in text

    def test_nudge_carries_its_issue(self):
        assert build_nudge(DriftIssue.REFUSAL).issue is DriftIssue.REFUSAL


class TestProactivityRule:
    def test_opening_words(self):
        assert render_tutor_proactivity_rule().startswith(
            "Rule: Never ask the student if they understand"
        )

    def test_byte_stable_across_calls(self):
        assert render_tutor_proactivity_rule() == render_tutor_proactivity_rule()

    def test_appending_fragment_leaves_prompt_bytes_unchanged(self):
        base = compile_system_prompt(get_exercise("tutor")).body
        combined = base + "\n" + render_tutor_proactivity_rule() + "\n"
        assert combined.startswith(base)
        assert combined[len(base) :] == "\n" + render_tutor_proactivity_rule() + "\n"
