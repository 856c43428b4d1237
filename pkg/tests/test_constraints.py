"""Constraint monitors against the hand-labeled 30-turn corpus."""
from __future__ import annotations

from praxis.constraints import check_constraints, count_terminal_questions
from praxis.exercises import ConstraintKind, ConstraintRule


def rules_for(names: list[str]) -> list[ConstraintRule]:
    return [ConstraintRule(kind=ConstraintKind(name)) for name in names]


def flagged(text: str, names: list[str]) -> set[str]:
    return {f.rule.value for f in check_constraints(text, rules_for(names))}


class TestCorpus:
    def test_corpus_has_thirty_turns(self, constraint_corpus):
        assert len(constraint_corpus) == 30

    def test_question_counter_matches_manual_counts(self, constraint_corpus):
        for turn in constraint_corpus:
            assert count_terminal_questions(turn["text"]) == turn["manual_question_count"], turn["id"]

    def test_multi_question_rule_has_zero_false_negatives(self, constraint_corpus):
        for turn in constraint_corpus:
            if "one_question_per_turn" not in turn["rules"]:
                continue
            hit = "one_question_per_turn" in flagged(turn["text"], turn["rules"])
            if turn["manual_question_count"] > 1:
                assert hit, f"turn {turn['id']} must be flagged"

    def test_findings_match_labels_exactly(self, constraint_corpus):
        for turn in constraint_corpus:
            assert flagged(turn["text"], turn["rules"]) == set(turn["expected"]), turn["id"]

    def test_feedback_turns_without_advice_heading_always_flagged(self, constraint_corpus):
        for turn in constraint_corpus:
            if "feedback_format" not in turn["rules"]:
                continue
            if "ADVICE MOVING FORWARD" not in turn["text"]:
                assert "feedback_format" in flagged(turn["text"], turn["rules"]), turn["id"]


class TestEvidence:
    def test_multi_question_evidence_is_substring_containing_both(self):
        text = "1. What is your experience? 2. What is your role?"
        findings = check_constraints(text, rules_for(["one_question_per_turn"]))
        assert len(findings) == 1
        evidence = findings[0].evidence
        assert evidence in text
        assert evidence.count("?") == 2

    def test_every_evidence_is_substring_of_turn(self, constraint_corpus):
        for turn in constraint_corpus:
            for finding in check_constraints(turn["text"], rules_for(turn["rules"])):
                assert finding.evidence in turn["text"], turn["id"]

    def test_heuristic_rules_are_warn_only(self):
        severe = [
            ConstraintRule(kind=ConstraintKind.NO_ANSWER_GIVING, severity="fail"),
            ConstraintRule(kind=ConstraintKind.NO_SELF_BEHAVIOR_DESCRIPTION, severity="fail"),
        ]
        findings = check_constraints("The answer is 42. I am programmed to say so.", severe)
        assert findings and all(f.severity == "warn" for f in findings)

    def test_declared_severity_respected_for_exact_rules(self):
        rule = ConstraintRule(kind=ConstraintKind.ONE_QUESTION_PER_TURN, severity="fail")
        findings = check_constraints("Why? How?", [rule])
        assert [f.severity for f in findings] == ["fail"]


class TestQuestionCounting:
    def test_question_run_counts_once(self):
        assert count_terminal_questions("Really???") == 1

    def test_closing_quote_and_paren_are_terminal(self):
        assert count_terminal_questions('He said "why?") and left.') == 1

    def test_fenced_code_ignored(self):
        assert count_terminal_questions("```\nwhat?\n```") == 0

    def test_inline_code_ignored(self):
        assert count_terminal_questions("see `foo?` for details") == 0
