"""HTTP service: sessions, streaming, transcripts, shares, blueprints."""
from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from praxis.catalog import get_exercise
from praxis.harness import cooperative_dialogue
from praxis.model_client import ScriptedModel, ScriptRule
from praxis.service import create_app


def scripted_factory(replies=None, rules=None):
    replies = tuple(replies or ())
    rules = tuple(ScriptRule(p, r) for p, r in (rules or []))

    def factory():
        return ScriptedModel(replies=replies, rules=rules)

    return factory


@pytest.fixture()
def client(tmp_path):
    app = create_app(
        data_dir=tmp_path / "data",
        model_factory=scripted_factory(rules=[(".*", "Understood. Tell me more.")]),
    )
    with TestClient(app) as c:
        yield c


def make_client(tmp_path, replies):
    app = create_app(data_dir=tmp_path / "data", model_factory=scripted_factory(replies=replies))
    return TestClient(app)


class TestBasics:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_list_exercises_includes_catalog(self, client):
        ids = [e["id"] for e in client.get("/exercises").json()]
        assert "negotiation" in ids and len(ids) >= 8

    def test_register_custom_exercise(self, client):
        doc = {
            "id": "custom_tutor",
            "title": "Custom",
            "kind": "tutor",
            "goal": "Teach chess.",
            "persona": "A tutor.",
            "narrative": "A chat.",
            "steps": [
                {"index": 1, "name": "TUTOR", "do": ["Teach."], "transition": {"trigger": "manual"}}
            ],
        }
        assert client.post("/exercises", json=doc).status_code == 201
        ids = [e["id"] for e in client.get("/exercises").json()]
        assert "custom_tutor" in ids

    def test_register_invalid_exercise(self, client):
        response = client.post("/exercises", json={"id": "nope"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "invalid_input"


class TestSessions:
    def test_create_session_on_catalog_exercise(self, client):
        response = client.post("/sessions", json={"exercise_id": "negotiation"})
        assert response.status_code == 201
        body = response.json()
        assert body["status"] == "active"
        assert body["exercise_id"] == "negotiation"

    def test_unknown_exercise_404(self, client):
        response = client.post("/sessions", json={"exercise_id": "ghost"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "not_found"

    def test_missing_required_binding_rejected(self, client):
        doc = {
            "id": "needs_slot",
            "title": "Custom",
            "kind": "tutor",
            "goal": "Teach {{subject}}.",
            "persona": "A tutor.",
            "narrative": "A chat.",
            "steps": [
                {"index": 1, "name": "TUTOR", "do": ["Teach."], "transition": {"trigger": "manual"}}
            ],
            "slots": [{"name": "subject", "required": True, "default": ""}],
        }
        client.post("/exercises", json=doc)
        response = client.post("/sessions", json={"exercise_id": "needs_slot"})
        assert response.status_code == 400

    def test_post_message_json(self, client):
        sid = client.post("/sessions", json={"exercise_id": "negotiation"}).json()["session_id"]
        response = client.post(f"/sessions/{sid}/messages", json={"text": "hello"})
        body = response.json()
        assert body["reply"] == "Understood. Tell me more."
        assert body["status"] == "active"
        assert body["step_index"] == 1

    def test_conflict_after_marker_wrap(self, tmp_path):
        # Single-step custom exercise that wraps on its final marker.
        doc = {
            "id": "one_shot",
            "title": "One shot",
            "kind": "tutor",
            "goal": "Say the marker.",
            "persona": "A mentor.",
            "narrative": "One exchange.",
            "steps": [
                {
                    "index": 1,
                    "name": "ONLY STEP",
                    "do": ["Declare LESSON COMPLETE."],
                    "transition": {"trigger": "assistant_marker", "marker": "LESSON COMPLETE"},
                }
            ],
        }
        with make_client(tmp_path, ["LESSON COMPLETE. Good work."]) as client:
            client.post("/exercises", json=doc)
            sid = client.post("/sessions", json={"exercise_id": "one_shot"}).json()["session_id"]
            first = client.post(f"/sessions/{sid}/messages", json={"text": "go"})
            assert first.json()["status"] == "wrapped"
            second = client.post(f"/sessions/{sid}/messages", json={"text": "more?"})
            assert second.status_code == 409
            assert second.json()["error"]["code"] == "conflict"

    def test_streamed_chunks_concatenate_to_stored_turn(self, client):
        sid = client.post("/sessions", json={"exercise_id": "negotiation"}).json()["session_id"]
        with client.stream(
            "POST", f"/sessions/{sid}/messages", json={"text": "hello", "stream": True}
        ) as response:
            assert response.headers["content-type"].startswith("text/event-stream")
            events = []
            for line in response.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[len("data: ") :]))
        deltas = [e["delta"] for e in events if "delta" in e]
        final = [e for e in events if e.get("done")][0]
        assert "".join(deltas) == final["text"]

        transcript = client.get(f"/sessions/{sid}/transcript").json()
        assert transcript["turns"][-1]["text"] == final["text"]


class TestTranscriptViews:
    def make_session(self, client, hide=False):
        return client.post(
            "/sessions", json={"exercise_id": "negotiation", "hide_instructions": hide}
        ).json()["session_id"]

    def test_instructor_view_has_trace_and_flags(self, client):
        sid = self.make_session(client)
        client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
        view = client.get(f"/sessions/{sid}/transcript", params={"viewer": "instructor"}).json()
        assert "step_trace" in view and "findings" in view and "annotations" in view
        assert view["turns"][0]["role"] == "system"

    def test_student_view_hides_system_prompt_when_configured(self, client):
        sid = self.make_session(client, hide=True)
        client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
        view = client.get(f"/sessions/{sid}/transcript", params={"viewer": "student"}).json()
        assert all(t["role"] != "system" for t in view["turns"])
        assert "step_trace" not in view

    def test_student_view_keeps_system_prompt_when_not_hidden(self, client):
        sid = self.make_session(client, hide=False)
        view = client.get(f"/sessions/{sid}/transcript", params={"viewer": "student"}).json()
        assert view["turns"][0]["role"] == "system"

    def test_share_token_aliases_direct_view(self, client):
        sid = self.make_session(client)
        client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
        token = client.post(f"/sessions/{sid}/share").json()["token"]
        shared = client.get(f"/share/{token}").json()
        direct = client.get(f"/sessions/{sid}/transcript", params={"viewer": "student"}).json()
        assert [t["text"] for t in shared["turns"]] == [t["text"] for t in direct["turns"]]
        assert shared["read_only"] is True
        assert "findings" not in shared and "annotations" not in shared

    def test_share_token_hides_system_prompt_when_configured(self, client):
        sid = self.make_session(client, hide=True)
        client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
        token = client.post(f"/sessions/{sid}/share").json()["token"]
        shared = client.get(f"/share/{token}").json()
        assert all(t["role"] != "system" for t in shared["turns"])

    def test_unknown_share_token_404(self, client):
        assert client.get("/share/bogus").status_code == 404

    def test_annotations_round_trip(self, client):
        sid = self.make_session(client)
        client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
        response = client.post(
            f"/sessions/{sid}/annotations",
            json={"author": "prof", "turn_ordinal": 1, "note": "good opener"},
        )
        assert response.status_code == 201
        view = client.get(f"/sessions/{sid}/transcript").json()
        assert view["annotations"][0]["note"] == "good opener"

    def test_out_of_bounds_annotation_rejected(self, client):
        sid = self.make_session(client)
        response = client.post(
            f"/sessions/{sid}/annotations",
            json={"author": "prof", "turn_ordinal": 42, "note": "nope"},
        )
        assert response.status_code == 400


class TestBlueprintEndpoint:
    def test_tutor_blueprint(self, client):
        response = client.post(
            "/blueprints",
            json={"kind": "tutor", "answers": {"topic": "startup pitching"}},
        )
        body = response.json()
        assert body["opener"].startswith("You are an AI tutor and your job is to help the user")
        assert body["rendered"].startswith("```")

    def test_ta_blueprint_closer(self, client):
        response = client.post(
            "/blueprints",
            json={"kind": "ta", "answers": {"task": "draft grading rubrics"}},
        )
        assert response.json()["closer"] == "this is a draft. Please adjust so that it works for you."

    def test_empty_topic_rejected(self, client):
        response = client.post("/blueprints", json={"kind": "tutor", "answers": {}})
        assert response.status_code == 400


class TestFullCooperativeSessionOverHttp:
    def test_negotiation_end_to_end(self, tmp_path):
        spec = get_exercise("negotiation")
        student, assistant = cooperative_dialogue(spec)
        with make_client(tmp_path, assistant) as client:
            sid = client.post("/sessions", json={"exercise_id": "negotiation"}).json()["session_id"]
            last = {}
            for text in student:
                last = client.post(f"/sessions/{sid}/messages", json={"text": text}).json()
            assert last["step_index"] == 6
            view = client.get(f"/sessions/{sid}/transcript").json()
            steps = [t["step_index"] for t in view["turns"]]
            assert sorted(set(steps)) == [1, 2, 3, 4, 5, 6]


class TestOverLengthRecovery:
    def test_length_reply_triggers_summarize_and_retry(self, tmp_path):
        from praxis.model_client import ChatResponse, FinishReason

        class OverflowingModel:
            """First completion overflows; later calls succeed."""

            def __init__(self):
                self.calls = 0

            def complete(self, request):
                self.calls += 1
                if self.calls <= 2:
                    return ChatResponse(content=f"reply {self.calls}")
                if self.calls == 3:
                    return ChatResponse(content="trunca", finish_reason=FinishReason.LENGTH)
                if self.calls == 4:
                    return ChatResponse(content="compact summary of earlier turns")
                return ChatResponse(content="full reply after summarizing")

        model = OverflowingModel()
        app = create_app(data_dir=tmp_path / "data", model_factory=lambda: model)
        with TestClient(app) as client:
            sid = client.post("/sessions", json={"exercise_id": "tutor"}).json()["session_id"]
            client.post(f"/sessions/{sid}/messages", json={"text": "one"})
            client.post(f"/sessions/{sid}/messages", json={"text": "two"})
            third = client.post(f"/sessions/{sid}/messages", json={"text": "three"}).json()
        assert third["reply"] == "full reply after summarizing"
        assert model.calls == 5  # 2 ok, 1 overflow, 1 summary, 1 retry

    def test_overflow_on_first_message_keeps_partial(self, tmp_path):
        from praxis.model_client import ChatResponse, FinishReason

        class AlwaysLong:
            def complete(self, request):
                return ChatResponse(content="partial...", finish_reason=FinishReason.LENGTH)

        app = create_app(data_dir=tmp_path / "data", model_factory=AlwaysLong)
        with TestClient(app) as client:
            sid = client.post("/sessions", json={"exercise_id": "tutor"}).json()["session_id"]
            body = client.post(f"/sessions/{sid}/messages", json={"text": "hi"}).json()
        assert body["reply"] == "partial..."  # nothing to elide yet
