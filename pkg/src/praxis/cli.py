"""Command-line interface.

The `run` command drives the exact same pipeline as the HTTP service, so
the whole system is exercisable from a terminal with no UI and, with
--scripted, no network or API key.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import catalog as _catalog
from .compiler import (
    BlueprintError,
    InterviewAnswers,
    compile_blueprint,
    compile_system_prompt,
)
from .exercises import ExerciseSpec, ParseError, parse_exercise
from .harness import BATTERY_ROWS, TestPlan, render_battery_table, run_battery
from .model_client import HttpModel, ProviderConfig, ScriptedModel
from .session import (
    SessionState,
    SessionStatus,
    end_session,
    enforce_budget,
    ingest_assistant_turn,
    start_session,
    submit_user_turn,
)
from .store import TranscriptStore, export_markdown

DATA_DIR_ENV = "PRAXIS_DATA_DIR"
API_KEY_ENV = "PRAXIS_API_KEY"


def _data_dir(override: str | None) -> Path:
    return Path(override or os.environ.get(DATA_DIR_ENV, "praxis_data"))


def _load_spec(ref: str) -> ExerciseSpec:
    """Resolve a catalog id or a path to an exercise document."""
    if ref in _catalog.CATALOG_IDS:
        return _catalog.get_exercise(ref)
    path = Path(ref)
    if not path.exists():
        raise SystemExit(f"error: {ref!r} is neither a catalog id nor a file")
    try:
        return parse_exercise(path.read_text(encoding="utf-8"))
    except ParseError as exc:
        raise SystemExit(f"error: {exc}")


def _parse_bindings(pairs: list[str]) -> dict[str, str]:
    bindings = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"error: --bind expects name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        bindings[name] = value
    return bindings


def cmd_compile(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    if args.bind:
        from .exercises import apply_customizations

        spec = apply_customizations(spec, _parse_bindings(args.bind))
    body = compile_system_prompt(spec).body
    if args.golden:
        golden_path = resources.files("praxis").joinpath(f"goldens/{spec.id}.prompt.txt")
        try:
            golden = golden_path.read_text(encoding="utf-8")
        except FileNotFoundError:
            print(f"no golden file for {spec.id}", file=sys.stderr)
            return 1
        if body == golden:
            print(f"{spec.id}: matches golden ({len(body.encode())} bytes)")
            return 0
        print(f"{spec.id}: DIFFERS from golden", file=sys.stderr)
        return 1
    print(body, end="")
    return 0


def _make_model(args: argparse.Namespace):
    if args.scripted:
        with open(args.scripted, encoding="utf-8") as fh:
            return ScriptedModel.from_dict(json.load(fh))
    if not os.environ.get(API_KEY_ENV):
        raise SystemExit(
            f"error: live runs need {API_KEY_ENV} set (or use --scripted <script.json>)"
        )
    return HttpModel(
        ProviderConfig(
            base_url=os.environ.get("PRAXIS_BASE_URL", "https://api.openai.com/v1"),
            auth_token_env=API_KEY_ENV,
            model_id=os.environ.get("PRAXIS_MODEL", "gpt-4o"),
        )
    )


def cmd_run(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    model = _make_model(args)
    state = start_session(
        spec,
        _parse_bindings(args.bind or []),
        hide_instructions=args.hide_instructions,
    )
    store = TranscriptStore(_data_dir(args.data_dir))
    print(f"session {state.session_id} on {spec.title!r} (Ctrl-D to end)")
    try:
        while state.is_active:
            try:
                line = input("you> ").strip()
            except EOFError:
                print()
                break
            if not line:
                continue
            request = submit_user_turn(state, line)
            try:
                response = model.complete(request)
            except Exception as exc:
                print(f"[model failure: {exc}]", file=sys.stderr)
                continue
            ingest_assistant_turn(state, response.content)
            enforce_budget(state)
            step = state.current_step
            print(f"ai [step {step}]> {response.content}\n")
    except KeyboardInterrupt:
        state.status = SessionStatus.ABORTED
        print("\naborted")
    transcript = end_session(state)
    store.save_session(transcript)
    print(f"saved transcript {transcript.session_id} ({len(transcript.turns)} turns)")
    return 0


def _plan_model(entry) -> str | ProviderConfig:
    if entry == "scripted":
        return "scripted"
    if isinstance(entry, dict):
        return ProviderConfig(**entry)
    raise SystemExit(f"error: plan model entries must be 'scripted' or a provider object, got {entry!r}")


def _load_plan(ref: str, repetitions: int | None) -> TestPlan:
    if ref in _catalog.CATALOG_IDS:
        return TestPlan(spec_id=ref, repetitions=repetitions or 1)
    path = Path(ref)
    if not path.exists():
        raise SystemExit(f"error: {ref!r} is neither a catalog id nor a plan file")
    obj = json.loads(path.read_text(encoding="utf-8"))
    threshold = obj.get("pass_threshold")
    plan = TestPlan(
        spec_id=obj["spec_id"],
        battery=tuple(obj.get("battery", BATTERY_ROWS)),
        repetitions=repetitions or int(obj.get("repetitions", 1)),
        personas=tuple(obj.get("personas", TestPlan.__dataclass_fields__["personas"].default)),
        models=tuple(_plan_model(m) for m in obj.get("models", ("scripted",))),
        pass_threshold=None if threshold is None else float(threshold),
    )
    return plan


def cmd_test(args: argparse.Namespace) -> int:
    plan = _load_plan(args.plan, args.repetitions)
    spec = None
    if plan.spec_id not in _catalog.CATALOG_IDS and args.spec_file:
        spec = _load_spec(args.spec_file)
    report = run_battery(plan, spec)
    print(render_battery_table(report))
    if args.json:
        Path(args.json).write_text(
            json.dumps(dataclasses.asdict(report), indent=2, ensure_ascii=False),
            encoding="utf-8",
        )
        print(f"wrote {args.json}")
    return 1 if report.any_fail_verdict else 0


_TUTOR_QUESTIONS = [
    ("topic", "Name one thing that you know really well and would like others to learn: "),
    ("key_elements", "What are the key elements of the topic? "),
    ("sticking_points", "What are common sticking points or misconceptions? "),
    ("examples_analogies", "What examples or analogies help when explaining it? "),
]
_TA_QUESTIONS = [
    ("task", "Name one task that you would like to speed up or automate: "),
    ("elements", "What specific elements should the output include? "),
    ("formatting", "Any formatting or organizing to apply? "),
    ("categorization", "How should different topics be categorized? "),
]


def cmd_blueprint(args: argparse.Namespace) -> int:
    kind = "tutor" if args.kind == "tutor" else "teaching_assistant"
    questions = _TUTOR_QUESTIONS if kind == "tutor" else _TA_QUESTIONS
    answers: dict[str, str] = {}
    for name, prompt_text in questions:
        provided = getattr(args, name, None)
        if provided is not None:
            answers[name] = provided
        elif args.non_interactive:
            answers[name] = ""
        else:
            # One question at a time, waiting for each answer.
            answers[name] = input(prompt_text).strip()
    try:
        prompt = compile_blueprint(kind, InterviewAnswers(**answers))
    except BlueprintError as exc:
        raise SystemExit(f"error: {exc}")
    print(prompt.rendered())
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    store = TranscriptStore(_data_dir(args.data_dir))
    transcript = store.load(args.session_id)
    document = export_markdown(transcript)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(document, end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app, scripted_model_factory

    if args.scripted:
        factory = scripted_model_factory(args.scripted)
    elif os.environ.get(API_KEY_ENV):
        config = ProviderConfig(
            base_url=os.environ.get("PRAXIS_BASE_URL", "https://api.openai.com/v1"),
            auth_token_env=API_KEY_ENV,
            model_id=os.environ.get("PRAXIS_MODEL", "gpt-4o"),
        )
        factory = lambda: HttpModel(config)  # noqa: E731
    else:
        factory = None
        print(f"warning: no {API_KEY_ENV} and no --scripted; sessions disabled", file=sys.stderr)
    app = create_app(data_dir=_data_dir(args.data_dir), model_factory=factory)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="praxis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="render an exercise to its system prompt")
    p.add_argument("spec", help="catalog id or path to an exercise JSON file")
    p.add_argument("--golden", action="store_true", help="compare against the golden file")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE", help="bind a slot")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("run", help="interactive chat session in the terminal")
    p.add_argument("spec")
    p.add_argument("--scripted", metavar="SCRIPT_JSON", help="use a scripted model")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE")
    p.add_argument("--hide-instructions", action="store_true")
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("test", help="run the prompt test battery")
    p.add_argument("plan", help="catalog id or path to a plan JSON file")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--spec-file", help="exercise file when the plan names a custom spec")
    p.add_argument("--json", metavar="OUT", help="also write the report as JSON")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("blueprint", help="interview and generate a prompt")
    p.add_argument("kind", choices=["tutor", "ta"])
    for name, _ in _TUTOR_QUESTIONS + _TA_QUESTIONS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name)
    p.add_argument("--non-interactive", action="store_true", help="skip unanswered questions")
    p.set_defaults(fn=cmd_blueprint)

    p = sub.add_parser("export", help="export a stored session as markdown")
    p.add_argument("session_id")
    p.add_argument("--out")
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scripted", metavar="SCRIPT_JSON")
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
