"""praxis: compile, run, and regression-test AI practice exercises.

The package turns declarative exercise specs into system prompts, runs
instrumented chat sessions that track steps, markers, budgets, and
constraint findings, generates new prompts from blueprint interviews, and
scores whole sessions with an offline test battery.
"""

from .catalog import CATALOG_IDS, builtin_catalog, get_exercise
from .compiler import (
    GeneratedPrompt,
    InterviewAnswers,
    NudgeText,
    PromptText,
    build_nudge,
    compile_blueprint,
    compile_system_prompt,
    render_tutor_proactivity_rule,
)
from .constraints import ConstraintFinding, DriftIssue, check_constraints
from .exercises import (
    ConstraintKind,
    ConstraintRule,
    CustomizationSlot,
    ExerciseKind,
    ExerciseSpec,
    StepSpec,
    TransitionRule,
    TransitionTrigger,
    TurnBudget,
    ValidationReport,
    apply_customizations,
    parse_exercise,
    serialize_exercise,
    validate,
)
from .harness import (
    AdherenceReport,
    BatteryReport,
    StudentScript,
    TestPlan,
    diff_cross_model,
    run_battery,
    score_adherence,
)
from .markers import MARKER_CATALOG, Marker, detect_markers
from .model_client import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    ProviderConfig,
    ScriptedModel,
    complete,
    scripted_next,
    stream_complete,
)
from .session import (
    SessionState,
    end_session,
    enforce_budget,
    ingest_assistant_turn,
    start_session,
    submit_user_turn,
    summarize_history,
)
from .store import ShareToken, TranscriptStore, export_markdown
from .transcripts import Annotation, Transcript, Turn

__version__ = "0.1.0"
