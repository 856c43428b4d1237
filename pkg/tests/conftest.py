import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_CRITERIA = {
    "test_golden_compilation": "golden compilation (8 catalog prompts, byte-exact, <1s)",
    "test_state_machine_traversal": "state-machine traversal (steps 1-6, nudge at turn 6, <5s)",
    "test_marker_robustness": "marker robustness (20 variants, SCENE collision set)",
    "test_constraint_monitors": "constraint monitors (30-turn corpus, 0 false negatives)",
    "test_blueprint_invariants": "blueprint invariants (1000 randomized interviews)",
    "test_battery_determinism": "battery determinism (N=20 identical, loses_track in order, <30s)",
    "test_persistence": "persistence (500 round-trips, 10k tokens, export determinism)",
    "test_offline_operation": "offline operation (no network, no API key)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    outcomes: dict[str, str] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            name = getattr(report, "location", ("", 0, ""))[2].split("[")[0]
            if name in ACCEPTANCE_CRITERIA:
                outcomes[name] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, label in ACCEPTANCE_CRITERIA.items():
        if name in outcomes:
            terminalreporter.write_line(f"{outcomes[name]:4}  {label}")


@pytest.fixture(scope="session")
def marker_fixtures() -> dict:
    return json.loads((FIXTURES / "marker_variants.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def constraint_corpus() -> list[dict]:
    return json.loads((FIXTURES / "constraint_corpus.json").read_text(encoding="utf-8"))["turns"]


@pytest.fixture()
def fixtures_dir() -> Path:
    return FIXTURES
