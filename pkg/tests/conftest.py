import json
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden" / "oracle_values.json"

# Filled by test_acceptance.py and printed once at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def golden():
    return json.loads(GOLDEN.read_text())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
