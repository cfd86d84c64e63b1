"""Shared pytest plumbing: one summary line per acceptance criterion."""

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Record a single pass/fail line for one criterion, then assert it."""

    def record(criterion: int, name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        line = f"criterion {criterion} ({name}): {status}"
        if detail:
            line += f" [{detail}]"
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record
