"""Shared fixtures: collects one-line verdicts from the acceptance tests."""

import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion_line():
    """Callable that registers a pass/fail line for the terminal summary."""

    def note(line: str) -> None:
        _LINES.append(line)

    return note


def pytest_terminal_summary(terminalreporter, exitstatus):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
