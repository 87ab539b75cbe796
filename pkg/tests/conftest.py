import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number, passed, detail):
        _LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
