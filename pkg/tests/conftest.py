import pytest
from hypothesis import settings

from wzwmps.lie_core import lie_algebra

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def a1():
    return lie_algebra("A1")


CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are repeated in the terminal summary."""

    def record(label, ok, detail=""):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
