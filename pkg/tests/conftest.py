import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=int(os.environ.get("VKLAB_HYPOTHESIS_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(key, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
        ACCEPTANCE_LINES[key] = line
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def _order(key):
    head, _, tail = str(key).partition(".")
    return (int(head) if head.isdigit() else 99, tail)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=_order):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
