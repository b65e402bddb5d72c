import re

import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(label, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        lines.append((label, line))
        print(line)
        return ok

    return record


def _order(label):
    m = re.match(r"(\d+)(.*)", str(label))
    return (int(m.group(1)), m.group(2)) if m else (10**6, str(label))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: _order(t[0])):
            terminalreporter.write_line(line)
