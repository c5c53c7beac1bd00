import pytest

CRITERION_LINES = []


@pytest.fixture
def record_criterion():
    """Collect a criterion report so the terminal summary can list every verdict."""
    def record(rep):
        line = rep.line()
        CRITERION_LINES.append((rep.number, line))
        print(line)
        for c in rep.checks:
            mark = "ok  " if c.passed else "FAIL"
            print(f"    {mark} {c.name}: {c.measured!r} (expected {c.expected})")
        return rep
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
