import pytest

_REPORT = []


@pytest.fixture
def report():
    """Record one acceptance line: report(tag, ok, detail)."""

    def add(tag, ok, detail=""):
        line = f"{tag}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        _REPORT.append(line)
        print(line)
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
