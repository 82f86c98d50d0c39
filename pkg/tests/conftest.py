import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def report_criterion():
    """Record one ``PASS``/``FAIL`` line for the acceptance summary."""
    def record(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _CRITERIA.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
