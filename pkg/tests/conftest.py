import pytest

_RESULTS = []


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, criterion: int, ok: bool, detail: str) -> None:
        _RESULTS.append((criterion, "PASS" if ok else "FAIL", detail))


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in sorted(_RESULTS):
        terminalreporter.write_line(f"criterion {criterion}: {status}  {detail}")
