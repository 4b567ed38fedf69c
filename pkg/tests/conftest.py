import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion (echoed in the terminal summary)."""

    def emit(cid: str, label: str, ok: bool, detail: str, seconds: float | None = None) -> bool:
        timing = f" [{seconds:.2f}s]" if seconds is not None else ""
        line = f"{'PASS' if ok else 'FAIL'}  {cid:<4} {label}: {detail}{timing}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
