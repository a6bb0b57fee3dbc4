import warnings

import pytest

from blockade.lindblad import TruncationWarning

_criteria: dict = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    """Log one checked clause of an acceptance criterion for the summary table."""
    _criteria.setdefault(criterion, []).append((part, bool(ok), detail))


@pytest.fixture
def criterion():
    return record


@pytest.fixture(autouse=True)
def _quiet_truncation():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        parts = _criteria[n]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        body = "; ".join(f"{p} {'ok' if ok else 'FAILED'} ({d})" for p, ok, d in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {body}")
