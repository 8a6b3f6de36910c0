import pytest

from admweights import builtin, ccr_scores

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance criterion outcome for the end-of-run summary."""

    def _record(criterion: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((criterion, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {criterion}" + (f" -- {detail}" if detail else ""))


@pytest.fixture(scope="session")
def hospital():
    return builtin("hospital14")


@pytest.fixture(scope="session")
def bowlin():
    return builtin("bowlin15")


@pytest.fixture(scope="session")
def hospital_dea(hospital):
    return ccr_scores(hospital)


@pytest.fixture(scope="session")
def bowlin_dea(bowlin):
    return ccr_scores(bowlin)
