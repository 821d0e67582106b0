import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture
def model_1d():
    from l1sampling import DataTerm, TargetModel

    return TargetModel(2.7, 1.0, DataTerm.quadratic(np.array([[1.0]]), np.array([3.0])))


@pytest.fixture
def null_model():
    from l1sampling import DataTerm, TargetModel

    def make(d=1, lam=1.0, beta=1.0):
        return TargetModel(lam, beta, DataTerm.zero(d))

    return make


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
