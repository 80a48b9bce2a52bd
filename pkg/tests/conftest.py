import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def record_acceptance(criterion, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[acceptance] criterion {criterion}: {status} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
