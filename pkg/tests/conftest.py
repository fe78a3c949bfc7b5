import pytest

from o2kms import solve_beta0

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def beta0():
    return solve_beta0(1e-10).midpoint


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
