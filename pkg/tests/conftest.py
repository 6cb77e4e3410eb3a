import pytest

from stochstream.trace import builtin_table1

# Acceptance outcomes, filled by test_acceptance and echoed after the run.
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def table():
    return builtin_table1()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
