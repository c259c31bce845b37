import pytest

from arbcsim import battery

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_trajectory():
    return battery.profile_trajectory(battery.ProfileParams(), 1.0 / 3600.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
