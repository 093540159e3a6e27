import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":").split("/")[0]), s)):
            terminalreporter.write_line(line)
