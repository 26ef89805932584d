import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# canonical benchmark pair
R1, R2, THETA = 0.9, 0.5, math.pi / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# PASS/FAIL lines recorded by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
