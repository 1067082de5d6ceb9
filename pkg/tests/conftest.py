import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alma_learning import AssignmentInstance

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EPS_TABLE = 0.001


@pytest.fixture
def adversarial_a():
    return AssignmentInstance(np.array([[1.0, 0.0, 0.75], [0.0, 0.75, 0.0], [1.0, 0.9, 0.25]]))


@pytest.fixture
def adversarial_b():
    return AssignmentInstance(np.array([[1.0, 0.9, 0.0], [0.0, 0.95, 0.9], [1.0, 0.9, 0.0]]))


@pytest.fixture
def fairness_table():
    return AssignmentInstance(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [1.0, 0.75, EPS_TABLE]]))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
