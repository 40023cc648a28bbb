import random

import pytest
from gmpy2 import mpq

from logphg import QI, ExactScalar


def pi(q2=2, c=1):
    """``c * pi^(q2/2)``."""
    return ExactScalar.pi_power(q2, c)


def q(a, b=1):
    return QI(mpq(a, b))


@pytest.fixture
def rng():
    return random.Random(1234)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
