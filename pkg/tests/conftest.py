import math

import pytest
from hypothesis import HealthCheck, settings

from iterfix.expr import parse

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

LOG2 = math.log(2.0)
LAM = (0.9, 0.1)
DELTA = LOG2
M = 20 * LOG2 / 9
MSTAR = 2 * LOG2
I = (0.0, LOG2)
J = (1.0, 2.0)

G_SOURCE = "piece (0,1]: 1; piece [1,2]: 2^(x-1); piece [2,inf): 2^(log(2)/log(x))"
F_SOURCE = "piece (-inf,0]: 0; piece [0,log2]: (exp(x)-1)*log2; piece [log2,inf): log2^2/x"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def G_expr():
    return parse(G_SOURCE)


@pytest.fixture(scope="session")
def F_expr():
    return parse(F_SOURCE)
