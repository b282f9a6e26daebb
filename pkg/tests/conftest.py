import math

import numpy as np
import pytest
from hypothesis import settings

from hybridqc.analytic import CoherentDephasingWalk, DephasingWalk

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

FIG3_UP = math.sqrt(1 / 20) * (3 - 1j)
FIG3_DN = (1 + 1j) / 2

ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail):
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] "
                                     f"{title}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def example1():
    return DephasingWalk(phi=1.0, gamma=0.5)


@pytest.fixture
def example2():
    return CoherentDephasingWalk(phi=1.0, gamma=0.5, lambda_up=FIG3_UP, lambda_dn=FIG3_DN)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
