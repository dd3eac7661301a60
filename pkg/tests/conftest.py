import numpy as np
import pytest

from colocnull.traceio import Session, SessionTable


@pytest.fixture
def four_sessions() -> SessionTable:
    """Two contacts: A-B at t=5 on L1, A-C at t=25 on L2."""
    return SessionTable([
        Session("A", 0, 10, "L1", "s"),
        Session("B", 5, 15, "L1", "s"),
        Session("C", 20, 30, "L2", "s"),
        Session("A", 25, 28, "L2", "s"),
    ])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20121127)


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
