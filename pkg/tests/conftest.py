import numpy as np
import pytest

from qhistories import operators as ops


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def ket0():
    return ops.ket(0, 2)


def plus():
    return ops.qubit_basis("x")[:, 0]


def proj(v):
    return ops.projector_onto(v)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
