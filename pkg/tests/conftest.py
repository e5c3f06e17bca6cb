import numpy as np
import pytest

from causalqft.tensor_core import LabeledOperator, LabeledVector, SpaceLabel


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_vec(rng, labels):
    size = int(np.prod([lab.dim for lab in labels]))
    return LabeledVector(tuple(labels), crandn(rng, size))


def rand_hermitian(rng, d):
    a = crandn(rng, d, d)
    return (a + a.conj().T) / 2


def sys_op(m):
    m = np.asarray(m, dtype=complex)
    return LabeledOperator.on(SpaceLabel("sys", len(m)), m)


@pytest.fixture
def rng():
    return np.random.default_rng(20180327)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
