import numpy as np
import pytest

from mafd.hardy import AnalyticMatrixFn


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_poly(rng, p, q, degree, N=1024):
    return AnalyticMatrixFn.from_polynomial(crandn(rng, degree + 1, p, q), N)


def random_disk_point(rng, r=0.9):
    return r * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())


def random_hermitian(rng, n):
    X = crandn(rng, n, n)
    return 0.5 * (X + X.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
