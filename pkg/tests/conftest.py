import shutil

import numpy as np
import pytest

from fftcomp.formula import Algorithm
from fftcomp.loopir import ComplexLayout

ALGORITHMS = tuple(Algorithm)
LAYOUTS = tuple(ComplexLayout)

needs_cc = pytest.mark.skipif(
    not (shutil.which("cc") or shutil.which("gcc") or shutil.which("clang")),
    reason="no C compiler",
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def plans(max_n=256, radices=(2, 4, 16)):
    """(n, radix) pairs accepted by both planners."""
    out = []
    n = 2
    while n <= max_n:
        out.extend((n, r) for r in radices if n % r == 0)
        n *= 2
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_RESULTS: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
