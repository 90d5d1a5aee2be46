import functools

import numpy as np
import pytest

from mslab.harmonic import AnalyticPoly
from mslab.modelspace import ModelSpace

# default characteristic functions, by Taylor coefficients
U_FUNCS = {
    "chi/2": [0, 0.5],
    "(chi+chi^2)/2": [0, 0.5, 0.5],
    "0.3+0.4chi": [0.3, 0.4],
    "chi": [0, 1],
    "0": [0],
}
NON_INNER = ["chi/2", "(chi+chi^2)/2", "0.3+0.4chi", "0"]
N_SWEEP = [16, 32, 64, 128]


@functools.lru_cache(maxsize=None)
def space_for(key, N):
    taylor = U_FUNCS.get(key, key)
    return ModelSpace(AnalyticPoly(np.array(taylor, dtype=complex)), N)


@pytest.fixture
def space():
    return space_for


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
