import sys

import numpy as np
import pytest

from ultrasphere.quadrature import build_quadrature
from ultrasphere.sphharm import build_basis


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3, 8)


@pytest.fixture(scope="session")
def quad3():
    return build_quadrature(3, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gaussian(X):
    return np.exp(-np.sum(X * X, axis=-1))


def random_unit(rng, m, n):
    X = rng.standard_normal((m, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, line = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key:2d}: {line}")
