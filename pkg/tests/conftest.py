import numpy as np
import pytest

from ensc.core import ElasticNetProblem, normalize_columns


def random_problem(rng, D, N, lam, gamma):
    A = rng.standard_normal((D, N))
    b = rng.standard_normal(D)
    return ElasticNetProblem(b / np.linalg.norm(b), normalize_columns(A), lam, gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
