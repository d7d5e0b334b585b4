import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def phase_aligned(a, b):
    """b rotated by the global phase that best matches it to a."""
    a = np.asarray(a)
    b = np.asarray(b)
    ov = np.vdot(b.reshape(-1), a.reshape(-1))
    return b * (ov / abs(ov) if abs(ov) > 0 else 1.0)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
