from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from roa_select.network import load_document

DATA = Path(__file__).parent / "data"

EXAMPLE1_A = np.array([[2.0, 1.0], [1.0, 1.0]])
EXAMPLE2_A = np.array(
    [
        [0.0, 0.0178, 0.3410, 0.5807],
        [0.0659, 0.0, 0.6175, 0.6207],
        [0.5694, 0.5547, 0.0, 0.5997],
        [0.4501, 0.0190, 0.0143, 0.0],
    ]
)

# (criterion, passed, detail) lines printed at the end of the session
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def spectrum_distance(a, b) -> float:
    """Largest distance in the best one-to-one matching of two eigenvalue lists."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert a.shape == b.shape
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def random_spd(rng, m, floor=0.1):
    g = rng.normal(size=(m, m))
    return g @ g.T + floor * np.eye(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example1():
    return load_document(DATA / "example1.json")


@pytest.fixture
def example2():
    return load_document(DATA / "example2.json")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
