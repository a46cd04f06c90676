import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from toric_soliton import catalog  # noqa: E402
from toric_soliton.polytope import dual_polytope, parse_polytope  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def duals():
    return {name: dual_polytope(parse_polytope(doc)) for name, doc in catalog.CATALOG.items()}


def random_unimodular(rng: np.random.Generator, steps: int = 4) -> list[list[int]]:
    """Random product of GL(2,Z) generators, entries kept small."""
    gens = [
        np.array([[1, 1], [0, 1]]), np.array([[1, -1], [0, 1]]),
        np.array([[1, 0], [1, 1]]), np.array([[1, 0], [-1, 1]]),
        np.array([[0, 1], [1, 0]]), np.array([[-1, 0], [0, 1]]),
    ]
    m = np.eye(2, dtype=int)
    for _ in range(steps):
        cand = gens[rng.integers(len(gens))] @ m
        if np.abs(cand).max() <= 3:
            m = cand
    return m.tolist()


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
