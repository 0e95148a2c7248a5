from pathlib import Path

import numpy as np
import pytest

from seequant.codec import load_pgm

DATA = Path(__file__).parent / "data"
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20060626)


@pytest.fixture(scope="session")
def camera():
    return load_pgm((DATA / "camera64.pgm").read_bytes())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
