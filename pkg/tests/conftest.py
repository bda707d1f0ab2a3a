import numpy as np
import pytest

from emchannel.geometry import MediumParams


@pytest.fixture
def medium():
    return MediumParams(wavelength=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one summary line per acceptance item, then assert it."""

    def record(number, name, ok, detail):
        ACCEPTANCE_LINES.append((number, f"[{'PASS' if ok else 'FAIL'}] {number:2d} {name}: {detail}"))
        print(ACCEPTANCE_LINES[-1][1])
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
