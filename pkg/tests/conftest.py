import numpy as np
import pytest

from twistedqkd.field import GridSpec

WAIST = 1e-3
WAVELENGTH = 635e-9

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def grid128():
    return GridSpec.for_waist(WAIST, WAVELENGTH, samples_per_side=128)


@pytest.fixture(scope="session")
def grid256():
    return GridSpec.for_waist(WAIST, WAVELENGTH, samples_per_side=256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
