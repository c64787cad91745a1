import math

import numpy as np
import pytest

from ghostdiff import (DetectorMap, GhostSetup, NSlit, build_grid, build_kernel,
                       gaussian_spectrum, make_beam_splitter)

WAVELENGTH = 500e-9
F3 = 0.5


@pytest.fixture
def small_grid():
    return build_grid(1e6, 257, WAVELENGTH)


@pytest.fixture
def double_slit():
    return NSlit(2, 10e-6, 50e-6)


@pytest.fixture
def bs50():
    return make_beam_splitter(1 / math.sqrt(2))


@pytest.fixture
def detector():
    return DetectorMap(F3, WAVELENGTH)


@pytest.fixture
def setup_factory(detector):
    """Build a GhostSetup from grid, aperture and spectrum parameters."""

    def make(grid, aperture, sigma_k=3e6, r=1 / math.sqrt(2), plane=1e-3, peak=1.0):
        kernel = build_kernel(grid, aperture, plane)
        spectrum = gaussian_spectrum(grid, peak, sigma_k)
        return GhostSetup(spectrum, make_beam_splitter(r), kernel, detector, 0.0, aperture)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def emit(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
