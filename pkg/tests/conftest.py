import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("valleyspec", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("valleyspec")


@pytest.fixture(scope="session")
def harmonic_box():
    """Harmonic2D on [-8, 8]^2 at h = 0.05, lowest six eigenvalues via the sectors."""
    from valleyspec.operators import Harmonic2D
    from valleyspec.sectors import box_spectrum
    return box_spectrum(Harmonic2D(), 8.0, 0.05, 6, tol=1e-9).result


@pytest.fixture(scope="session")
def small_matrices():
    """A handful of assembled matrices below the dense-oracle limit."""
    from valleyspec.operators import (DIRICHLET, NEUMANN, CrossValley, Grid1D, Grid2D, HalfLinePower,
                                      Harmonic2D, ShiftedCross, Zero, assemble_1d, assemble_2d, assemble_horn)
    out = {
        "laplace1d": assemble_1d(Zero(), Grid1D(0.0, 1.0, 400)),
        "neumann1d": assemble_1d(Zero(), Grid1D(0.0, 1.0, 300, NEUMANN, NEUMANN)),
        "oscillator": assemble_1d(HalfLinePower(2.0), Grid1D(0.0, 8.0, 799, NEUMANN, DIRICHLET)),
        "harmonic2d": assemble_2d(Harmonic2D(), Grid2D((-6, 6), (-6, 6), 35, 35)),
        "cross": assemble_2d(CrossValley(2.0, 0.5), Grid2D((-5, 5), (-5, 5), 33, 33)),
        "mixed": assemble_2d(ShiftedCross(1.0), Grid2D((-3, 3), (-2, 2), 30, 25,
                                                       (NEUMANN, DIRICHLET, DIRICHLET, NEUMANN))),
        "horn": assemble_horn(3.0, 0.1)[0],
    }
    for A in out.values():
        assert A.dim <= 1500
    return out


_cache = {}


def cached(key, build):
    """Session-wide memo for spectra shared by unit and acceptance tests."""
    if key not in _cache:
        _cache[key] = build()
    return _cache[key]


def reference(p, lam, vectors=False):
    """L_p(lam) reference spectrum (k = 50) on the calibrated grid for p."""
    from valleyspec.bounds import REFERENCE_GRIDS
    from valleyspec.operators import CrossValley
    from valleyspec.sectors import box_spectrum
    R, h = REFERENCE_GRIDS[float(p)]
    return cached(("ref", p, lam, vectors),
                  lambda: box_spectrum(CrossValley(p, lam), R, h, 50, 1e-8, vectors))


def horn(lam, R, h, k, vectors=False):
    from valleyspec.horn import HornSpec, horn_spectrum
    return cached(("horn", lam, R, h, k, vectors),
                  lambda: horn_spectrum(HornSpec(lam, R, h), k, 1e-8, vectors))


def comparison(p):
    from valleyspec.weyl import comparison_spectrum
    return cached(("cmp", p), lambda: comparison_spectrum(p))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
