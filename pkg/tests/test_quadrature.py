import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from valleyspec.quadrature import (QuadratureError, disk_power_integral_closed, disk_power_integral_quad,
                                   gk15, integrate, trapezoid_to)


def test_gk15_polynomial_exact():
    val, err = gk15(lambda x: x**20, 0.0, 1.0)
    assert abs(val - 1 / 21) < 1e-15


def test_endpoint_singularity():
    val, _ = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, abs_tol=1e-12, rel_tol=1e-12)
    assert abs(val - 2.0) < 1e-9


def test_reversed_limits():
    a, _ = integrate(np.exp, 0.0, 1.0)
    b, _ = integrate(np.exp, 1.0, 0.0)
    assert a == -b
    assert abs(a - (math.e - 1)) < 1e-12


@given(st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0]))
def test_disk_integral_closed_vs_quadrature(p):
    assert abs(disk_power_integral_closed(p) - disk_power_integral_quad(p)) < 1e-10


def test_disk_integral_p1():
    # int_0^1 (1 - r^2)^2 2 pi r dr = pi / 3
    assert abs(disk_power_integral_closed(1.0) - math.pi / 3) < 1e-15


def test_trapezoid_partial_cell():
    h = 0.1
    x = np.arange(30) * h
    # linear data: the piecewise-linear interpolant is exact
    assert abs(trapezoid_to(2 * x, h, 1.234) - 1.234**2) < 1e-13
    assert trapezoid_to(x, h, 0.0) == 0.0


def test_no_convergence_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0.0, 1.0, abs_tol=1e-15, rel_tol=0, max_panels=50)
