import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from valleyspec.gamma import (E_TARGET, ResolutionError, compute_bracketed_gamma, compute_gamma,
                              delta_of_epsilon, gamma_curve, p_grid, read_gamma_csv, richardson,
                              tail_length, write_gamma_csv)


def test_gamma_2_is_one():
    g = compute_gamma(2.0)
    assert abs(g.gamma - 1.0) < 1e-5
    assert not g.accuracy_miss


def test_gamma_at_reported_minimum():
    assert abs(compute_gamma(1.788).gamma - 0.998995) < 1e-4


def test_gamma_quartic_reference():
    # -u'' + t^4 ground state, tabulated 1.0603620904841829...
    assert abs(compute_gamma(4.0).gamma - 1.0603620904841829) < 1e-6


def test_gamma_airy_oracle():
    # p = 1: even ground state of -u'' + |t| sits at the first zero of Ai'
    a1 = float(mpmath.airyaizero(1, derivative=1))
    assert abs(compute_gamma(1.0).gamma + a1) < 1e-6


def test_gamma_steep_limit():
    g = compute_gamma(200.0)
    assert abs(g.gamma / E_TARGET - 1) < 0.1
    assert g.gamma < E_TARGET


def test_truncation_insensitivity():
    g = compute_gamma(3.0)
    from valleyspec.gamma import _half_line
    n = int(round(2 * g.T_used / g.h_used)) - 1
    assert abs(_half_line(3.0, 2 * g.T_used, n) - _half_line(3.0, g.T_used, int(round(g.T_used / g.h_used)) - 1)) \
        <= max(g.err_est, 1e-12)


def test_curve_examples():
    curve = gamma_curve([1, 1.5, 1.788, 2, 3, 5, 10])
    vals = {q.p: q.gamma for q in curve.points}
    assert curve.argmin == 1.788
    assert vals[2.0] > vals[1.788]
    assert all(0.99 < v < E_TARGET for v in vals.values())


def test_richardson_exact_quadratic():
    # f(h) = 1 + c h^2 sampled at h and h/2
    ext, err = richardson(1 + 0.3 * 0.04, 1 + 0.3 * 0.01)
    assert abs(ext - 1) < 1e-15 and abs(err - 0.003) < 1e-15


def test_p_grid():
    g = p_grid(1, 10, 30)
    assert len(g) == 30 and g[0] == 1 and abs(g[-1] - 10) < 1e-12
    np.testing.assert_allclose(np.diff(np.log(g)), np.log(10) / 29)
    assert p_grid(2, 2, 1).tolist() == [2.0]
    with pytest.raises(ValueError):
        p_grid(1, 2, 3, "cubic")


def test_csv_roundtrip(tmp_path):
    pts = [compute_gamma(p) for p in (2.0, 3.0)]
    write_gamma_csv(pts, tmp_path / "g.csv")
    rows = read_gamma_csv(tmp_path / "g.csv")
    assert [r["gamma"] for r in rows] == [q.gamma for q in pts]
    assert (tmp_path / "g.csv").read_bytes().count(b"\r") == 0


def test_invalid_p():
    with pytest.raises(ValueError):
        compute_gamma(0.5)


def test_tail_length_floor():
    assert tail_length(1.0) == pytest.approx(E_TARGET + 50)
    assert tail_length(2.0) == 11.0
    assert tail_length(100.0) == 1.2


# --- bracketed problem ---------------------------------------------------------------

def test_delta_root_oracle():
    for eps in (0.3, 0.1, 0.03):
        d = delta_of_epsilon(eps)
        ref = float(mpmath.findroot(lambda x: mpmath.sin(2 * x) - 2 * (1 - eps) * x, d))
        assert abs(d - ref) < 1e-13


def test_delta_monotone_to_zero():
    ds = [delta_of_epsilon(e) for e in (0.3, 0.1, 0.03)]
    assert ds[0] > ds[1] > ds[2] > 0


@given(st.floats(0.01, 0.9))
def test_delta_is_first_violation(eps):
    d = delta_of_epsilon(eps)
    x = np.linspace(1e-6, d, 200)[:-1]
    assert np.all(np.sin(2 * x) >= 2 * (1 - eps) * x - 1e-14)
    assert math.sin(2 * d * 1.001) < 2 * (1 - eps) * d * 1.001


@pytest.mark.parametrize("n,p,eps", [(10, 2.0, 0.1), (20, 1.5, 0.2), (5, 3.0, 0.05)])
def test_sandwich(n, p, eps):
    b = compute_bracketed_gamma(n, p, eps)
    assert b.gamma_N <= b.gamma_np + 1e-10
    assert b.gamma_np <= b.gamma_D + 1e-10


def test_bracketed_converges():
    errs = [abs(compute_bracketed_gamma(n, 2.0, 0.1).gamma_np - 1.0) for n in (10, 20, 40)]
    # n = 20 and 40 both sit on the h = 0.01 grid floor (~6e-6); allow solver-level jitter
    assert errs[0] >= errs[1] - 1e-8 and errs[1] >= errs[2] - 1e-8
    assert abs(compute_bracketed_gamma(40, 2.0, 0.05).gamma_np - 1.0) < 2e-2


def test_bracketed_unresolved():
    with pytest.raises(ResolutionError):
        compute_bracketed_gamma(1, 2.0, 0.01, h=0.1)
