import math

import numpy as np
import pytest

from conftest import horn
from valleyspec.errors import HypothesisError
from valleyspec.horn import (HORN_C, HornSpec, beta_ratios, check_direst, full_field, horn_count,
                             horn_growth_exponent, horn_spectrum, horn_sum_bound, random_test_functions,
                             rayleigh_quotient, resolve_horn, tail_mass, weyl_count, write_beta_csv)


def test_spec_hypothesis():
    with pytest.raises(HypothesisError):
        HornSpec(1.2, 8.0, 0.05)
    with pytest.raises(HypothesisError):
        HornSpec(1.0, 8.0, 0.05)
    with pytest.raises(ValueError):
        HornSpec(0.5, 0.5, 0.05)


def test_positive_at_zero():
    assert horn(0.0, 6.0, 0.05, 40).result.eigenvalues[0] > 0


def test_form_domination():
    b0 = horn(0.0, 6.0, 0.05, 40).result.eigenvalues
    b5 = horn(0.5, 6.0, 0.05, 40).result.eigenvalues
    assert np.all(b5 >= 0.5 * b0 - 1e-7)


def test_R_doubling_discrete():
    a = horn_spectrum(HornSpec(0.5, 4.0, 0.05), 1).result.eigenvalues[0]
    b = horn_spectrum(HornSpec(0.5, 8.0, 0.05), 1).result.eigenvalues[0]
    assert abs(a - b) < 1e-3


def test_sectors_match_full():
    spec = HornSpec(0.3, 3.0, 0.1)
    a = horn_spectrum(spec, 10, 1e-10).result.eigenvalues
    b = horn_spectrum(spec, 10, 1e-10, sectors=False).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_rayleigh_identity():
    tol = 1e-8
    spec = HornSpec(0.5, 6.0, 0.05)
    s = horn(0.5, 6.0, 0.05, 12, vectors=True)
    for j in range(12):
        coords, u = full_field(s, j, spec)
        assert abs(rayleigh_quotient(u, spec.h, spec.lambda_, coords) - s.result.eigenvalues[j]) < 10 * tol


def test_tail_mass_small():
    spec = HornSpec(0.0, 6.0, 0.05)
    tails = tail_mass(horn(0.0, 6.0, 0.05, 12, vectors=True), spec, 12)
    assert tails.max() < 1e-6


def test_resolve_horn_returns_spec():
    s, spec, tails = resolve_horn(HornSpec(0.0, 4.0, 0.1), 4, threshold=1e-6)
    assert spec.R >= 4.0 and len(tails) == 4


# --- Hardy-type inequality -----------------------------------------------------------

def _lattice(R, h):
    m = int(round(R / h))
    x = -R + (R / m) * np.arange(2 * m + 1)
    return np.meshgrid(x, x, indexing="ij")


def test_direst_zero():
    chk = check_direst(np.zeros((201, 201)), 5.0, 0.05)
    assert (chk.lhs, chk.rhs) == (0.0, 0.0) and chk.holds


def test_direst_gaussian():
    X, Y = _lattice(10.0, 0.02)
    u = np.clip(1 - (X * Y) ** 2, 0, None) * np.exp(-X**2 - Y**2)
    chk = check_direst(u, 10.0, 0.02)
    assert chk.holds and chk.face_max < 1e-8


def test_direst_random_suite():
    funcs = list(random_test_functions(10.0, 0.02))
    assert len(funcs) >= 20
    for _, u in funcs:
        assert check_direst(u, 10.0, 0.02).holds


def test_direst_eigenfunctions():
    spec = HornSpec(0.0, 6.0, 0.05)
    s = horn(0.0, 6.0, 0.05, 12, vectors=True)
    for j in range(12):
        _, u = full_field(s, j, spec)
        assert check_direst(u, 6.0, 0.05).holds


def test_direst_rejects_nonvanishing():
    with pytest.raises(ValueError):
        check_direst(np.ones((201, 201)), 5.0, 0.05)


# --- counts, asymptotic shapes, sum bound --------------------------------------------

def test_count_monotone():
    s = horn(0.0, 8.0, 0.025, 100)
    counts = [horn_count(s, E)[0] for E in np.linspace(5, 60, 23)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_beta_ratio_window():
    rows = beta_ratios(horn(0.0, 10.0, 0.02, 150), 30, 150)
    assert rows[0][0] == 30 and rows[-1][0] == 150
    assert all(0.5 <= r[3] <= 2 for r in rows)


def test_growth_exponent():
    assert abs(horn_growth_exponent(horn(0.0, 10.0, 0.02, 150)) - 2.0) < 0.15


def test_sum_bound_rows():
    s = horn(0.0, 10.0, 0.02, 150)
    rows = horn_sum_bound(s, 0.0)
    N = 100
    r = rows[N - 1]
    assert r.bound == pytest.approx(HORN_C * N * N / (1 + math.log(N)))
    assert math.isnan(rows[0].chain)
    # lam = 0 is the pure Dirichlet case; the reduction leaves the bound unscaled
    assert rows[N - 1].bound == horn_sum_bound(s, 0.0, HORN_C)[N - 1].bound
    with pytest.raises(HypothesisError):
        horn_sum_bound(s, 1.0)


def test_weyl_count():
    assert weyl_count(math.e) == pytest.approx(math.e / math.pi)


def test_beta_csv(tmp_path):
    from valleyspec.io import read_table
    rows = beta_ratios(horn(0.0, 6.0, 0.05, 40))
    write_beta_csv(rows, tmp_path / "b.csv")
    back = read_table(tmp_path / "b.csv", "beta")
    assert [r["ratio"] for r in back] == [r[3] for r in rows]
