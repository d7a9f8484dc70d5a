import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from valleyspec.dense import dense_oracle
from valleyspec.eigensolve import ConvergenceError, SolveSettings, SpectrumResult, count_below, lanczos_smallest
from valleyspec.operators import CrossValley, Grid1D, Grid2D, Zero, assemble_1d, assemble_2d


@pytest.mark.parametrize("name", ["laplace1d", "neumann1d", "oscillator", "harmonic2d", "cross", "mixed", "horn"])
@pytest.mark.parametrize("mode", ["shift_invert", "plain"])
def test_oracle_equivalence(small_matrices, name, mode):
    A = small_matrices[name]
    k = 8
    res = lanczos_smallest(A, SolveSettings(k, tol=1e-9, mode=mode))
    ref = dense_oracle(A)[:k]
    assert np.max(np.abs(res.eigenvalues - ref)) <= 1e-9


def test_residual_contract(small_matrices):
    A = small_matrices["cross"]
    res = lanczos_smallest(A, SolveSettings(6, tol=1e-9, vectors=True))
    S = A.to_scipy()
    for j in range(6):
        v = res.eigenvectors[:, j]
        r = np.linalg.norm(S @ v - res.eigenvalues[j] * v) / np.linalg.norm(v)
        assert r <= 1e-9
        assert res.residual_norms[j] <= 1e-9


def test_laplacian_three_levels():
    A = assemble_1d(Zero(), Grid1D(0.0, 1.0, 999))
    vals = lanczos_smallest(A, SolveSettings(3, tol=1e-6)).eigenvalues
    exact = (np.arange(1, 4) * math.pi) ** 2
    h = 1e-3
    assert np.all(np.abs(vals / exact - 1) < (np.arange(1, 4) * math.pi * h) ** 2)


def test_harmonic_box(harmonic_box):
    # O(h^2) error of the five-point stencil is ~ 4e-4 relative at h = 0.05
    np.testing.assert_allclose(harmonic_box.eigenvalues, [2, 4, 4, 6, 6, 6], rtol=1e-3)
    # the x <-> y pairs are exact lattice degeneracies and are reported as clusters
    assert [1, 2] in harmonic_box.clusters


def test_bit_identical_reruns(small_matrices):
    A = small_matrices["cross"]
    a = lanczos_smallest(A, SolveSettings(6, tol=1e-9)).eigenvalues
    b = lanczos_smallest(A, SolveSettings(6, tol=1e-9)).eigenvalues
    assert a.tobytes() == b.tobytes()


@given(st.integers(0, 1000))
def test_nonnegative_diagonal_does_not_lower(seed):
    A = assemble_2d(CrossValley(1.0, 0.2), Grid2D((-3, 3), (-3, 3), 17, 17))
    d = np.random.default_rng(seed).uniform(0, 3, A.dim)
    before = lanczos_smallest(A, SolveSettings(5, tol=1e-10)).eigenvalues
    after = lanczos_smallest(A.plus_diagonal(d), SolveSettings(5, tol=1e-10)).eigenvalues
    assert np.all(after >= before - 1e-9)


def test_count_below():
    assert count_below(np.array([1.0, 3.0, 5.0]), 4.0) == (2, False)
    assert count_below(np.array([1.0, 3.0, 5.0]), 0.5) == (0, False)


def test_count_below_scan_oracle():
    A = assemble_2d(CrossValley(1.0), Grid2D((-4, 4), (-4, 4), 21, 21))
    full = dense_oracle(A)
    thr = float(np.median(full))
    scan = sum(1 for v in full if v < thr)
    assert count_below(full, thr)[0] == scan
    part = lanczos_smallest(A, SolveSettings(10, tol=1e-9))
    n, lower = count_below(part, thr)
    assert n == 10 and lower


def test_settings_validation():
    with pytest.raises(ValueError):
        SolveSettings(0)
    with pytest.raises(ValueError):
        SolveSettings(1, tol=0.0)
    with pytest.raises(ValueError):
        SolveSettings(1, mode="lobpcg")


def test_iteration_budget_raises():
    A = assemble_2d(CrossValley(1.0), Grid2D((-4, 4), (-4, 4), 21, 21))
    with pytest.raises(ConvergenceError):
        lanczos_smallest(A, SolveSettings(10, tol=1e-12, max_iter=5, mode="plain"))
