"""Dirichlet problems on the horn region D = {|xy| < 1}.

H_D(lam) = -Lap - lam (x^2 + y^2) with Dirichlet conditions on |xy| = 1,
truncated to [-R, R]^2.  Lattice nodes with |xy| >= 1 are excluded, which
is the node-exclusion form of the Dirichlet condition on the curved edge.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import fit_growth_exponent
from .eigensolve import SolveSettings, count_below, lanczos_smallest
from .errors import HypothesisError
from .operators import assemble_horn
from .sectors import horn_sector_spectrum, sector_field, unfold

# chain constant of the horn sum bound (valid for large N)
HORN_C = math.pi / 32


@dataclass(frozen=True)
class HornSpec:
    lambda_: float
    R: float
    h: float

    def __post_init__(self):
        if not 0 <= self.lambda_ < 1:
            raise HypothesisError(f"lambda must lie in [0, 1), got {self.lambda_}")
        if not self.R > 1:
            raise ValueError(f"R must exceed 1, got {self.R}")
        if not 0 < self.h < 1:
            raise ValueError(f"h must lie in (0, 1), got {self.h}")


def horn_spectrum(spec: HornSpec, k: int, tol: float = 1e-8, vectors: bool = False,
                  sectors: bool = True):
    """Lowest k eigenvalues of H_D(lam) on D cut to [-R, R]^2.

    With ``sectors`` the four D4 quadrant problems are solved (exact on the
    lattice); the returned object then is a SectorSpectrum, otherwise a
    SpectrumResult of the full lattice problem.
    """
    if sectors:
        return horn_sector_spectrum(spec.R, spec.h, k, spec.lambda_, tol, vectors)
    A, lat = assemble_horn(spec.R, spec.h)
    if spec.lambda_:
        A = A.plus_diagonal(-spec.lambda_ * (A.nodes ** 2).sum(axis=1))
    return lanczos_smallest(A, SolveSettings(k, tol=tol, vectors=vectors))


def _values(spectrum) -> np.ndarray:
    if hasattr(spectrum, "result"):
        spectrum = spectrum.result
    return np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)


def full_field(spectrum, j: int, spec: HornSpec) -> tuple[np.ndarray, np.ndarray]:
    """(coords, u) of the j-th eigenfunction on the full lattice; unit L2 norm."""
    x, psi = sector_field(spectrum, j, spec.R, spec.h)
    lab = spectrum.vectors[j][0]
    return np.concatenate([-x[:0:-1], x]), unfold(psi, lab)


def tail_mass(spectrum, spec: HornSpec, k: int | None = None, outer: float = 0.1) -> np.ndarray:
    """Fraction of each eigenfunction's mass with max(|x|, |y|) > (1 - outer) R."""
    k = len(spectrum.vectors) if k is None else k
    out = np.empty(k)
    for j in range(k):
        x, psi = sector_field(spectrum, j, spec.R, spec.h)
        far = np.maximum(x[:, None], x[None, :]) > (1 - outer) * spec.R
        w = psi**2
        out[j] = float(w[far].sum() / w.sum())
    return out


def resolve_horn(spec: HornSpec, k: int, threshold: float = 1e-6, grow: float = 1.25,
                 max_steps: int = 3, tol: float = 1e-8):
    """Solve with vectors and enlarge R until the tail mass of the first k states is below ``threshold``.

    Returns (spectrum, spec used, tail masses).  The last attempt is
    returned even if the threshold is still missed; callers read the masses.
    """
    for step in range(max_steps + 1):
        spectrum = horn_spectrum(spec, k, tol, vectors=True)
        tails = tail_mass(spectrum, spec, k)
        if tails.max() < threshold or step == max_steps:
            return spectrum, spec, tails
        spec = HornSpec(spec.lambda_, spec.R * grow, spec.h)


def rayleigh_quotient(u: np.ndarray, h: float, lam: float, coords: np.ndarray) -> float:
    """(||grad u||^2 - lam ||r u||^2) / ||u||^2 with forward differences of the zero-extended field.

    For a lattice field vanishing off D this is the five-point quadratic form,
    computed without the matrix.
    """
    dx = np.diff(u, axis=0, prepend=0.0, append=0.0)
    dy = np.diff(u, axis=1, prepend=0.0, append=0.0)
    grad = (dx**2).sum() + (dy**2).sum()
    r2 = coords[:, None] ** 2 + coords[None, :] ** 2
    return float((grad - lam * h * h * (r2 * u * u).sum()) / (h * h * (u * u).sum()))


# --- Hardy-type inequality ---------------------------------------------------------

@dataclass(frozen=True)
class DirestCheck:
    lhs: float
    rhs: float
    holds: bool
    face_max: float


def check_direst(u: np.ndarray, R: float, h: float) -> DirestCheck:
    """int_D r^2 u^2 and int_D |grad u|^2 for u on the lattice of [-R, R]^2.

    ``u[i, j]`` is the value at (-R + i h, -R + j h), faces included.  It
    must vanish (to 1e-8) at lattice nodes outside D.  The gradient is taken
    by central differences of the zero-extended field over the whole box and
    both integrals use trapezoid weights.
    """
    u = np.asarray(u, dtype=float)
    m = int(round(R / h))
    h = R / m
    if u.shape != (2 * m + 1, 2 * m + 1):
        raise ValueError(f"expected a {(2 * m + 1, 2 * m + 1)} lattice field, got {u.shape}")
    x = -R + h * np.arange(2 * m + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    outside = np.abs(X * Y) >= 1.0 - 1e-12
    if np.any(np.abs(u[outside]) > 1e-8):
        raise ValueError(f"u does not vanish outside D (max {np.abs(u[outside]).max():.3e})")
    w = np.ones(2 * m + 1)
    w[0] = w[-1] = 0.5
    W = np.outer(w, w) * h * h
    gx, gy = np.gradient(np.pad(u, 1), h)
    gx, gy = gx[1:-1, 1:-1], gy[1:-1, 1:-1]
    lhs = float((W * (X**2 + Y**2) * u**2).sum())
    rhs = float((W * (gx**2 + gy**2)).sum())
    face = max(np.abs(u[[0, -1], :]).max(), np.abs(u[:, [0, -1]]).max())
    return DirestCheck(lhs, rhs, bool(lhs <= rhs), float(face))


def random_test_functions(R: float, h: float, count: int = 20, seed: int = 20110701):
    """Fixed-seed bumps (1 - (xy)^2)_+ exp(-((x-a)^2 + (y-b)^2) / (2 s^2)) on the [-R, R]^2 lattice.

    Centres have |a|, |b| <= 3 and widths s in [0.3, 1.5]; the cutoff makes
    every function vanish on |xy| >= 1.
    """
    rng = np.random.default_rng(seed)
    m = int(round(R / h))
    x = -R + (R / m) * np.arange(2 * m + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    cut = np.clip(1.0 - (X * Y) ** 2, 0.0, None)
    for _ in range(count):
        a, b = rng.uniform(-3, 3, size=2)
        s = rng.uniform(0.3, 1.5)
        yield (a, b, s), cut * np.exp(-((X - a) ** 2 + (Y - b) ** 2) / (2 * s * s))


# --- sum bound, counts and asymptotic shapes ------------------------------------------

@dataclass(frozen=True)
class HornBoundRow:
    N: int
    sum_lambda: float
    bound: float
    chain: float
    slack: float
    holds: bool


def horn_sum_bound(spectrum, lam: float, C: float = HORN_C) -> list[HornBoundRow]:
    """Partial sums against C (1 - lam) N^2 / (1 + ln N); chain column (pi/32) N^2 / ln N (nan at N = 1).

    The chain constant is asserted only for large N, so failures at small N
    are recorded, not raised.
    """
    if not 0 <= lam < 1:
        raise HypothesisError(f"lambda must lie in [0, 1), got {lam}")
    vals = _values(spectrum)
    sums = np.cumsum(vals)
    rows = []
    for N in range(1, len(vals) + 1):
        b = C * (1 - lam) * N * N / (1 + math.log(N))
        chain = HORN_C * N * N / math.log(N) if N > 1 else float("nan")
        s = float(sums[N - 1])
        rows.append(HornBoundRow(N, s, b, chain, s - b, s >= b))
    return rows


def weyl_count(E: float) -> float:
    """(1/pi) E ln E, the leading term of the Dirichlet counting function."""
    return E * math.log(E) / math.pi


def horn_count(spectrum, E: float) -> tuple[int, bool]:
    """Eigenvalues below E and whether the count is only a lower estimate (all computed values below E)."""
    res = spectrum.result if hasattr(spectrum, "result") else spectrum
    return count_below(res, E)


def beta_asymptotic(j):
    j = np.asarray(j, dtype=float)
    return np.pi * j / np.log(j)


def beta_ratios(spectrum, j_min: int = 2, j_max: int | None = None) -> list[tuple]:
    """Rows (j, beta_j, pi j / ln j, ratio) with 1-based j."""
    vals = _values(spectrum)
    j_max = len(vals) if j_max is None else min(j_max, len(vals))
    j = np.arange(max(j_min, 2), j_max + 1)
    ref = beta_asymptotic(j)
    return [(int(a), float(b), float(c), float(b / c)) for a, b, c in zip(j, vals[j - 1], ref)]


def write_beta_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("j", "beta_j", "pi*j/ln j", "ratio"))
        for j, b, c, r in rows:
            w.writerow([j, repr(b), repr(c), repr(r)])


def write_horn_bound_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("N", "sum", "bound", "chain", "slack", "holds"))
        for r in rows:
            w.writerow([r.N, repr(r.sum_lambda), repr(r.bound), repr(r.chain), repr(r.slack), int(r.holds)])


def horn_growth_exponent(spectrum, n_min: int = 10) -> float:
    """Slope of log(S_N (1 + ln N)) against log N; the bound's shape predicts 2."""
    sums = np.cumsum(_values(spectrum))
    N = np.arange(1, len(sums) + 1)
    keep = N >= n_min
    return fit_growth_exponent(np.column_stack([N[keep], sums[keep]]), correction=lambda n: 1 + np.log(n))


@dataclass
class HornReport:
    spec: HornSpec
    eigenvalues: np.ndarray
    counts: dict = field(default_factory=dict)
    ratios: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    tail: np.ndarray | None = None


def horn_report(spec: HornSpec, k: int, thresholds=(), tol: float = 1e-8, tails: bool = False) -> HornReport:
    if tails:
        spectrum, spec, tail = resolve_horn(spec, k, tol=tol)
    else:
        spectrum, tail = horn_spectrum(spec, k, tol), None
    vals = _values(spectrum)
    counts = {float(E): horn_count(spectrum, E) for E in thresholds}
    return HornReport(spec, vals, counts, beta_ratios(spectrum), horn_sum_bound(spectrum, spec.lambda_), tail)


__all__ = [
    "HornSpec", "horn_spectrum", "full_field", "tail_mass", "resolve_horn", "rayleigh_quotient",
    "DirestCheck", "check_direst", "random_test_functions", "HornBoundRow", "horn_sum_bound",
    "weyl_count", "horn_count", "beta_asymptotic", "beta_ratios", "write_beta_csv",
    "write_horn_bound_csv", "horn_growth_exponent", "HornReport", "horn_report",
]
