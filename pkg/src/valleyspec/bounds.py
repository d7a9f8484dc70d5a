"""Lower bounds on eigenvalue sums of L_p(lam) and the valley inequality behind them.

The bound is

    sum_{j<=N} lam_j >= C_p (1 - alpha lam) N^((2p+1)/(p+1)) / (ln^p N + 1)^(1/(p+1)) - c lam N

for 0 <= lam < 1/alpha, where C_p comes from a chain of constants started by
the free parameter C'_p.  ln^p N means (ln N)^p.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, HypothesisError, SpectrumError
from .quadrature import disk_power_integral_closed, disk_power_integral_quad, trapezoid_to

ALPHA = (5.0 + math.sqrt(105.0)) ** 2 / 40.0
C_SHIFT = 2.0 * (ALPHA**2 / 5.0 + 1.0)
DELTA_STAR = (-5.0 + math.sqrt(105.0)) / 10.0
LAMBDA_MAX = 1.0 / ALPHA

# Calibrated with max_admissible_Cp_prime at lam = 0 on the reference spectra of
# reference_spectrum(p, 0.0) (k = 50) and halved; see calibrate_default_Cp_prime.
# Max admissible values found: 2.1083, 9.2001, 53.694; halves rounded down.
DEFAULT_CP_PRIME = {1.0: 1.05, 2.0: 4.60, 3.0: 26.8}


def default_Cp_prime(p: float) -> float:
    v = DEFAULT_CP_PRIME.get(float(p))
    if v is None:
        raise KeyError(f"no default C'_p for p={p}; pass one explicitly")
    return v


@dataclass(frozen=True)
class BoundConstants:
    p: float
    C_p_prime: float
    alpha: float
    c: float
    delta_star: float
    C_p_double: float
    C_p_triple: float
    C_p: float
    disk_closed: float
    disk_quad: float

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(repr(_hex_fields(self)).encode()).hexdigest()[:12]


def _hex_fields(bc: BoundConstants) -> tuple:
    return tuple(float(v).hex() for v in asdict(bc).values())


def build_constants(p: float, C_p_prime: float) -> BoundConstants:
    """Evaluate the constant chain C'_p -> C''_p -> C'''_p -> C_p.

    The disk integral of (1 - r^2)^((p+1)/p) is taken in closed form and
    checked against iterated quadrature to 1e-10.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not C_p_prime > 0:
        raise ValueError(f"C'_p must be positive, got {C_p_prime}")
    closed = disk_power_integral_closed(p)
    quad = disk_power_integral_quad(p)
    if abs(closed - quad) > 1e-10:
        raise ArithmeticError(f"disk integral mismatch: closed {closed!r}, quadrature {quad!r}")
    c2 = p * (p + 1.0) ** (-(p + 1.0) / p) * C_p_prime ** (-1.0 / p)
    c3 = c2 * closed
    cp = (p / ((2 * p + 1) * c3)) ** (p / (p + 1)) * (p + 1) / (2 * p + 1)
    return BoundConstants(p, C_p_prime, ALPHA, C_SHIFT, DELTA_STAR, c2, c3, cp, closed, quad)


def _check_lambda(lam):
    if not 0 <= lam < LAMBDA_MAX:
        raise HypothesisError(f"lambda must lie in [0, 1/alpha) = [0, {LAMBDA_MAX:.6f}), got {lam}")


def log_factor(N, p: float):
    """(ln^p N + 1)^(1/(p+1)); equals 1 at N = 1."""
    return (np.log(N) ** p + 1.0) ** (1.0 / (p + 1.0))


def lower_bound_value(N, bc: BoundConstants, lam: float):
    """Right-hand side of the eigenvalue-sum bound at N (scalar or array)."""
    _check_lambda(lam)
    N = np.asarray(N, dtype=float)
    if np.any(N < 1):
        raise ValueError("N must be >= 1")
    p = bc.p
    val = bc.C_p * (1 - bc.alpha * lam) * N ** ((2 * p + 1) / (p + 1)) / log_factor(N, p) - bc.c * lam * N
    return float(val) if val.ndim == 0 else val


def lieb_thirring_lower(N, sigma: float, bc: BoundConstants, lam: float):
    """Lower bound on sum_{j<=N} lam_j^sigma.

    Tracing the three displayed steps with M = floor(N/3):

        lam_{2M} >= (C_p/2)(1 - alpha lam) M^(p/(p+1)) / (1 + ln^p M)^(1/(p+1))
        sum_{j<=N} lam_j^sigma >= M lam_{2M}^sigma
                               = (C_p/2)^sigma (1-alpha lam)^sigma M^e / (1 + ln^p M)^(sigma/(p+1)),

    e = (p(sigma+1)+1)/(p+1).  With N = 3M and ln M <= ln N this becomes the
    N-form below, so the constant is (C_p/2)^sigma 3^(-e).  For N not a
    multiple of 3 the N-form is the stated relaxation; lieb_thirring_chain
    keeps the M-form.
    """
    _check_lambda(lam)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    p = bc.p
    e = (p * (sigma + 1) + 1) / (p + 1)
    const = (bc.C_p / 2) ** sigma * 3.0 ** (-e)
    N = np.asarray(N, dtype=float)
    val = const * (1 - bc.alpha * lam) ** sigma * N**e / (1 + np.log(N) ** p) ** (sigma / (p + 1))
    return float(val) if val.ndim == 0 else val


def lieb_thirring_chain(N: int, sigma: float, bc: BoundConstants, lam: float) -> float:
    """M lam_{2M}^sigma with the lam_{2M} bound, M = floor(N/3); zero for N < 3."""
    _check_lambda(lam)
    M = int(N) // 3
    if M < 1:
        return 0.0
    p = bc.p
    lam2m = 0.5 * bc.C_p * (1 - bc.alpha * lam) * M ** (p / (p + 1)) / (1 + math.log(M) ** p) ** (1 / (p + 1))
    return M * lam2m**sigma


# --- verification against computed spectra ---------------------------------------

@dataclass(frozen=True)
class BoundReport:
    N: int
    sum_lambda: float
    lower_bound: float
    slack: float
    holds: bool
    lambda_: float
    p: float
    constants: str


class BoundReports(list):
    """List of BoundReport with the truncation diagnostic of the spectrum used."""

    truncation_flag: bool = False
    ceiling: float = math.inf

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("N", "sum", "bound", "slack", "holds"))
            for r in self:
                w.writerow([r.N, repr(r.sum_lambda), repr(r.lower_bound), repr(r.slack), int(r.holds)])


def truncation_ceiling(p: float, lam: float, R: float, gamma_p: float | None = None) -> float:
    """Energy (gamma_p - lam) R^(2p/(p+2)) of the valley states at distance R.

    Box eigenvalues near this value belong to valley states pushed up by the
    truncation and no longer track the full-plane spectrum.
    """
    if gamma_p is None:
        from .transition import gamma_ref
        gamma_p = gamma_ref(p)
    return (gamma_p - lam) * R ** (2 * p / (p + 2))


def _eigenvalues(spectrum):
    if hasattr(spectrum, "result"):
        spectrum = spectrum.result
    if not getattr(spectrum, "converged", True):
        raise SpectrumError("spectrum is flagged unconverged; refusing to verify bounds on it")
    vals = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise SpectrumError("spectrum is empty or has non-finite eigenvalues")
    if np.any(np.diff(vals) < -1e-9 * max(1.0, float(np.abs(vals).max()))):
        raise SpectrumError("eigenvalues are not in ascending order")
    return vals, getattr(spectrum, "meta", {})


def verify_sum_bound(spectrum, bc: BoundConstants, lam: float, R: float | None = None) -> BoundReports:
    """Partial sums of a computed spectrum against the bound for N = 1..k.

    The Dirichlet-truncated spectrum lies above the full-plane one, so
    ``holds`` here is evidence for the bound, not a proof.  ``R`` (or the
    spectrum's meta) enables the truncation-ceiling flag.
    """
    vals, meta = _eigenvalues(spectrum)
    N = np.arange(1, len(vals) + 1)
    sums = np.cumsum(vals)
    bound = lower_bound_value(N, bc, lam)
    out = BoundReports(
        BoundReport(int(n), float(s), float(b), float(s - b), bool(s - b >= 0), lam, bc.p, bc.fingerprint)
        for n, s, b in zip(N, sums, bound)
    )
    R = meta.get("R") if R is None else R
    if R is not None:
        out.ceiling = truncation_ceiling(bc.p, lam, float(R))
        out.truncation_flag = bool(vals[-1] >= 0.95 * out.ceiling)
    return out


def max_admissible_Cp_prime(spectrum, p: float, lam: float, rel_tol: float = 1e-13) -> float:
    """Largest C'_p for which the bound holds for every N <= k on this spectrum.

    C_p grows like C'_p^(1/(p+1)), so the bound increases with C'_p and the
    admissible set is an interval (0, C*].  Bisection in log C'_p.
    Returns inf if the bound holds for every C'_p (not reachable for lam < 1/alpha).
    """
    _check_lambda(lam)
    vals, _ = _eigenvalues(spectrum)
    sums = np.cumsum(vals)
    N = np.arange(1, len(vals) + 1)

    def holds(cpp):
        return bool(np.all(sums >= lower_bound_value(N, _fast_constants(p, cpp), lam)))

    lo, hi = 1.0, 1.0
    while not holds(lo):
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    while holds(hi):
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    while hi - lo > rel_tol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _fast_constants(p, cpp) -> BoundConstants:
    # same chain as build_constants with the disk integral in closed form only
    closed = disk_power_integral_closed(p)
    c2 = p * (p + 1.0) ** (-(p + 1.0) / p) * cpp ** (-1.0 / p)
    c3 = c2 * closed
    cp = (p / ((2 * p + 1) * c3)) ** (p / (p + 1)) * (p + 1) / (2 * p + 1)
    return BoundConstants(p, cpp, ALPHA, C_SHIFT, DELTA_STAR, c2, c3, cp, closed, closed)


# --- growth exponent ---------------------------------------------------------------

def fit_growth_exponent(sums, p: float | None = None, correction=None) -> float:
    """Least-squares slope of log(S_N * correction(N)) against log N.

    ``sums`` is a sequence of (N, S_N).  With ``p`` given the correction is
    (ln^p N + 1)^(1/(p+1)), which removes the logarithmic factor of the
    bound; ``correction`` overrides it with any callable of N.
    """
    arr = np.asarray(sums, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("sums must be a sequence of (N, sum) pairs")
    N, S = arr[:, 0], arr[:, 1]
    if len(N) < 5:
        raise ValueError("need at least 5 points")
    if N.max() < 10 * N.min():
        raise ValueError("N must span at least a decade")
    order = np.argsort(N)
    N, S = N[order], S[order]
    if np.any(S <= 0):
        raise DataError("sums must be positive for a log-log fit")
    if np.any(np.diff(S) < 0):
        raise DataError("partial sums must be non-decreasing in N")
    if correction is None and p is not None:
        correction = lambda n: log_factor(n, p)
    y = np.log(S) if correction is None else np.log(S * correction(N))
    return float(np.polyfit(np.log(N), y, 1)[0])


def expected_growth_exponent(p: float) -> float:
    return (2 * p + 1) / (p + 1)


# --- valley inequality --------------------------------------------------------------

@dataclass(frozen=True)
class ValleyCheck:
    lhs: float
    rhs: float
    holds: bool
    gradient_term: float
    potential_term: float
    clipped: bool
    tail_fraction: float


def check_valley_inequality(psi: np.ndarray, h: float, p: float, delta: float = DELTA_STAR,
                            tail: float = 0.9) -> ValleyCheck:
    """Both sides of the valley inequality on one quadrant.

    ``psi[i, j]`` holds the field at (x, y) = (i h, j h), with the box edge at
    R = (m-1) h.  Over {y >= 1, 0 <= x <= (1+delta) y^(-p/(p+2))}:

        lhs = int y^(2p/(p+2)) psi^2
        rhs = 5/2 (1+delta)^2 int_{y>=1, x>=0} psi_x^2 + 2 (1+delta)/delta int x^p y^p psi^2

    The x-integrals end inside a cell and are weighted by the covered
    fraction; the y-integral starts at y = 1 the same way.  The valley is
    unbounded, so the truncation flag compares the region mass beyond
    ``tail`` * R with the total region mass (flagged above 1%).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    psi = np.asarray(psi, dtype=float)
    m = psi.shape[1]
    R = (m - 1) * h
    if R <= 1:
        raise ValueError("the box must extend beyond y = 1")
    x = np.arange(psi.shape[0]) * h
    y = np.arange(m) * h
    q = p / (p + 2)
    ends = (1 + delta) * np.power(np.maximum(y, 1e-300), -q)
    psi_x = np.gradient(psi, h, axis=0, edge_order=2)
    xp = x[:, None] ** p

    lhs_rows = np.array([trapezoid_to(psi[:, j] ** 2, h, ends[j]) for j in range(m)]) * y ** (2 * q)
    pot_rows = np.array([trapezoid_to(xp[:, 0] * psi[:, j] ** 2, h, ends[j]) for j in range(m)]) * y**p
    grad_rows = np.array([trapezoid_to(psi_x[:, j] ** 2, h, x[-1]) for j in range(m)])

    def over_y(rows, start=1.0):
        return trapezoid_to(rows, h, R) - trapezoid_to(rows, h, start)

    lhs = over_y(lhs_rows)
    grad = over_y(grad_rows)
    pot = over_y(pot_rows)
    rhs = 2.5 * (1 + delta) ** 2 * grad + 2 * (1 + delta) / delta * pot
    mass_rows = lhs_rows / np.maximum(y, 1e-300) ** (2 * q)
    total = over_y(mass_rows)
    frac = over_y(mass_rows, tail * R) / total if total > 0 else 0.0
    return ValleyCheck(float(lhs), float(rhs), bool(lhs <= rhs), float(grad), float(pot),
                       bool(frac > 0.01), float(frac))


# --- reference spectra ----------------------------------------------------------------

# box half-width and spacing for the reference spectra (k = 50), chosen so the
# 50th eigenvalue stays below 95% of the truncation ceiling
REFERENCE_GRIDS = {1.0: (30.0, 0.1), 2.0: (16.0, 0.08), 3.0: (14.0, 0.07)}


def reference_spectrum(p: float, lam: float, k: int = 50, R: float | None = None,
                       h: float | None = None, tol: float = 1e-8):
    """Lowest k eigenvalues of L_p(lam) on [-R, R]^2 through the D4 sectors."""
    from .operators import CrossValley
    from .sectors import box_spectrum
    R0, h0 = REFERENCE_GRIDS.get(float(p), (16.0, 0.05))
    R = R0 if R is None else R
    h = h0 if h is None else h
    return box_spectrum(CrossValley(p, lam), R, h, k, tol).result


def calibrate_default_Cp_prime(ps=(1.0, 2.0, 3.0), k: int = 50) -> dict:
    """Half the largest admissible C'_p at lam = 0 on the reference spectra."""
    return {float(p): 0.5 * max_admissible_Cp_prime(reference_spectrum(p, 0.0, k), p, 0.0) for p in ps}
