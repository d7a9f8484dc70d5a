"""Weyl-type upper bound machinery for the comparison operator -Lap + Q.

Q(x, y) = |xy|^p + |x|^p + |y|^p + 1 dominates the valley potential, so
eigenvalue sums of -Lap + Q bound those of L_p(lam) from above.  The
level-set measure sigma(lam) = |{Q < lam}| and the phase-space integral
Phi(lam) = int (lam - Q)_+ both reduce to one-dimensional integrals over
0 <= x <= X = (lam - 1)^(1/p) with the inner limit
Y(x) = ((lam - 1 - x^p) / (1 + x^p))^(1/p).
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import dblquad
from scipy.optimize import brentq

from .errors import SpectrumError
from .quadrature import integrate


def gamma_m(m: int) -> float:
    """(2 sqrt(pi))^(-m) / Gamma(m/2 + 1); 1/(4 pi) for m = 2."""
    return (2.0 * math.sqrt(math.pi)) ** (-m) / math.gamma(m / 2.0 + 1.0)


GAMMA_2 = gamma_m(2)


def gamma2_tilde(p: float) -> float:
    return GAMMA_2 / (8.0 * (p + 1.0))


def Q(x, y, p: float):
    ax, ay = np.abs(x) ** p, np.abs(y) ** p
    return ax * ay + ax + ay + 1.0


@dataclass(frozen=True)
class Measure:
    closed: float
    quad: float
    cells: float | None = None


def _reduced(lam, p, power):
    """int_0^X (lam - 1 - x^p)^power / (1 + x^p)^(1/p) dx.

    On [X/2, X] the map x = X (1 - w^p) makes lam - 1 - x^p vanish like w^p,
    so the integrand is smooth in w at the far end.  On [0, X/2] the map
    x = e^s - 1 spreads the 1/(1 + x) peak that dominates for large lam.
    """
    X = (lam - 1.0) ** (1.0 / p)

    def g(x):
        a = np.maximum(lam - 1.0 - x**p, 0.0)
        return a**power / (1.0 + x**p) ** (1.0 / p)

    def outer(w):
        return g(X * (1.0 - w**p)) * (p * X * w ** (p - 1.0))

    def inner(s):
        return g(np.expm1(s)) * np.exp(s)

    a, _ = integrate(inner, 0.0, math.log1p(X / 2), abs_tol=0.0, rel_tol=1e-13)
    b, _ = integrate(outer, 0.0, 2.0 ** (-1.0 / p), abs_tol=0.0, rel_tol=1e-13)
    return a + b


def sigma_closed(lam: float, p: float) -> float:
    if lam <= 1:
        return 0.0
    return 4.0 * _reduced(lam, p, 1.0 / p)


def phi_closed(lam: float, p: float) -> float:
    if lam <= 1:
        return 0.0
    return 4.0 * p / (p + 1.0) * _reduced(lam, p, (p + 1.0) / p)


def sigma_p1(lam: float) -> float:
    """Analytic sigma for p = 1: 4 (lam ln lam - lam + 1)."""
    return 4.0 * (lam * math.log(lam) - lam + 1.0) if lam > 1 else 0.0


def phi_p1(lam: float) -> float:
    """Analytic Phi for p = 1: 2 lam^2 ln lam - 3 lam^2 + 4 lam - 1."""
    return 2 * lam**2 * math.log(lam) - 3 * lam**2 + 4 * lam - 1 if lam > 1 else 0.0


def _inner_limit(lam, p):
    # edge of {Q < lam} in the first quadrant, found by root finding on Q itself
    top = lam ** (1.0 / p)

    def Y(x):
        if lam - 1.0 - x**p <= 0:
            return 0.0
        return brentq(lambda y: float(Q(x, y, p)) - lam, 0.0, top, xtol=1e-15, rtol=1e-15, maxiter=200)

    return Y


def _quad2d(lam, p, integrand):
    X = (lam - 1.0) ** (1.0 / p)
    val, _ = dblquad(integrand, 0.0, X, 0.0, _inner_limit(lam, p), epsabs=0.0, epsrel=1e-11)
    return 4.0 * val


def sigma_quad(lam: float, p: float) -> float:
    if lam <= 1:
        return 0.0
    return _quad2d(lam, p, lambda y, x: 1.0)


def phi_quad(lam: float, p: float) -> float:
    if lam <= 1:
        return 0.0
    return _quad2d(lam, p, lambda y, x: lam - float(Q(x, y, p)))


def sigma_cells(lam: float, p: float, n: int = 2000) -> float:
    """Cell-count measure of {Q < lam} on a logarithmic n x n grid.

    With x = e^s - 1 the level curves become nearly straight, so counting
    cells whose centre lies in the set converges quickly.
    """
    if lam <= 1:
        return 0.0
    # the grid end is offset from the level curve so that no row of cell
    # centres sits exactly on it (for p = 1 the curve is the line s + t = ln lam)
    top = math.log1p((lam - 1.0) ** (1.0 / p)) * (1.0 + 1.0 / (math.pi * n))
    ds = top / n
    s = (np.arange(n) + 0.5) * ds
    x = np.expm1(s)
    jac = np.exp(s) * ds
    total = 0.0
    for i in range(0, n, 256):
        inside = Q(x[i:i + 256, None], x[None, :], p) < lam
        total += float((inside * jac[i:i + 256, None] * jac[None, :]).sum())
    return 4.0 * total


def sigma_measure(lam: float, p: float, cells: bool = False) -> Measure:
    return Measure(sigma_closed(lam, p), sigma_quad(lam, p), sigma_cells(lam, p) if cells else None)


def phi_classical(lam: float, p: float) -> Measure:
    return Measure(phi_closed(lam, p), phi_quad(lam, p))


def sigma_bracket(lam: float, p: float) -> tuple[float, float]:
    L = lam ** (1.0 / p) * math.log(lam)
    return L / (2.0 * p), 8.0 * L / p


def phi_bracket(lam: float, p: float) -> tuple[float, float]:
    L = lam ** ((p + 1.0) / p) * math.log(lam)
    return L / (4.0 * (p + 1.0)), 8.0 * L / (p + 1.0)


def local_slope(f, lam: float, p: float, rel_step: float = 1e-3) -> float:
    """d ln f / d ln lam by a central difference."""
    a, b = lam * (1 - rel_step), lam * (1 + rel_step)
    return (math.log(f(b, p)) - math.log(f(a, p))) / (math.log(b) - math.log(a))


@dataclass
class WeylReport:
    lambda_: float
    p: float
    sigma_closed: float
    sigma_quad: float
    phi_closed: float
    phi_quad: float
    gamma2: float
    n_estimate: float
    bracket_flags: dict = field(default_factory=dict)

    @property
    def sigma_rel_err(self) -> float:
        return abs(self.sigma_closed - self.sigma_quad) / self.sigma_quad

    @property
    def phi_rel_err(self) -> float:
        return abs(self.phi_closed - self.phi_quad) / self.phi_quad


def weyl_report(lam: float, p: float) -> WeylReport:
    s, f = sigma_measure(lam, p), phi_classical(lam, p)
    slo, shi = sigma_bracket(lam, p)
    flo, fhi = phi_bracket(lam, p)
    flags = {
        "sigma_lower": slo <= s.closed, "sigma_upper": s.closed <= shi,
        "phi_lower": flo <= f.closed, "phi_upper": f.closed <= fhi,
    }
    return WeylReport(lam, p, s.closed, s.quad, f.closed, f.quad, GAMMA_2, GAMMA_2 * f.closed, flags)


WEYL_COLUMNS = ("lambda", "p", "sigma_closed", "sigma_quad", "phi_closed", "phi_quad",
                "sigma_lower", "sigma_upper", "phi_lower", "phi_upper")


def write_weyl_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEYL_COLUMNS)
        for r in reports:
            w.writerow([repr(float(r.lambda_)), repr(float(r.p)), repr(r.sigma_closed), repr(r.sigma_quad),
                        repr(r.phi_closed), repr(r.phi_quad)]
                       + [int(r.bracket_flags[k]) for k in WEYL_COLUMNS[6:]])


# --- Rozenblum conditions ---------------------------------------------------------------

def rozenblum_constant(p: float) -> float:
    """12 16^p p: the Lipschitz factor of log Q over distances up to 2."""
    return 12.0 * 16.0**p * p


@dataclass
class RozenblumReport:
    p: float
    c: float
    doubling: list
    lipschitz_violations: int
    ratio_violations: int
    pairs: int
    modulus_violations: int
    squares: int
    worst_modulus_ratio: float

    @property
    def ok(self) -> bool:
        return (all(d["holds"] for d in self.doubling) and self.lipschitz_violations == 0
                and self.ratio_violations == 0 and self.modulus_violations == 0)


def omega1(p: float, corner, t: float, directions: int = 16, cells: int = 32) -> float:
    """Sampled L1 modulus of continuity of Q on the unit square at ``corner``.

    The sup over |z| < t is taken over ``directions`` shifts of length
    0.999 t; the integral over {x in D, x+z in D} uses a midpoint grid.
    """
    u = (np.arange(cells) + 0.5) / cells
    X, Y = np.meshgrid(corner[0] + u, corner[1] + u, indexing="ij")
    best = 0.0
    for a in np.arange(directions) * (2 * np.pi / directions):
        zx, zy = 0.999 * t * math.cos(a), 0.999 * t * math.sin(a)
        inside = ((X + zx >= corner[0]) & (X + zx <= corner[0] + 1)
                  & (Y + zy >= corner[1]) & (Y + zy <= corner[1] + 1))
        diff = np.abs(Q(X + zx, Y + zy, p) - Q(X, Y, p)) * inside
        best = max(best, float(diff.sum()) / cells**2)
    return best


def check_rozenblum(p: float, lambdas, seed: int = 0, pairs: int = 10_000, box: float = 20.0,
                    squares: int = 50, ts=(0.25, 0.5, 1.0, math.sqrt(2.0))) -> RozenblumReport:
    """Sampled checks of the three Rozenblum conditions for Q with beta = 0."""
    L = rozenblum_constant(p)
    c = L + 1.0
    doubling = []
    for lam in lambdas:
        r = sigma_closed(2 * lam, p) / sigma_closed(lam, p)
        doubling.append({"lambda": float(lam), "ratio": r, "holds": bool(r <= c)})

    rng = np.random.default_rng(seed)
    a = rng.uniform(-box, box, size=(pairs, 2))
    d = rng.uniform(0.0, 1.0, size=pairs)
    ang = rng.uniform(0.0, 2 * np.pi, size=pairs)
    b = a + np.column_stack([d * np.cos(ang), d * np.sin(ang)])
    qa, qb = Q(a[:, 0], a[:, 1], p), Q(b[:, 0], b[:, 1], p)
    lip = int(np.sum(np.abs(qa - qb) > L * d * qa))
    ratio = int(np.sum(qb > c * qa))

    corners = np.vstack([[0.0, 0.0], rng.uniform(-box, box - 1, size=(squares - 1, 2))])
    u = (np.arange(32) + 0.5) / 32
    bad, worst = 0, 0.0
    for corner in corners:
        X, Y = np.meshgrid(corner[0] + u, corner[1] + u, indexing="ij")
        VD = float(Q(X, Y, p).mean())
        for t in ts:
            eta = L * c * t
            w = omega1(p, corner, t)
            worst = max(worst, w / (eta * VD))
            bad += int(w > eta * VD)
    return RozenblumReport(p, c, doubling, lip, ratio, pairs, bad, len(corners) * len(ts), worst)


# --- upper-bound chain ----------------------------------------------------------------------

@dataclass(frozen=True)
class UpperChain:
    p: float
    N: float
    gamma2: float
    gamma2_tilde: float
    C_lambda_cap: float
    C_tilde: float
    bound_proof: float
    bound_statement: float


def upper_bound_chain(N, p: float) -> UpperChain:
    """Explicit constants of the Weyl-based upper bound at N >= 3.

    lam <= cap (N / ln N)^(p/(p+1)) with cap = (2(p+1)/(p G~2))^(p/(p+1)) + 1 gives
    sum beta_j <= lam N <= cap N^((2p+1)/(p+1)) / (ln N)^(p/(p+1)).  Since
    (ln N + 1) / ln N <= 1 + 1/ln 3 for N >= 3, the proof's form holds with
    C~ = cap (1 + 1/ln 3)^(p/(p+1)).  The statement's denominator
    (1 + ln^p N)^(1/(p+1)) is evaluated with the same C~ for comparison.
    """
    if N < 3:
        raise ValueError("the chain needs N >= 3")
    g2t = gamma2_tilde(p)
    q = p / (p + 1.0)
    cap = (2.0 * (p + 1.0) / (p * g2t)) ** q + 1.0
    ct = cap * (1.0 + 1.0 / math.log(3.0)) ** q
    e = (2 * p + 1) / (p + 1)
    lnN = math.log(N)
    return UpperChain(p, float(N), GAMMA_2, g2t, cap, ct,
                      ct * N**e / (lnN + 1.0) ** q,
                      ct * N**e / (1.0 + lnN**p) ** (1.0 / (p + 1.0)))


@dataclass(frozen=True)
class UpperBoundRow:
    N: int
    sum_beta: float
    bound_proof: float
    bound_statement: float
    holds_proof: bool
    holds_statement: bool


def verify_upper_bound(spectrum, p: float) -> list[UpperBoundRow]:
    """Partial sums of the comparison-operator spectrum against both forms of the chain bound (N >= 3)."""
    if hasattr(spectrum, "result"):
        spectrum = spectrum.result
    if not getattr(spectrum, "converged", True):
        raise SpectrumError("spectrum is flagged unconverged; refusing to verify bounds on it")
    vals = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    sums = np.cumsum(vals)
    rows = []
    for N in range(3, len(vals) + 1):
        ch = upper_bound_chain(N, p)
        s = float(sums[N - 1])
        rows.append(UpperBoundRow(N, s, ch.bound_proof, ch.bound_statement,
                                  s <= ch.bound_proof, s <= ch.bound_statement))
    return rows


def comparison_spectrum(p: float, k: int = 50, R: float = 12.0, h: float = 0.05, tol: float = 1e-8):
    """Lowest k eigenvalues of -Lap + Q on [-R, R]^2 (Dirichlet) via the D4 sectors."""
    from .operators import ShiftedCross
    from .sectors import box_spectrum
    return box_spectrum(ShiftedCross(p), R, h, k, tol).result


def as_dict(obj) -> dict:
    return asdict(obj)
