"""Ground states of the half-line oscillator -u'' + t^p and of its bracketed variants.

gamma_p is the lowest eigenvalue of -u'' + |t|^p on the line, equivalently of
-u'' + t^p on t > 0 with u'(0) = 0.  The half line is cut at T with a
Dirichlet end where the potential exceeds the expected eigenvalue by 50.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import bisect

from .eigensolve import SolveSettings, lanczos_smallest
from .operators import DIRICHLET, NEUMANN, Grid1D, HalfLinePower, PiecewisePower, assemble_1d

log = logging.getLogger(__name__)

SOLVE_TOL = 1e-9
# gamma_p <= pi^2/4 for every p >= 1, so this bounds the target eigenvalue
E_TARGET = math.pi**2 / 4


class TruncationError(RuntimeError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class GammaPoint:
    p: float
    gamma: float
    err_est: float
    h_used: float
    T_used: float
    accuracy_miss: bool = False


@dataclass(frozen=True)
class BracketedGamma:
    n: int
    p: float
    epsilon: float
    gamma_N: float
    gamma_D: float
    gamma_np: float
    nu_p: float
    break_point: float
    length: float


def lowest(A, tol=SOLVE_TOL) -> float:
    # very fine grids have a rounding floor near eps * ||A|| in the residual;
    # the eigenvalue error is bounded by residual^2 / gap, so this costs nothing
    off = A.to_scipy() - sp.diags(A.diagonal())
    kinetic = float(abs(off).sum(axis=1).max()) if A.dim > 1 else 0.0
    tol = max(tol, 1e-13 * kinetic)
    return float(lanczos_smallest(A, SolveSettings(1, tol=tol)).eigenvalues[0])


def _half_line(p, T, n):
    return lowest(assemble_1d(HalfLinePower(p), Grid1D(0.0, T, n, NEUMANN, DIRICHLET)))


def tail_length(p: float, e_target: float = E_TARGET, margin: float = 50.0) -> float:
    """T with T^p = e_target + margin, and at least 1 + 20/p.

    For steep potentials the wall near t = 1 has width ~ 1/p, so the level
    condition alone cuts the domain inside the wall.
    """
    return max((e_target + margin) ** (1.0 / p), 1.0 + 20.0 / p)


def default_spacing(p: float, T: float) -> float:
    # steep potentials rise over a length ~ T/p near the wall
    return min(0.01, T / (20.0 * p))


def richardson(coarse: float, fine: float, order: int = 2) -> tuple[float, float]:
    """Two-grid extrapolant for spacing ratio 2 and the |extrapolant - fine| error estimate."""
    f = 2.0**order
    ext = (f * fine - coarse) / (f - 1.0)
    return ext, abs(ext - fine)


def compute_gamma(p: float, target_err: float = 1e-6, h: float | None = None,
                  max_refine: int = 3) -> GammaPoint:
    """gamma_p from a pair of nested grids h and h/2 with Richardson extrapolation."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not target_err > 0:
        raise ValueError("target_err must be positive")
    T = tail_length(p)
    h = default_spacing(p, T) if h is None else float(h)
    n = max(int(round(T / h)) - 1, 3)
    for attempt in range(max_refine + 1):
        coarse = _half_line(p, T, n)
        n_fine = 2 * n + 1
        fine = _half_line(p, T, n_fine)
        gamma, err = richardson(coarse, fine)
        if err <= target_err or attempt == max_refine:
            break
        n = n_fine
    h_fine = T / (n_fine + 1)
    miss = err > target_err
    # tail test: doubling T at the fine spacing must not move the answer
    for doubling in range(3):
        T2 = 2 * T
        n2 = int(round(T2 / h_fine)) - 1
        moved = abs(_half_line(p, T2, n2) - fine)
        if moved <= max(err, 1e-12):
            break
        if doubling == 2:
            raise TruncationError(f"p={p}: tail test failed after doubling T twice (change {moved:.3e})")
        log.info("p=%g: tail test moved by %.3e, doubling T=%g", p, moved, T)
        T = T2
        n = int(round(T / (2 * h_fine))) - 1
        coarse = _half_line(p, T, n)
        n_fine = 2 * n + 1
        h_fine = T / (n_fine + 1)
        fine = _half_line(p, T, n_fine)
        gamma, err = richardson(coarse, fine)
        miss = err > target_err
    return GammaPoint(p, gamma, err, h_fine, T, miss)


def p_grid(p_min: float, p_max: float, points: int, scale: str = "log") -> np.ndarray:
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        return np.array([float(p_min)])
    if scale == "log":
        return np.geomspace(p_min, p_max, points)
    if scale == "linear":
        return np.linspace(p_min, p_max, points)
    raise ValueError(f"unknown scale {scale!r}")


@dataclass
class GammaCurve:
    points: list[GammaPoint]
    argmin: float
    minimum: float
    argmin_refined: float

    def write_csv(self, path) -> None:
        write_gamma_csv(self.points, path)


def gamma_curve(ps, target_err: float = 1e-6) -> GammaCurve:
    ps = [float(p) for p in ps]
    if any(p < 1 for p in ps):
        raise ValueError("all p must be >= 1")
    pts = [compute_gamma(p, target_err) for p in ps]
    g = np.array([q.gamma for q in pts])
    i = int(np.argmin(g))
    refined = ps[i]
    if 0 < i < len(ps) - 1:
        # vertex of the parabola through the three points around the grid minimum
        x, y = np.array(ps[i - 1:i + 2]), g[i - 1:i + 2]
        a, b, _ = np.polyfit(x, y, 2)
        if a > 0:
            refined = float(-b / (2 * a))
    return GammaCurve(pts, ps[i], float(g[i]), refined)


GAMMA_COLUMNS = ("p", "gamma", "err_est", "h_used", "T_used")


def write_gamma_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAMMA_COLUMNS)
        for q in points:
            w.writerow([repr(float(getattr(q, c))) for c in GAMMA_COLUMNS])


def read_gamma_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != GAMMA_COLUMNS:
        raise ValueError(f"unexpected columns {tuple(rows[0].keys())}")
    return [{k: float(v) for k, v in r.items()} for r in rows]


# --- bracketed problem H_{n,p} ---------------------------------------------

def delta_of_epsilon(eps: float) -> float:
    """Largest delta with sin 2x >= 2(1 - eps) x on [0, delta].

    sin 2x - 2(1 - eps) x is concave on [0, pi/2], positive just right of 0
    and negative at pi/2, so its positive root is the first violation.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    f = lambda x: math.sin(2 * x) - 2 * (1 - eps) * x
    # move lo off the double root at 0 so the bracket has a sign change
    lo = min(1e-3, math.sqrt(6 * eps) / 4)
    while f(lo) <= 0:
        lo *= 0.5
    return bisect(f, lo, math.pi / 2, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def nu(n: int, p: float) -> float:
    return float(n) ** ((2 * p + 2) / (p + 2))


def _piece(p, a, b, cells, bl, br, pot):
    return lowest(assemble_1d(pot, Grid1D(a, b, cells - 1, bl, br)))


def compute_bracketed_gamma(n: int, p: float, epsilon: float, h: float = 0.01) -> BracketedGamma:
    """Lowest eigenvalue of H_{n,p} and of its Neumann/Dirichlet split at t = nu_p delta(eps).

    The spacing is adjusted so that the break point is a node; the far end
    then sits within h/2 of nu_p pi/4.  Splitting at a node relaxes (Neumann)
    or constrains (Dirichlet) the same discrete quadratic form, so the
    sandwich gamma_N <= gamma_np <= gamma_D holds exactly on the grid.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    v = nu(n, p)
    L = v * math.pi / 4
    b = min(v * delta_of_epsilon(epsilon), L)
    cells_in = int(round(b / h))
    if cells_in < 4:
        raise ResolutionError(f"break point {b:.4g} is not resolved by h={h}")
    h = b / cells_in
    cells_out = int(round((L - b) / h))
    outer = (2.0 / math.pi) ** p
    # nodes at the break sit within rounding of b; keep them on the inner branch
    pot = PiecewisePower(p, b * (1 + 1e-12), outer)
    if cells_out < 4:
        g = _piece(p, 0.0, b, cells_in, NEUMANN, NEUMANN, pot)
        return BracketedGamma(n, p, epsilon, g, g, g, v, b, b)
    end = b + cells_out * h
    g_np = _piece(p, 0.0, end, cells_in + cells_out, NEUMANN, NEUMANN, pot)
    g_n = min(_piece(p, 0.0, b, cells_in, NEUMANN, NEUMANN, pot),
              _piece(p, b, end, cells_out, NEUMANN, NEUMANN, pot))
    g_d = min(_piece(p, 0.0, b, cells_in, NEUMANN, DIRICHLET, pot),
              _piece(p, b, end, cells_out, DIRICHLET, NEUMANN, pot))
    return BracketedGamma(n, p, epsilon, g_n, g_d, g_np, v, b, end)


def as_dict(obj) -> dict:
    return asdict(obj)
