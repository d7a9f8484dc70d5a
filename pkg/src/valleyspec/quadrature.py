"""Globally adaptive Gauss-Kronrod (7/15) quadrature and grid quadrature helpers."""
from __future__ import annotations

import heapq
import math

import numpy as np

# 15-point Kronrod abscissae (positive half, descending) and weights; the
# embedded 7-point Gauss rule uses abscissae 1, 3, 5, 7.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_NODES = np.concatenate([-_XGK[1::2][:-1], _XGK[1::2][::-1]])
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    pass


def gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel: (Kronrod estimate, |Kronrod - Gauss|)."""
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    fx = np.asarray(f(c + r * KRONROD_NODES), dtype=float)
    k = r * float(KRONROD_WEIGHTS @ fx)
    g = r * float(GAUSS_WEIGHTS @ fx[1::2])
    return k, abs(k - g)


def integrate(f, a: float, b: float, abs_tol: float = 1e-10, rel_tol: float = 1e-12,
              max_panels: int = 20000) -> tuple[float, float]:
    """Adaptive bisection of the worst panel until the summed error estimate meets tolerance.

    ``f`` must accept a numpy array.  Returns (value, error estimate).
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    val, err = gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    panels = 1
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if panels >= max_panels:
            raise QuadratureError(f"no convergence after {panels} panels (error {total_err:.3e})")
        e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise QuadratureError("panel width underflow")
        v1, e1 = gk15(f, lo, mid)
        v2, e2 = gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        panels += 1
        if panels % 64 == 0:
            # resum to shed accumulated cancellation
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
    return sign * total, total_err


def trapezoid_to(f_row: np.ndarray, h: float, x_end: float) -> float:
    """Integral over [0, x_end] of the piecewise-linear interpolant of samples at 0, h, 2h, ...

    The last cell is weighted by the fraction it covers.
    """
    if x_end <= 0:
        return 0.0
    s = x_end / h
    full = int(math.floor(s))
    full = min(full, len(f_row) - 1)
    total = h * (0.5 * f_row[0] + f_row[1:full].sum() + 0.5 * f_row[full]) if full >= 1 else 0.0
    frac = s - full
    if frac > 0 and full + 1 < len(f_row):
        f0, f1 = f_row[full], f_row[full + 1]
        fe = f0 + frac * (f1 - f0)
        total += 0.5 * frac * h * (f0 + fe)
    return total


def disk_power_integral_closed(p: float) -> float:
    """Integral of (1 - x^2 - y^2)^((p+1)/p) over the unit disk."""
    return math.pi * p / (2 * p + 1)


def disk_power_integral_quad(p: float) -> float:
    """Same integral by iterated Cartesian quadrature; both endpoints are smoothed by sine maps."""
    q = (p + 1) / p

    def inner(x):
        # y = a sin(phi): int (a^2 - y^2)^q dy = a^(2q+1) int cos^(2q+1) phi dphi
        a2 = np.clip(1.0 - x * x, 0.0, None)
        col, _ = integrate(lambda phi: np.cos(phi) ** (2 * q + 1), -math.pi / 2, math.pi / 2,
                           abs_tol=1e-15, rel_tol=1e-15)
        return a2 ** (q + 0.5) * col

    # x = sin(psi)
    val, _ = integrate(lambda psi: inner(np.sin(psi)) * np.cos(psi), -math.pi / 2, math.pi / 2,
                       abs_tol=1e-15, rel_tol=1e-15)
    return val
