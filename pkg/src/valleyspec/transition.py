"""Sub- and supercritical diagnostics for L_p(lam) = -Lap + |xy|^p - lam (x^2+y^2)^(p/(p+2)).

Two kinds of probes:

* the 1D angular comparison operators on (0, pi/4) that bracket the
  annulus problems.  After x = t / nu with nu = n^((2p+2)/(p+2)) they read
  nu^2 (H - lam_eff) with H = -d^2/dt^2 + W(t) on (0, nu pi/4), Neumann ends;
* ground states of L_p(lam) on growing boxes [-R, R]^2.

The verdict thresholds in :class:`ClassifyRule` are conventions; only the
asymptotic behaviour is a theorem.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .eigensolve import SolveSettings, lanczos_smallest
from .gamma import ResolutionError, compute_gamma, delta_of_epsilon, lowest, nu
from .operators import (NEUMANN, CrossValley, Grid1D, HalfLinePower, PiecewisePower,
                        SparseSymMatrix, assemble_1d)
from .sectors import quadrant_problem

DEFAULT_EPSILON = 0.1
DEFAULT_EPSILON_PRIME = 0.05
# spacing in the scaled variable t, where the oscillator lives on an O(1) scale
DEFAULT_T_SPACING = 0.01
MAX_T_SPACING = 0.1


class Side(str, Enum):
    LOWER = "LowerChain"
    UPPER = "UpperChain"


class Verdict(str, Enum):
    SUBCRITICAL = "SubcriticalSignature"
    SUPERCRITICAL = "SupercriticalSignature"
    INCONCLUSIVE = "Inconclusive"


@lru_cache(maxsize=None)
def gamma_ref(p: float) -> float:
    return compute_gamma(float(p)).gamma


# --- angular probes ------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdProbe:
    n: int
    p: float
    lambda_: float
    epsilon: float
    mu: float
    side: Side
    predicted_band: tuple[float, float]
    epsilon_prime: float
    in_band: bool
    gamma_np: float
    h: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["side"] = self.side.value
        return d


def effective_lambda(lam: float, p: float, epsilon: float, side: Side) -> float:
    """lam (1-eps)^(-p-1) for the minorant chain, (1-eps) lam for the majorant."""
    if Side(side) is Side.LOWER:
        return lam * (1.0 - epsilon) ** (-p - 1.0)
    return (1.0 - epsilon) * lam


def comparison_index(p: float, epsilon: float) -> float:
    """Annulus index beyond which the n-th annulus operator dominates the (n-1)-th angular one."""
    return 1.0 / (1.0 - (1.0 - epsilon) ** ((p + 2.0) / (4.0 * p + 4.0)))


def _scaled_oscillator(n, p, epsilon, side, h):
    """H on (0, nu pi/4) with Neumann ends, unscaled; returns (matrix, spacing used)."""
    if not 0 < h <= MAX_T_SPACING:
        raise ResolutionError(f"spacing {h} does not resolve the unit oscillator scale (max {MAX_T_SPACING})")
    v = nu(n, p)
    L = v * math.pi / 4
    if Side(side) is Side.UPPER:
        cells = max(int(round(L / h)), 8)
        g = Grid1D(0.0, L, cells - 1, NEUMANN, NEUMANN)
        return assemble_1d(HalfLinePower(p), g), g.h
    b = min(v * delta_of_epsilon(epsilon), L)
    cells_in = int(round(b / h))
    if cells_in < 4:
        raise ResolutionError(f"break point {b:.4g} is not resolved by h={h}")
    h = b / cells_in
    cells_out = int(round((L - b) / h))
    end = b + cells_out * h
    pot = PiecewisePower(p, b * (1 + 1e-12), (2.0 / math.pi) ** p)
    g = Grid1D(0.0, end, cells_in + cells_out - 1, NEUMANN, NEUMANN)
    return assemble_1d(pot, g), h


def angular_matrix(n: int, p: float, lam: float, epsilon: float = DEFAULT_EPSILON,
                   side: Side = Side.LOWER, h: float = DEFAULT_T_SPACING) -> SparseSymMatrix:
    """The comparison operator nu^2 (H - lam_eff) as a matrix; its lowest eigenvalue is mu."""
    _check_probe(n, epsilon)
    H, _ = _scaled_oscillator(n, p, epsilon, side, h)
    s = nu(n, p) ** 2
    A = SparseSymMatrix(H.dim, H.row_offsets, H.col_indices, s * H.values, H.nodes, H.weights, dict(H.meta))
    return A.plus_diagonal(np.full(H.dim, -s * effective_lambda(lam, p, epsilon, side)))


def _check_probe(n, epsilon):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


def angular_threshold(n: int, p: float, lam: float, epsilon: float = DEFAULT_EPSILON,
                      side: Side = Side.LOWER, epsilon_prime: float = DEFAULT_EPSILON_PRIME,
                      h: float = DEFAULT_T_SPACING) -> ThresholdProbe:
    """Lowest eigenvalue of the angular comparison operator and its band check.

    LowerChain is the operator with the piecewise minorant of sin 2x
    (mu'_{n,p}); UpperChain uses sin x <= x (mu_{n,p} of the supercritical
    argument).  The solve is done on the unscaled oscillator, whose entries
    are O(1/h^2), and mapped back by nu^2.
    """
    _check_probe(n, epsilon)
    side = Side(side)
    H, h_used = _scaled_oscillator(n, p, epsilon, side, h)
    g_np = lowest(H)
    s = nu(n, p) ** 2
    lam_eff = effective_lambda(lam, p, epsilon, side)
    mu = s * (g_np - lam_eff)
    gp = gamma_ref(p)
    band = ((gp - lam_eff - epsilon_prime) * s, (gp - lam_eff + epsilon_prime) * s)
    return ThresholdProbe(n, p, lam, epsilon, mu, side, band, epsilon_prime,
                          bool(band[0] <= mu <= band[1]), g_np, h_used)


def band_onset(p: float, lam: float, ns, epsilon: float = DEFAULT_EPSILON,
               side: Side = Side.LOWER, epsilon_prime: float = DEFAULT_EPSILON_PRIME,
               h: float = DEFAULT_T_SPACING) -> tuple[int | None, list[ThresholdProbe]]:
    """Smallest scanned n from which every later probe sits in its band (None if the last one does not)."""
    ns = sorted(int(n) for n in ns)
    probes = [angular_threshold(n, p, lam, epsilon, side, epsilon_prime, h) for n in ns]
    onset = None
    for probe in reversed(probes):
        if not probe.in_band:
            break
        onset = probe.n
    return onset, probes


def scaling_slope(probes) -> float:
    """Least-squares slope of log|mu| against log n."""
    n = np.array([q.n for q in probes], dtype=float)
    mu = np.abs([q.mu for q in probes])
    return float(np.polyfit(np.log(n), np.log(mu), 1)[0])


def scaling_exponent(p: float) -> float:
    return (4.0 * p + 4.0) / (p + 2.0)


def radial_dirichlet_threshold(n: int, h: float = 1e-3) -> float:
    """Lowest eigenvalue of -(1/r)(r u')' on (n-1, n) with Dirichlet ends.

    The form int r u'^2 / int r u^2 is discretized with midpoint radii and
    symmetrized by r^(1/2), so the matrix is symmetric.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = int(round(1.0 / h))
    if m < 4:
        raise ResolutionError(f"spacing {h} too coarse for a unit interval")
    h = 1.0 / m
    r = (n - 1) + h * np.arange(1, m)
    half = (n - 1) + h * (np.arange(m) + 0.5)
    diag = (half[:-1] + half[1:]) / (h * h * r)
    off = -half[1:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
    idx = np.arange(m - 2)
    A = SparseSymMatrix.from_edges(diag, idx, idx + 1, off, nodes=r, weights=r * h)
    if A.dim <= 3:
        return float(np.linalg.eigvalsh(A.to_dense())[0])
    return float(lanczos_smallest(A, SolveSettings(1, tol=1e-9 * max(1.0, float(diag.max())))).eigenvalues[0])


# --- box ground states ----------------------------------------------------------

def truncated_ground_state(p: float, lam: float, R: float, h: float, tol: float = 1e-9) -> float:
    """Lowest eigenvalue of L_p(lam) on [-R, R]^2 with Dirichlet faces.

    The ground state is even in x and y, so only the NN quadrant problem is solved.
    """
    if not R > 1:
        raise ValueError(f"R must exceed 1, got {R}")
    A, _ = quadrant_problem("NN", R, h, CrossValley(p, lam))
    return float(lanczos_smallest(A, SolveSettings(1, tol=tol)).eigenvalues[0])


@dataclass(frozen=True)
class ClassifyRule:
    """Verdict thresholds, in units of h^2 for the difference scale."""

    scale: float = 10.0
    growth: float = 0.95
    slack: float = 1e-9
    near_critical: float = 0.05


@dataclass
class TransitionReport:
    p: float
    lambda_: float
    h: float
    radii: list
    ground_states: list
    verdict: Verdict
    gamma_ref: float
    ratio: float
    near_critical: bool
    spread: float
    deltas: list = field(default_factory=list)
    rule: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return json.dumps(d, indent=2, sort_keys=True)

    def write_json(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json() + "\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("radius", "ground_state", "delta"))
            for i, (R, g) in enumerate(zip(self.radii, self.ground_states)):
                d = self.ground_states[i] - self.ground_states[i - 1] if i else float("nan")
                w.writerow([repr(float(R)), repr(float(g)), repr(float(d))])


def verdict(radii, ground_states, h: float, rule: ClassifyRule = ClassifyRule()) -> Verdict:
    """Deterministic verdict from a ground-state sweep.

    Subcritical: the last difference is below scale*h^2 and the difference
    magnitudes do not grow.  Supercritical: every slope d/dR is below
    -scale*h^2 and the slope magnitudes do not shrink by more than the growth
    factor.  Anything else is inconclusive.
    """
    R = np.asarray(radii, dtype=float)
    g = np.asarray(ground_states, dtype=float)
    d = np.diff(g)
    tiny = rule.scale * h * h
    mags = np.abs(d)
    if mags[-1] < tiny and np.all(mags[1:] <= mags[:-1] + rule.slack):
        return Verdict.SUBCRITICAL
    slopes = d / np.diff(R)
    if np.all(slopes < -tiny) and np.all(np.abs(slopes[1:]) >= rule.growth * np.abs(slopes[:-1])):
        return Verdict.SUPERCRITICAL
    return Verdict.INCONCLUSIVE


def classify(p: float, lam: float, radii, h: float, rule: ClassifyRule = ClassifyRule(),
             ground_states=None) -> TransitionReport:
    """Sweep truncated ground states over ``radii`` and apply :func:`verdict`.

    ``ground_states`` may be passed to reuse an earlier sweep.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("classify needs at least 3 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if ground_states is None:
        ground_states = [truncated_ground_state(p, lam, R, h) for R in radii]
    gs = [float(x) for x in ground_states]
    gp = gamma_ref(p)
    return TransitionReport(
        p=p, lambda_=lam, h=h, radii=radii, ground_states=gs,
        verdict=verdict(radii, gs, h, rule), gamma_ref=gp, ratio=lam / gp,
        near_critical=abs(lam - gp) < rule.near_critical,
        spread=float(max(gs) - min(gs)), deltas=[float(x) for x in np.diff(gs)],
        rule=asdict(rule),
    )
