"""Lowest eigenpairs of sparse symmetric matrices.

``lanczos_smallest`` runs a thick-restart Lanczos iteration with explicit
Rayleigh-Ritz on the projected matrix.  Converged pairs are locked and the
search is repeated from fresh start vectors against the locked space until
no eigenvalue below the current k-th one is left, so degenerate eigenvalues
come back with their multiplicity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dense import dense_oracle
from .operators import SparseSymMatrix

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, ritz_values=None, residuals=None):
        super().__init__(msg)
        self.ritz_values = ritz_values
        self.residuals = residuals


@dataclass(frozen=True)
class SolveSettings:
    k: int
    tol: float = 1e-8
    max_iter: int = 20000
    reorthogonalize: bool = True
    seed_vector: np.ndarray | None = None
    mode: Literal["shift_invert", "plain"] = "shift_invert"
    shift: float | None = None
    vectors: bool = False
    basis_size: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.mode not in ("shift_invert", "plain"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    eigenvectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    clusters: list[list[int]] = field(default_factory=list)
    converged: bool = True

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


def default_start(n: int) -> np.ndarray:
    v = 1.0 + (np.arange(n) % 7) / 10.0
    return v / np.linalg.norm(v)


def _alternate_start(n: int, r: int) -> np.ndarray:
    i = np.arange(n)
    v = np.sin(1.0 + (r + 1) * 0.7548776662466927 * i) + 0.5 * np.cos(0.3 * (r + 2) * np.sqrt(i + 1.0))
    return v / np.linalg.norm(v)


def _orthogonalize(w, V, full):
    # classical Gram-Schmidt, second pass always (full) or only on severe cancellation
    if V.shape[1] == 0:
        return w, np.zeros(0)
    h = V.T @ w
    w = w - V @ h
    norm0 = np.linalg.norm(h)
    if full or np.linalg.norm(w) < 0.7071 * np.hypot(norm0, np.linalg.norm(w)):
        h2 = V.T @ w
        w = w - V @ h2
        h = h + h2
    return w, h


class _Operator:
    """Spectral transform whose largest eigenvalues are the smallest of A."""

    def __init__(self, A: SparseSymMatrix, mode: str, shift: float | None):
        self.A = A.to_scipy()
        self.n = A.dim
        self.mode = mode
        lo, hi = A.gershgorin()
        lo = max(lo, A.gershgorin(scaled=True)[0])
        self.norm_est = max(abs(lo), abs(hi), 1.0)
        if mode == "plain":
            self.apply: Callable = lambda v: -(self.A @ v)
            self.shift = None
        else:
            self.shift = lo - 1.0 if shift is None else float(shift)
            M = (self.A - self.shift * sp.identity(self.n, format="csr")).tocsc()
            lu = spla.splu(M, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
            self.M = M
            self.apply = lu.solve
            self.norm_est = max(hi - self.shift, 1.0)

    def apply_refined(self, X):
        # one step of iterative refinement removes most of the LU backward error
        Y = self.apply(X)
        return Y + self.apply(X - self.M @ Y)

    def to_eig(self, theta):
        if self.mode == "plain":
            return -theta
        return self.shift + 1.0 / theta

    def converged(self, theta, res, V, S, tol):
        """Ritz vectors if every pair meets ``tol`` on A, else None."""
        if self.mode == "plain":
            # the Lanczos residual estimate is the residual of A itself
            return V @ S if np.all(res <= 0.5 * tol) else None
        # screen with the transformed residual, then confirm on A directly:
        # a bound through ||A - shift|| is useless for steep potentials
        if np.any(res > 1e-6 * np.abs(theta)):
            return None
        # one extra solve purges rounding noise where the potential is huge
        Y = self.apply(V @ S)
        Y /= np.linalg.norm(Y, axis=0)
        AY = self.A @ Y
        lam = np.einsum("ij,ij->j", Y, AY)
        true_res = np.linalg.norm(AY - Y * lam, axis=0)
        return Y if np.all(true_res <= 0.5 * tol) else None


def _krylov_schur(op: _Operator, nev, v0, locked, settings, budget):
    n = op.n
    if settings.basis_size:
        m = settings.basis_size
    elif op.mode == "plain":
        # unaccelerated Lanczos on stiff FD matrices needs long Krylov runs; cap memory at ~1 GB
        m = max(2 * nev + 20, min(1000, int(1.25e8 // n)))
    else:
        m = max(2 * nev + 20, 40)
    m = min(m, n - locked.shape[1])
    nev = min(nev, m)
    full = settings.reorthogonalize
    V = np.zeros((n, m + 1))
    H = np.zeros((m, m))
    v, _ = _orthogonalize(v0, locked, True)
    V[:, 0] = v / np.linalg.norm(v)
    j0 = 0
    beta = 0.0
    iters = 0
    restarts = 0
    while True:
        for j in range(j0, m):
            w = op.apply(V[:, j])
            w, _ = _orthogonalize(w, locked, True)
            w, h = _orthogonalize(w, V[:, : j + 1], full)
            if locked.shape[1]:
                # rounding from the basis pass leaks back into the locked space when beta is small
                w = w - locked @ (locked.T @ w)
            H[: j + 1, j] = h
            H[j, : j + 1] = h
            beta = np.linalg.norm(w)
            iters += 1
            hnorm = max(np.abs(h).max(), 1e-300)
            if beta <= 1e-13 * hnorm:
                # invariant subspace: continue with a fresh direction
                if j + 1 + locked.shape[1] >= n:
                    beta = 0.0
                    m_eff = j + 1
                    break
                w = _alternate_start(n, 100 + j)
                w, _ = _orthogonalize(w, locked, True)
                w, _ = _orthogonalize(w, V[:, : j + 1], True)
                w, _ = _orthogonalize(w, V[:, : j + 1], True)
                V[:, j + 1] = w / np.linalg.norm(w)
                beta = 0.0
            else:
                V[:, j + 1] = w / beta
            m_eff = j + 1
            if m_eff >= nev and (m_eff == m or (m_eff - j0) % max(8, m_eff // 8) == 0):
                theta, S = np.linalg.eigh(H[:m_eff, :m_eff])
                theta, S = theta[::-1], S[:, ::-1]
                res = np.abs(beta * S[m_eff - 1, :nev])
                Y = op.converged(theta[:nev], res, V[:, :m_eff], S[:, :nev], settings.tol)
                if Y is not None:
                    return theta[:nev], Y, iters
            if iters >= budget:
                break
        theta, S = np.linalg.eigh(H[:m_eff, :m_eff])
        theta, S = theta[::-1], S[:, ::-1]
        res = np.abs(beta * S[m_eff - 1, :nev])
        Y = op.converged(theta[:nev], res, V[:, :m_eff], S[:, :nev], settings.tol)
        if Y is not None:
            return theta[:nev], Y, iters
        if beta == 0.0:
            return theta[:nev], V[:, :m_eff] @ S[:, :nev], iters
        if iters >= budget:
            raise ConvergenceError(
                f"Lanczos did not converge in {iters} iterations",
                ritz_values=op.to_eig(theta[:nev]), residuals=res,
            )
        # thick restart: keep the leading Ritz vectors plus the residual direction
        keep = min(max(nev + (m_eff - nev) // 2, nev + 1), m_eff - 1)
        Y = V[:, :m_eff] @ S[:, :keep]
        V[:, :keep] = Y
        V[:, keep] = V[:, m_eff]
        H[:] = 0.0
        H[np.arange(keep), np.arange(keep)] = theta[:keep]
        j0 = keep
        restarts += 1


def _clusters(vals, tol):
    groups, cur = [], [0]
    for i in range(1, len(vals)):
        if vals[i] - vals[i - 1] <= tol:
            cur.append(i)
        else:
            if len(cur) > 1:
                groups.append(cur)
            cur = [i]
    if len(cur) > 1:
        groups.append(cur)
    return groups


def lanczos_smallest(A: SparseSymMatrix, s: SolveSettings) -> SpectrumResult:
    """k smallest eigenvalues of A (ascending) with residuals ||Av - lam v|| <= tol."""
    n = A.dim
    if s.k >= n:
        raise ValueError(f"need k < dim, got k={s.k}, dim={n}")
    op = _Operator(A, s.mode, s.shift)
    Asp = op.A
    v0 = default_start(n) if s.seed_vector is None else np.asarray(s.seed_vector, dtype=float)
    locked = np.zeros((n, 0))
    vals = np.zeros(0)
    budget = s.max_iter
    total = 0
    rounds = 0
    nev = s.k
    while True:
        try:
            theta, Y, it = _krylov_schur(op, nev, v0, locked, s, budget - total)
        except ConvergenceError as exc:
            exc.ritz_values = np.concatenate([vals, exc.ritz_values])
            raise
        total += it
        lam = op.to_eig(theta)
        Y /= np.linalg.norm(Y, axis=0)
        if rounds == 0:
            accept = np.ones(len(lam), dtype=bool)
        else:
            kth = np.sort(vals)[s.k - 1] if len(vals) >= s.k else np.inf
            accept = lam < kth + 100 * s.tol
        if not accept.any():
            break
        vals = np.concatenate([vals, lam[accept]])
        locked = np.column_stack([locked, Y[:, accept]])
        # re-orthonormalize the locked block (eigenvectors are orthogonal up to rounding)
        locked, _ = np.linalg.qr(locked)
        rounds += 1
        if locked.shape[1] >= n - 1 or total >= budget:
            break
        v0 = _alternate_start(n, rounds)
        nev = 1 if len(vals) >= s.k else s.k - len(vals)
    # final Rayleigh-Ritz on the locked space cleans mixed degenerate copies
    G = locked.T @ (Asp @ locked)
    G = 0.5 * (G + G.T)
    w, Z = np.linalg.eigh(G)
    X = locked @ Z
    order = np.argsort(w, kind="stable")[: s.k]
    w, X = w[order], X[:, order]
    R = Asp @ X - X * w
    res = np.linalg.norm(R, axis=0)
    polish = 0
    while s.mode == "shift_invert" and np.any(res > s.tol) and polish < 4:
        # inverse subspace step with refined solves damps high-frequency rounding noise
        B, _ = np.linalg.qr(op.apply_refined(X))
        G = B.T @ (Asp @ B)
        w, Z = np.linalg.eigh(0.5 * (G + G.T))
        X = B @ Z
        X /= np.linalg.norm(X, axis=0)
        res = np.linalg.norm(Asp @ X - X * w, axis=0)
        polish += 1
    clusters = _clusters(w, 100 * s.tol)
    meta = dict(A.meta)
    meta.update(
        {"matrix": A.fingerprint(), "dim": n, "k": s.k, "tol": s.tol, "mode": s.mode,
         "shift": op.shift, "iterations": total, "rounds": rounds, "polish_steps": polish}
    )
    if np.any(res > s.tol):
        raise ConvergenceError(
            f"residuals above tol {s.tol}: max {res.max():.3e}", ritz_values=w, residuals=res
        )
    return SpectrumResult(w, res, X if s.vectors else None, meta, clusters, True)


def count_below(spectrum, threshold: float) -> tuple[int, bool]:
    """Eigenvalues strictly below ``threshold``; second item flags a lower estimate.

    For a partial spectrum (``SpectrumResult``) the count is only a lower
    estimate when every computed eigenvalue lies below the threshold.
    """
    if isinstance(spectrum, SpectrumResult):
        vals = np.asarray(spectrum.eigenvalues)
        partial = not spectrum.meta.get("complete", False)
    else:
        vals = np.asarray(spectrum)
        partial = False
    count = int(np.searchsorted(vals, threshold, side="left"))
    lower = partial and count == len(vals)
    return count, lower


__all__ = [
    "ConvergenceError", "SolveSettings", "SpectrumResult", "lanczos_smallest",
    "dense_oracle", "count_below", "default_start",
]
