"""D4 symmetry sectors of box and horn problems.

For a potential even in x and y and symmetric under x <-> y, on a square
lattice that contains the axes, the full spectrum is the union of four
quadrant problems with Neumann (even) or Dirichlet (odd) conditions on
x = 0 and y = 0.  The mirror-ghost Neumann stencil is exactly the even
restriction of the full five-point stencil, so the split is exact at the
discrete level, not only in the limit.  The ND and DN sectors are
isospectral under x <-> y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import SolveSettings, SpectrumResult, _clusters, lanczos_smallest
from .operators import DIRICHLET, NEUMANN, Grid2D, RegionError, SparseSymMatrix, Zero, assemble_2d

SECTORS = ("NN", "ND", "DN", "DD")
_BC = {"N": NEUMANN, "D": DIRICHLET}


@dataclass(frozen=True)
class Quadrant:
    """Quadrant lattice x_i = i*h, i = 0..m, with the matrix index of each node (-1 if not an unknown)."""

    h: float
    m: int
    sector: str
    index: np.ndarray

    @property
    def coords(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.h

    def field(self, v: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Nodal values on the quadrant lattice, scaled to unit L2 norm on the full plane.

        ``v`` is a unit vector in matrix coordinates.  Its odd/even extension
        to the four quadrants has four times the quadrant mass, hence the 1/2.
        """
        out = np.zeros(self.index.shape)
        mask = self.index >= 0
        out[mask] = v[self.index[mask]] / np.sqrt(weights[self.index[mask]])
        return 0.5 * out


def _restrict(A: SparseSymMatrix, keep: np.ndarray, meta: dict) -> SparseSymMatrix:
    S = A.to_scipy()[keep][:, keep].tocsr()
    S.eliminate_zeros()
    S.sort_indices()
    nodes = A.nodes[keep] if A.nodes is not None else None
    weights = A.weights[keep] if A.weights is not None else None
    return SparseSymMatrix(int(keep.sum()), S.indptr, S.indices, S.data, nodes, weights, meta)


def quadrant_problem(sector: str, R: float, h: float, potential=None, horn: bool = False,
                     extra=None) -> tuple[SparseSymMatrix, Quadrant]:
    """Sector matrix on [0, R]^2 (Dirichlet at x = R and y = R).

    ``potential`` is a 2D potential callable; ``horn`` additionally removes
    nodes with |xy| >= 1; ``extra`` is an optional callable added to the
    diagonal (used for -lam r^2 on the horn).
    """
    if sector not in SECTORS:
        raise ValueError(f"unknown sector {sector!r}")
    m = int(round(R / h))
    h = R / m
    bx, by = _BC[sector[0]], _BC[sector[1]]
    g = Grid2D((0.0, R), (0.0, R), m - 1, m - 1, (bx, DIRICHLET, by, DIRICHLET))
    A = assemble_2d(Zero() if potential is None else potential, g)
    if extra is not None:
        A = A.plus_diagonal(extra(A.nodes[:, 0], A.nodes[:, 1]))
    X, Y = A.nodes[:, 0], A.nodes[:, 1]
    keep = np.ones(A.dim, dtype=bool)
    if horn:
        keep = np.abs(X * Y) < 1.0 - 1e-12
        if not keep.any():
            raise RegionError("no lattice nodes inside the region")
    meta = dict(A.meta)
    meta.update({"sector": sector, "R": R, "h": h, "horn": horn})
    if not keep.all():
        A = _restrict(A, keep, meta)
    else:
        A = SparseSymMatrix(A.dim, A.row_offsets, A.col_indices, A.values, A.nodes, A.weights, meta)
    return A, _quadrant_of(A, R, h, sector)


@dataclass
class SectorSpectrum:
    result: SpectrumResult
    labels: list[str]
    vectors: list[tuple[str, int]]
    parts: dict


def symmetric_spectrum(build, k: int, tol: float = 1e-8, vectors: bool = False,
                       swap_symmetric: bool = True, margin: int = 4) -> SectorSpectrum:
    """Lowest ``k`` eigenvalues of a D4-symmetric problem from its four sectors.

    ``build(sector)`` returns the sector matrix.  Sector requests grow until
    each sector's largest computed eigenvalue reaches the merged k-th value,
    so no eigenvalue below it can be missing.
    """
    sectors = ("NN", "ND", "DD") if swap_symmetric else SECTORS
    mats = {s: build(s) for s in sectors}
    want = {s: min(math.ceil(k / 4) + margin, mats[s].dim - 1) for s in sectors}
    res: dict[str, SpectrumResult] = {}
    for _ in range(20):
        for s in sectors:
            if s not in res or res[s].k < want[s]:
                res[s] = lanczos_smallest(mats[s], SolveSettings(want[s], tol=tol, vectors=vectors))
        vals, labels = _merge(res, swap_symmetric)
        kth = vals[k - 1] if len(vals) >= k else np.inf
        short = [s for s in sectors
                 if res[s].eigenvalues[-1] < kth and res[s].k < mats[s].dim - 1]
        if not short and len(vals) >= k:
            break
        for s in short or sectors:
            want[s] = min(int(want[s] * 1.5) + margin, mats[s].dim - 1)
    else:
        raise RuntimeError("sector requests did not settle")
    vals, labels, resid, refs = _merge(res, swap_symmetric, full=True)
    meta = {
        "sectors": {s: {"k": res[s].k, "dim": mats[s].dim, "matrix": res[s].meta["matrix"]} for s in sectors},
        "k": k, "tol": tol, "complete": False,
    }
    meta.update({key: res["NN"].meta[key] for key in ("grid", "potential", "R", "h", "horn") if key in res["NN"].meta})
    out = SpectrumResult(vals[:k], resid[:k], None, meta, _clusters(vals[:k], 100 * tol), True)
    return SectorSpectrum(out, labels[:k], refs[:k], {"results": res, "matrices": mats})


def _merge(res, swap_symmetric, full=False):
    vals, labels, resid, refs = [], [], [], []
    for s, r in res.items():
        copies = [s, "DN"] if (swap_symmetric and s == "ND") else [s]
        for lab in copies:
            vals.append(r.eigenvalues)
            resid.append(r.residual_norms)
            labels.extend([lab] * r.k)
            refs.extend([(lab, i) for i in range(r.k)])
    vals = np.concatenate(vals)
    resid = np.concatenate(resid)
    order = np.argsort(vals, kind="stable")
    labels = [labels[i] for i in order]
    if not full:
        return vals[order], labels
    return vals[order], labels, resid[order], [refs[i] for i in order]


def sector_field(spec: SectorSpectrum, j: int, R: float, h: float, horn: bool = False):
    """(coords, field) of the j-th merged eigenfunction on its quadrant lattice.

    DN fields are the x <-> y transpose of the ND ones.
    """
    lab, i = spec.vectors[j]
    src = "ND" if lab == "DN" and "DN" not in spec.parts["results"] else lab
    r = spec.parts["results"][src]
    A = spec.parts["matrices"][src]
    if r.eigenvectors is None:
        raise ValueError("spectrum was computed without eigenvectors")
    quad = _quadrant_of(A, R, h, src)
    psi = quad.field(r.eigenvectors[:, i], A.weights)
    if lab == "DN" and src == "ND":
        psi = psi.T
    return quad.coords, psi


def _quadrant_of(A: SparseSymMatrix, R, h, sector) -> Quadrant:
    m = int(round(R / h))
    h = R / m
    index = np.full((m + 1, m + 1), -1, dtype=np.int64)
    ii = np.rint(A.nodes[:, 0] / h).astype(np.int64)
    jj = np.rint(A.nodes[:, 1] / h).astype(np.int64)
    index[ii, jj] = np.arange(A.dim)
    return Quadrant(h, m, sector, index)


def box_spectrum(potential, R: float, h: float, k: int, tol: float = 1e-8, vectors: bool = False):
    """Lowest k eigenvalues of ``potential`` on [-R, R]^2 with Dirichlet faces, via sectors."""
    if not getattr(potential, "d4_symmetric", False):
        raise ValueError(f"{type(potential).__name__} is not D4 symmetric")
    return symmetric_spectrum(lambda s: quadrant_problem(s, R, h, potential)[0], k, tol, vectors)


def horn_sector_spectrum(R: float, h: float, k: int, lam: float = 0.0, tol: float = 1e-8,
                         vectors: bool = False):
    extra = (lambda x, y: -lam * (x * x + y * y)) if lam else None
    return symmetric_spectrum(lambda s: quadrant_problem(s, R, h, None, horn=True, extra=extra)[0],
                              k, tol, vectors)


def unfold(psi: np.ndarray, label: str) -> np.ndarray:
    """Extend a quadrant field psi[i, j] at (i h, j h) to the full lattice on [-R, R]^2.

    N means even and D odd in the corresponding coordinate; the result has
    shape (2m+1, 2m+1) with the origin at index m.
    """
    sx = 1.0 if label[0] == "N" else -1.0
    sy = 1.0 if label[1] == "N" else -1.0
    top = np.concatenate([sy * psi[:, :0:-1], psi], axis=1)
    return np.concatenate([sx * top[:0:-1, :], top], axis=0)
