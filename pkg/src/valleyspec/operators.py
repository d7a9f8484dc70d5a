"""Finite-difference Hamiltonians on 1D intervals, 2D boxes and the horn region.

All matrices are returned in symmetric form.  A Neumann edge keeps its
boundary node as an unknown with the mirror ghost ``u[-1] = u[1]``; the
resulting row is symmetrized by the half-cell weight, so the matrix acts on
``w = sqrt(weights / h**d) * u`` rather than on nodal values.  Use
:meth:`SparseSymMatrix.to_nodal` to go back.

Node ordering in 2D is row-major over ``(i, j)`` with ``i`` running along x:
``k = i * ny_unknowns + j``, i.e. ``np.meshgrid(x, y, indexing="ij").ravel()``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
import scipy.io
import scipy.sparse as sp


class GridError(ValueError):
    pass


class VariantMismatchError(ValueError):
    pass


class RegionError(ValueError):
    pass


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


DIRICHLET = BoundaryCondition.DIRICHLET
NEUMANN = BoundaryCondition.NEUMANN


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[a, b]`` with ``n`` interior nodes, ``h = (b - a) / (n + 1)``."""

    a: float
    b: float
    n: int
    bc_left: BoundaryCondition = DIRICHLET
    bc_right: BoundaryCondition = DIRICHLET

    def __post_init__(self):
        if not self.a < self.b:
            raise GridError(f"need a < b, got a={self.a}, b={self.b}")
        if self.n < 3:
            raise GridError(f"need at least 3 interior nodes, got {self.n}")
        object.__setattr__(self, "bc_left", BoundaryCondition(self.bc_left))
        object.__setattr__(self, "bc_right", BoundaryCondition(self.bc_right))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def size(self) -> int:
        return self.n + (self.bc_left is NEUMANN) + (self.bc_right is NEUMANN)

    def nodes(self) -> np.ndarray:
        lo = 0 if self.bc_left is NEUMANN else 1
        hi = self.n + 1 if self.bc_right is NEUMANN else self.n
        # centre plus signed offset, so a symmetric interval gives exactly mirrored nodes
        c = 0.5 * (self.a + self.b)
        return c + (np.arange(lo, hi + 1) - 0.5 * (self.n + 1)) * self.h

    def weights(self) -> np.ndarray:
        """Trapezoid weights of the unknowns (half cells at Neumann nodes)."""
        w = np.full(self.size, self.h)
        if self.bc_left is NEUMANN:
            w[0] *= 0.5
        if self.bc_right is NEUMANN:
            w[-1] *= 0.5
        return w

    def refined(self) -> "Grid1D":
        """Same interval, spacing halved (nodes nest)."""
        return Grid1D(self.a, self.b, 2 * self.n + 1, self.bc_left, self.bc_right)

    def laplacian(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric -d^2/dt^2 as (diagonal, off-diagonal) arrays."""
        h = self.h
        w = self.weights()
        m = self.size
        degree = np.full(m, 2.0)
        if self.bc_left is NEUMANN:
            degree[0] = 1.0
        if self.bc_right is NEUMANN:
            degree[-1] = 1.0
        diag = degree / h / w
        off = -1.0 / h / np.sqrt(w[:-1] * w[1:])
        return diag, off

    @classmethod
    def with_spacing(cls, a, b, h, bc_left=DIRICHLET, bc_right=DIRICHLET) -> "Grid1D":
        n = max(int(round((b - a) / h)) - 1, 3)
        return cls(a, b, n, bc_left, bc_right)


_Edges = tuple[BoundaryCondition, BoundaryCondition, BoundaryCondition, BoundaryCondition]


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on a box; ``bc`` is one condition or (left, right, bottom, top)."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int
    ny: int
    bc: Union[BoundaryCondition, _Edges] = DIRICHLET

    def __post_init__(self):
        if isinstance(self.bc, (str, BoundaryCondition)):
            edges = (BoundaryCondition(self.bc),) * 4
        else:
            edges = tuple(BoundaryCondition(b) for b in self.bc)
            if len(edges) != 4:
                raise GridError("bc must be one condition or four (left, right, bottom, top)")
        object.__setattr__(self, "bc", edges)
        # validates ranges and counts
        self.x_grid
        self.y_grid

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D(self.x_range[0], self.x_range[1], self.nx, self.bc[0], self.bc[1])

    @property
    def y_grid(self) -> Grid1D:
        return Grid1D(self.y_range[0], self.y_range[1], self.ny, self.bc[2], self.bc[3])

    @property
    def shape(self) -> tuple[int, int]:
        return self.x_grid.size, self.y_grid.size

    @property
    def size(self) -> int:
        mx, my = self.shape
        return mx * my

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = np.meshgrid(self.x_grid.nodes(), self.y_grid.nodes(), indexing="ij")
        return X.ravel(), Y.ravel()

    def weights(self) -> np.ndarray:
        return np.outer(self.x_grid.weights(), self.y_grid.weights()).ravel()

    def refined(self) -> "Grid2D":
        return Grid2D(self.x_range, self.y_range, 2 * self.nx + 1, 2 * self.ny + 1, self.bc)


# --- potentials -----------------------------------------------------------

@dataclass(frozen=True)
class CrossValley:
    """|xy|^p - lam (x^2 + y^2)^(p/(p+2))."""

    p: float
    lam: float = 0.0
    dim = 2
    d4_symmetric = True

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    def __call__(self, x, y):
        p = self.p
        v = np.abs(x * y) ** p
        if self.lam:
            v = v - self.lam * (x * x + y * y) ** (p / (p + 2))
        return v


@dataclass(frozen=True)
class ShiftedCross:
    """|xy|^p + |x|^p + |y|^p + 1, the confining comparison potential."""

    p: float
    dim = 2
    d4_symmetric = True

    def __call__(self, x, y):
        # factored form is exactly symmetric under x <-> y
        return (np.abs(x) ** self.p + 1.0) * (np.abs(y) ** self.p + 1.0)


@dataclass(frozen=True)
class Harmonic2D:
    dim = 2
    d4_symmetric = True

    def __call__(self, x, y):
        return x * x + y * y


@dataclass(frozen=True)
class HalfLinePower:
    p: float
    dim = 1

    def __call__(self, t):
        return np.abs(t) ** self.p


@dataclass(frozen=True)
class PiecewisePower:
    """t^p on (0, break_point], outer_factor * t^p beyond."""

    p: float
    break_point: float
    outer_factor: float
    dim = 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        v = np.abs(t) ** self.p
        return np.where(t <= self.break_point, v, self.outer_factor * v)


@dataclass(frozen=True)
class Zero:
    dim = None
    d4_symmetric = True

    def __call__(self, *coords):
        return np.zeros_like(np.asarray(coords[0], dtype=float))


PotentialSpec = Union[CrossValley, ShiftedCross, Harmonic2D, HalfLinePower, PiecewisePower, Zero]


def potential_name(pot) -> str:
    return f"{type(pot).__name__}({', '.join(f'{k}={v!r}' for k, v in vars(pot).items())})"


# --- matrices -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Symmetric CSR matrix with the node coordinates and weights of its unknowns."""

    dim: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    nodes: np.ndarray | None = None
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, diag, rows, cols, vals, **kw) -> "SparseSymMatrix":
        """Build from the diagonal and one triangle; the mirror is written from the same values."""
        dim = len(diag)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        d_idx = np.flatnonzero(np.asarray(diag) != 0.0)
        r = np.concatenate([d_idx, rows, cols])
        c = np.concatenate([d_idx, cols, rows])
        v = np.concatenate([np.asarray(diag, dtype=float)[d_idx], vals, vals])
        A = sp.csr_matrix((v, (r, c)), shape=(dim, dim))
        A.sort_indices()
        return cls(dim, A.indptr.copy(), A.indices.copy(), A.data.copy(), **kw)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def __matmul__(self, v):
        return self.to_scipy() @ v

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def plus_diagonal(self, d) -> "SparseSymMatrix":
        A = (self.to_scipy() + sp.diags(np.asarray(d, dtype=float))).tocsr()
        A.eliminate_zeros()
        A.sort_indices()
        return SparseSymMatrix(self.dim, A.indptr, A.indices, A.data, self.nodes, self.weights, dict(self.meta))

    def gershgorin(self, scaled: bool = False) -> tuple[float, float]:
        """Gershgorin bounds; ``scaled`` uses the similar matrix W^-1/2 A W^1/2.

        The scaled form is much tighter next to Neumann edges, where the
        symmetrized rows carry sqrt(2) couplings.
        """
        A = abs(self.to_scipy())
        d = self.to_scipy().diagonal()
        if scaled and self.weights is not None:
            s = np.sqrt(np.asarray(self.weights, dtype=float))
            A = sp.diags(1.0 / s) @ A @ sp.diags(s)
        radius = np.asarray(A.sum(axis=1)).ravel() - np.abs(d)
        return float(np.min(d - radius)), float(np.max(d + radius))

    def asymmetry(self) -> float:
        A = self.to_scipy()
        diff = A - A.T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def to_nodal(self, vectors: np.ndarray) -> np.ndarray:
        """Map eigenvector coordinates back to nodal values (L2-normalized w.r.t. weights)."""
        if self.weights is None:
            return vectors
        s = np.sqrt(self.weights)
        return vectors / (s[:, None] if vectors.ndim == 2 else s)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a in (self.row_offsets, self.col_indices, self.values):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]

    def write_matrix_market(self, path, comment: str = "") -> None:
        scipy.io.mmwrite(str(path), self.to_scipy().tocoo(), comment=comment, symmetry="symmetric")


def _check_dim(pot, dim):
    if pot.dim is not None and pot.dim != dim:
        raise VariantMismatchError(f"{type(pot).__name__} is not a {dim}D potential")


def assemble_1d(pot, g: Grid1D) -> SparseSymMatrix:
    """-d^2/dt^2 + V(t) with the grid's edge conditions."""
    _check_dim(pot, 1)
    diag, off = g.laplacian()
    t = g.nodes()
    idx = np.arange(g.size - 1)
    return SparseSymMatrix.from_edges(
        diag + pot(t), idx, idx + 1, off,
        nodes=t, weights=g.weights(),
        meta={"grid": repr(g), "potential": potential_name(pot)},
    )


def assemble_2d(pot, g: Grid2D) -> SparseSymMatrix:
    """Five-point -Laplacian plus diagonal potential; Dirichlet edges by node exclusion."""
    _check_dim(pot, 2)
    dx, ox = g.x_grid.laplacian()
    dy, oy = g.y_grid.laplacian()
    mx, my = g.shape
    X, Y = g.nodes()
    diag = (dx[:, None] + dy[None, :]).ravel() + pot(X, Y)
    k = np.arange(mx * my).reshape(mx, my)
    rows = np.concatenate([k[:-1, :].ravel(), k[:, :-1].ravel()])
    cols = np.concatenate([k[1:, :].ravel(), k[:, 1:].ravel()])
    vals = np.concatenate([np.repeat(ox, my), np.tile(oy, mx)])
    return SparseSymMatrix.from_edges(
        diag, rows, cols, vals,
        nodes=np.column_stack([X, Y]), weights=g.weights(),
        meta={"grid": repr(g), "potential": potential_name(pot)},
    )


@dataclass(frozen=True)
class HornLattice:
    """Lattice ``x_i = i * h`` for ``|i| < m`` with the matrix index of each node (-1 if excluded)."""

    h: float
    m: int
    index: np.ndarray

    @property
    def coords(self) -> np.ndarray:
        return np.arange(-self.m + 1, self.m) * self.h

    def scatter(self, v: np.ndarray) -> np.ndarray:
        """Place a vector over the kept nodes onto the full lattice, zeros elsewhere."""
        out = np.zeros(self.index.shape)
        mask = self.index >= 0
        out[mask] = v[self.index[mask]]
        return out

    def gather(self, u: np.ndarray) -> np.ndarray:
        return u[self.index >= 0]


def horn_lattice(R: float, h: float) -> HornLattice:
    if R < 2:
        raise RegionError(f"truncation R must be >= 2, got {R}")
    if not 0 < h <= 0.1:
        raise GridError(f"spacing must be in (0, 0.1], got {h}")
    m = int(round(R / h))
    h = R / m
    x = np.arange(-m + 1, m) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    # nodes on |xy| = 1 are boundary nodes
    keep = np.abs(X * Y) < 1.0 - 1e-12
    index = np.full(keep.shape, -1, dtype=np.int64)
    index[keep] = np.arange(int(keep.sum()))
    if not keep.any():
        raise RegionError("no lattice nodes inside the region")
    return HornLattice(h, m, index)


def assemble_horn(R: float, h: float) -> tuple[SparseSymMatrix, HornLattice]:
    """Dirichlet Laplacian on {|xy| < 1} cut to the box max(|x|,|y|) < R."""
    lat = horn_lattice(R, h)
    h = lat.h
    idx = lat.index
    rows, cols = [], []
    for a, b in ((idx[:-1, :], idx[1:, :]), (idx[:, :-1], idx[:, 1:])):
        both = (a >= 0) & (b >= 0)
        rows.append(a[both])
        cols.append(b[both])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = int(idx.max()) + 1
    x = lat.coords
    X, Y = np.meshgrid(x, x, indexing="ij")
    keep = idx >= 0
    A = SparseSymMatrix.from_edges(
        np.full(n, 4.0 / h**2), rows, cols, np.full(rows.size, -1.0 / h**2),
        nodes=np.column_stack([X[keep], Y[keep]]), weights=np.full(n, h * h),
        meta={"grid": f"horn(R={R}, h={h})", "potential": "Zero"},
    )
    return A, lat
