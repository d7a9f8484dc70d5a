"""Dense symmetric eigenvalues: Householder tridiagonalization + implicit QL.

Independent of LAPACK; used as the oracle for the Lanczos solver.
"""
import numpy as np
from numba import njit

MAX_DENSE_DIM = 2000


class SizeError(ValueError):
    pass


def tridiagonalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce symmetric ``A`` to tridiagonal form; returns (diagonal, subdiagonal)."""
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        S = A[k + 1:, k + 1:]
        p = beta * (S @ v)
        w = p - (0.5 * beta * (p @ v)) * v
        S -= np.outer(v, w)
        S -= np.outer(w, v)
        A[k + 1, k] = A[k, k + 1] = alpha
        A[k + 2:, k] = 0.0
        A[k, k + 2:] = 0.0
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy()
    return d, e


@njit(cache=True)
def _tql(d, e):
    # implicit QL with Wilkinson shift on a symmetric tridiagonal matrix
    n = d.size
    d = d.copy()
    f = np.zeros(n)
    f[: n - 1] = e
    eps = np.finfo(np.float64).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(f[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise RuntimeError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * f[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + f[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                ff = s * f[i]
                b = c * f[i]
                r = np.hypot(ff, g)
                f[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    f[m] = 0.0
                    underflow = True
                    break
                s = ff / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            f[l] = g
            f[m] = 0.0
    return np.sort(d)


def tridiagonal_eigenvalues(d, e) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.size == 1:
        return d.copy()
    return _tql(d, np.asarray(e, dtype=float))


def dense_oracle(A) -> np.ndarray:
    """Full ascending spectrum of a symmetric matrix with dim <= 2000."""
    if hasattr(A, "to_dense"):
        A = A.to_dense()
    elif hasattr(A, "toarray"):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n > MAX_DENSE_DIM:
        raise SizeError(f"dense oracle limited to dim <= {MAX_DENSE_DIM}, got {n}")
    if n == 1:
        return A[0].copy()
    d, e = tridiagonalize(A)
    return tridiagonal_eigenvalues(d, e)
