"""Spectral toolkit for Schrodinger operators with hyperbolic potential valleys.

Set VALLEYSPEC_THREADS before the first import to cap the BLAS/OpenMP pools.
"""
import os

_threads = os.environ.get("VALLEYSPEC_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import DataError, HypothesisError, SpectrumError  # noqa: E402

__all__ = ["__version__", "DataError", "HypothesisError", "SpectrumError"]
