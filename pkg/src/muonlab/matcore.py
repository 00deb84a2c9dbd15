"""Dense matrix helpers: Frobenius geometry, a truncated SVD and the nuclear norm.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64 (row-major).
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError, DimensionError, NumericError

DEFAULT_RANK_TOL = 1e-12


def as_matrix(a, *, name="matrix", tall=False):
    """Return ``a`` as a finite float64 2-D array.

    With ``tall=True`` the matrix must also satisfy rows >= cols.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if tall and arr.shape[0] < arr.shape[1]:
        raise DimensionError(f"{name} must have rows >= cols, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def frobenius_inner(a, b) -> float:
    """tr(a^T b)."""
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    _check_same_shape(a, b)
    return float(np.sum(a * b))


def frobenius_norm(a) -> float:
    """sqrt(<a, a>), computed on ``a / max|a|`` so tiny or huge entries don't under/overflow."""
    a = as_matrix(a)
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    return scale * float(np.linalg.norm(a / scale))


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD truncated to the numerical rank ``r``: ``a ~= u @ diag(s) @ v.T``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.s.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def svd(a, rank_tol=DEFAULT_RANK_TOL) -> SvdFactors:
    """Thin SVD of ``a`` keeping singular values above ``rank_tol * s_max``.

    Raises DegenerateInputError for the all-zero matrix, whose rank is zero.
    """
    a = as_matrix(a)
    if not np.any(a):
        raise DegenerateInputError("svd of the zero matrix has rank 0")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    keep = s > rank_tol * s[0]
    r = int(np.count_nonzero(keep))
    return SvdFactors(u=u[:, :r], s=s[:r], v=vt[:r].T)


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    return np.linalg.svd(a, compute_uv=False)


def nuclear_norm(a) -> float:
    """Sum of singular values (the dual of the spectral norm)."""
    a = as_matrix(a)
    if not np.any(a):
        return 0.0
    return float(np.sum(singular_values(a)))


def spectral_norm(a) -> float:
    a = as_matrix(a)
    if not np.any(a):
        return 0.0
    return float(singular_values(a)[0])
