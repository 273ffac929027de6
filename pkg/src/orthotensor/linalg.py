"""SVD with fixed conventions, numerical rank, pseudo-inverse and whitening.

The SVD is one-sided (Hestenes) Jacobi on the shorter side of the matrix,
run by the compiled kernel when available. Outputs are deterministic: cyclic
pair order, stable descending sort, and a fixed sign rule on ``U``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

DEFAULT_TOL = 1e-10
JACOBI_EPS = 1e-15
MAX_SWEEPS = 80


class NumericError(ValueError):
    """Raised on non-finite input."""


class NotSymmetricError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A ~ U diag(s) V^T`` truncated at the numerical rank.

    ``spectrum`` keeps every computed singular value (untruncated, descending)
    for diagnostics.
    """

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    rank: int
    tol: float
    spectrum: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def _as_finite_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    return A


def _jacobi_full(A: np.ndarray):
    """Untruncated SVD of ``A`` (m x n): returns U (m x p), s (p,), V (n x p), p = min(m, n)."""
    m, n = A.shape
    transpose = m < n
    # rows of X are the vectors to orthogonalize: the columns of the taller orientation
    X = np.ascontiguousarray(A if transpose else A.T, dtype=np.float64).copy()
    p = X.shape[0]
    Vt = np.eye(p)
    _kernels.jacobi_sweeps(X, Vt, JACOBI_EPS, MAX_SWEEPS)
    s = np.sqrt(np.einsum("ij,ij->i", X, X))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    X = X[order]
    Vt = Vt[order]
    Ucols = np.zeros_like(X)
    nz = s > 0
    Ucols[nz] = X[nz] / s[nz, None]
    # Ucols rows: left vectors of the oriented matrix; Vt rows: right vectors
    if transpose:
        return Vt.T, s, Ucols.T
    return Ucols.T, s, Vt.T


def svd(A, tol: float = DEFAULT_TOL) -> SvdResult:
    """Thin SVD keeping singular values ``> tol * s_max``.

    In each column of ``U`` the entry of largest magnitude (first one on ties)
    is made nonnegative; the matching column of ``V`` is flipped with it.

    Examples
    --------
    >>> res = svd(np.diag([3.0, 2.0]))
    >>> res.rank, list(res.singular_values)
    (2, [3.0, 2.0])
    """
    A = _as_finite_matrix(A)
    m, n = A.shape
    if A.size == 0:
        raise ValueError("empty matrix")
    U, s, V = _jacobi_full(A)
    smax = s[0] if s.size else 0.0
    r = int(np.count_nonzero(s > tol * smax)) if smax > 0 else 0
    U = U[:, :r].copy()
    V = V[:, :r].copy()
    for i in range(r):
        if U[np.argmax(np.abs(U[:, i])), i] < 0:
            U[:, i] *= -1
            V[:, i] *= -1
    return SvdResult(U=U, singular_values=s[:r].copy(), V=V, rank=r, tol=tol, spectrum=s)


def numerical_rank(A, tol: float = DEFAULT_TOL) -> int:
    return svd(A, tol).rank


def pseudo_inverse(A, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse through the truncated SVD."""
    res = svd(A, tol)
    A = np.asarray(A)
    if res.rank == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    return (res.V / res.singular_values) @ res.U.T


def whiten(M, tol: float = DEFAULT_TOL, sym_tol: float = 1e-8):
    """Whitening of a symmetric PSD matrix.

    Returns ``(W, U, S)`` with ``M ~ U S U^T`` and ``W = U S^{-1/2}``, so that
    ``W.T @ M @ W`` is the identity on the numerical range of ``M``.

    Raises
    ------
    NotSymmetricError
        If ``M`` deviates from symmetry by more than ``sym_tol`` relative.
    NotPSDError
        If ``M`` has an eigenvalue below ``-tol * s_max``.
    """
    M = _as_finite_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NotSymmetricError(f"whitening needs a square matrix, got {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T)) > sym_tol * max(scale, np.finfo(float).tiny):
        raise NotSymmetricError("matrix is not symmetric")
    M = 0.5 * (M + M.T)
    res = svd(M, tol)
    if res.rank == 0:
        raise NotPSDError("matrix has numerical rank 0")
    U, s = res.U, res.singular_values
    # PSD iff every kept left singular vector is an eigenvector for +s_i;
    # a negative eigenvalue -s_i gives residual 2 s_i, a mixed tie something in between
    resid = np.linalg.norm(M @ U - U * s, axis=0)
    bad = resid > max(tol, 1e-12) * s[0]
    if np.any(bad):
        raise NotPSDError(
            f"matrix has a negative eigenvalue of magnitude ~{s[np.argmax(bad)]:.3g} "
            f"(threshold {tol * s[0]:.3g})"
        )
    W = U / np.sqrt(s)
    return W, U, np.diag(s)
