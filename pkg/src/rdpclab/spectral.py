"""Robust symmetric-matrix algebra for rank-deficient covariances.

Decoded signals live in a low-dimensional subspace, so their covariance
matrices are singular. Every inverse, determinant, and square root in this
package goes through the generalized (spectral) versions defined here: an
eigenvalue is treated as positive iff it exceeds a relative threshold of the
largest one, which keeps float noise out of rank decisions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

# Relative eigenvalue cutoff: lambda_i counts as positive iff
# lambda_i > RANK_TOL * max(lambda_max, 1).
RANK_TOL = 1e-10


class SpectralError(ValueError):
    """Raised when an input violates the preconditions of this module."""


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigendecomposition a = q @ diag(lam) @ q.T with eigenvalues descending."""

    q: NDArray[np.float64]
    lam: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    def reconstruct(self) -> NDArray[np.float64]:
        return (self.q * self.lam) @ self.q.T


def _positive_mask(lam: NDArray, tol: float) -> NDArray:
    cutoff = tol * max(float(lam.max(initial=0.0)), 1.0)
    return lam > cutoff


def eig_sym(a: NDArray, *, sym_tol: float = 1e-10) -> SpectralDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Raises SpectralError on non-finite or non-symmetric input.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpectralError("matrix has non-finite entries")
    scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
    if np.abs(a - a.T).max(initial=0.0) > sym_tol * scale:
        raise SpectralError("matrix is not symmetric within tolerance")
    lam, q = np.linalg.eigh((a + a.T) / 2.0)
    order = np.argsort(lam)[::-1]
    return SpectralDecomp(q=np.ascontiguousarray(q[:, order]), lam=lam[order])


def gen_inverse(d: SpectralDecomp, tol: float = RANK_TOL) -> NDArray[np.float64]:
    """Moore-Penrose inverse via the spectrum: 1/lambda_i above the cutoff, 0 below."""
    mask = _positive_mask(d.lam, tol)
    inv = np.where(mask, 1.0 / np.where(mask, d.lam, 1.0), 0.0)
    return (d.q * inv) @ d.q.T


def gen_det(d: SpectralDecomp, tol: float = RANK_TOL) -> float:
    """Product of the eigenvalues above the cutoff; 1 for the zero matrix."""
    mask = _positive_mask(d.lam, tol)
    return float(np.prod(d.lam[mask])) if mask.any() else 1.0


def rank(d: SpectralDecomp, tol: float = RANK_TOL) -> int:
    return int(_positive_mask(d.lam, tol).sum())


def sqrt_psd(a: NDArray, *, neg_tol: float = 1e-10) -> NDArray[np.float64]:
    """Symmetric PSD square root; clamps tiny negative eigenvalues to zero.

    Raises SpectralError if an eigenvalue is below -neg_tol * lambda_max
    (the matrix is genuinely not PSD).
    """
    d = eig_sym(a)
    floor = -neg_tol * max(float(d.lam.max(initial=0.0)), 1.0)
    if d.lam.min(initial=0.0) < floor:
        raise SpectralError(
            f"matrix is not PSD: min eigenvalue {d.lam.min():.3e} below {floor:.3e}"
        )
    lam = np.clip(d.lam, 0.0, None)
    return (d.q * np.sqrt(lam)) @ d.q.T


def gen_inv_sqrt(d: SpectralDecomp, tol: float = RANK_TOL) -> NDArray[np.float64]:
    """Generalized inverse square root: lambda_i^{-1/2} above the cutoff, 0 below."""
    mask = _positive_mask(d.lam, tol)
    inv = np.where(mask, 1.0 / np.sqrt(np.where(mask, d.lam, 1.0)), 0.0)
    return (d.q * inv) @ d.q.T


def gram_schmidt(m: NDArray, *, pivot_tol: float = 1e-10) -> NDArray[np.float64]:
    """Orthonormalize the columns of a square matrix (classical QR direction).

    The first output column is the first input column scaled to unit length.
    Raises SpectralError if a pivot collapses (rank-deficient input); callers
    that built the matrix from random draws should redraw and retry.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    q = np.zeros((n, n))
    for j in range(n):
        v = m[:, j].copy()
        # two rounds of projection for numerical orthogonality
        for _ in range(2):
            v -= q[:, :j] @ (q[:, :j].T @ v)
        norm = np.linalg.norm(v)
        if norm <= pivot_tol:
            raise SpectralError(
                f"column {j} is linearly dependent on the previous ones; "
                "redraw the random columns and retry"
            )
        q[:, j] = v / norm
    return q
