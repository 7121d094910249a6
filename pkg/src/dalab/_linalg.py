"""Dense linear-algebra helpers with explicit, configurable thresholds."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

# Singular values below RANK_RTOL * (largest singular value) count as zero.
RANK_RTOL = 1e-10
# Principal cosines within INTERSECTION_TOL of 1 are intersection directions.
INTERSECTION_TOL = 1e-8


def readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def orth(x: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis for the column span of ``x`` (rank-revealing SVD)."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    if x.shape[1] == 0 or x.shape[0] == 0:
        return np.zeros((x.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((x.shape[0], 0), dtype=complex)
    r = int(np.count_nonzero(s > rtol * s[0]))
    return u[:, :r]


def orth_with_coefficients(x: np.ndarray, rtol: float = RANK_RTOL):
    """Return ``(q, coef)`` with ``q = x @ coef`` orthonormal spanning range(x)."""
    x = np.asarray(x, dtype=complex)
    if x.shape[1] == 0 or x.shape[0] == 0:
        return np.zeros((x.shape[0], 0), dtype=complex), np.zeros((x.shape[1], 0), dtype=complex)
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((x.shape[0], 0), dtype=complex), np.zeros((x.shape[1], 0), dtype=complex)
    r = int(np.count_nonzero(s > rtol * s[0]))
    coef = vh[:r].conj().T / s[:r]
    return u[:, :r], coef


def complement(q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of range(q) (q orthonormal)."""
    q = np.asarray(q, dtype=complex)
    n, r = q.shape
    if r == 0:
        return np.eye(n, dtype=complex)
    u, _, _ = np.linalg.svd(q, full_matrices=True)
    return u[:, r:]


def principal_decomposition(m: np.ndarray, n: np.ndarray):
    """Principal vectors of two orthonormal bases.

    Returns ``(mu, nv, cosines)`` where ``mu = m @ U`` and ``nv = n @ V`` carry
    full square rotations, and ``cosines`` holds the principal cosines padded
    with zeros to ``max(dim m, dim n)`` entries.
    """
    u, s, vh = np.linalg.svd(m.conj().T @ n, full_matrices=True)
    return m @ u, n @ vh.conj().T, np.clip(s, 0.0, 1.0)


def intersect(m: np.ndarray, n: np.ndarray, tol: float = INTERSECTION_TOL) -> np.ndarray:
    if m.shape[1] == 0 or n.shape[1] == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    mu, _, s = principal_decomposition(m, n)
    k = int(np.count_nonzero(s > 1.0 - tol))
    return mu[:, :k]


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Operator norm of ``P_a - P_b`` for orthonormal bases ``a`` and ``b``."""
    if a.shape[1] != b.shape[1]:
        return 1.0
    if a.shape[1] == 0:
        return 0.0
    ra = a - b @ (b.conj().T @ a)
    rb = b - a @ (a.conj().T @ b)
    return float(max(np.linalg.norm(ra, 2), np.linalg.norm(rb, 2)))


def spectral_norm(x) -> float:
    """Operator 2-norm; exact and cheap for weighted partial permutations."""
    if sp.issparse(x):
        x = sp.csr_matrix(x)
        x.eliminate_zeros()
        rows = np.diff(x.indptr)
        cols = np.bincount(x.indices, minlength=x.shape[1])
        if (rows <= 1).all() and (cols <= 1).all():
            return float(np.abs(x.data).max()) if x.nnz else 0.0
        x = x.toarray()
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, 2))


def sigma_min(x: np.ndarray) -> float:
    """Smallest singular value over the domain (zero if the map has a kernel)."""
    x = np.asarray(x)
    if x.shape[1] == 0:
        return float("inf")
    if x.shape[0] < x.shape[1]:
        return 0.0
    return float(np.linalg.svd(x, compute_uv=False)[-1])
