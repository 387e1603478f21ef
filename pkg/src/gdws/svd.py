"""Deterministic per-channel SVD, truncation, and tail-error evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SubMatrixSVD:
    """SVD of one M x K^2 channel block, cut at the numerical rank.

    U: (M, r) orthonormal columns. sigma: (r,) descending positive.
    V: (K^2, r) orthonormal columns. Reconstruction is U @ diag(sigma) @ V.T.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    r: int


def rank_threshold(shape: tuple[int, int], sigma_max: float) -> float:
    # float32-scale cutoff: singular values at or below this are noise
    return max(shape) * sigma_max * 2.0 ** -40


def svd_submatrix(w_c: np.ndarray) -> SubMatrixSVD:
    """Thin SVD with a numerical-rank cut and a fixed sign convention.

    Signs: each right singular vector's largest-magnitude entry is made
    non-negative (u flipped jointly), ties broken by lowest index. Makes the
    factorization reproducible across runs and platforms up to the SVD's
    own numerical noise.
    """
    w_c = np.asarray(w_c, dtype=np.float64)
    if w_c.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {w_c.shape}")
    if not np.isfinite(w_c).all():
        raise ValueError("non-finite entries in sub-matrix")

    u, s, vt = np.linalg.svd(w_c, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return SubMatrixSVD(np.zeros((w_c.shape[0], 0)), np.zeros(0),
                            np.zeros((w_c.shape[1], 0)), 0)
    r = int(np.sum(s > rank_threshold(w_c.shape, float(s[0]))))
    u, s, v = u[:, :r].copy(), s[:r].copy(), vt[:r].T.copy()
    for i in range(r):
        col = v[:, i]
        # argmax returns the first maximizer, which is the tie rule we want
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            v[:, i] = -col
            u[:, i] = -u[:, i]
    return SubMatrixSVD(u, s, v, r)


def truncate(svd: SubMatrixSVD, p: int) -> np.ndarray:
    """Best rank-p reconstruction; p=0 gives the zero matrix."""
    if p < 0:
        raise ValueError("p must be non-negative")
    p = min(p, svd.r)
    if p == 0:
        return np.zeros((svd.U.shape[0], svd.V.shape[0]))
    return (svd.U[:, :p] * svd.sigma[:p]) @ svd.V[:, :p].T


def tail_error_sq(svd: SubMatrixSVD, p: int) -> float:
    """Squared Frobenius error of the rank-p truncation: sum of sigma_i^2, i>p."""
    if p < 0:
        raise ValueError("p must be non-negative")
    if p >= svd.r:
        return 0.0
    return float(np.sum(svd.sigma[p:] ** 2))
