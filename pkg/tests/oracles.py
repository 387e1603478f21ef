"""Independent oracles the tests compare against.

Everything here is written the dumb way on purpose: nested loops, direct
index arithmetic, exhaustive enumeration. Nothing imports the package's
own numerics beyond plain data types, so agreement is evidence, not
circularity.
"""

from __future__ import annotations

from itertools import product

import numpy as np


def im2col_loops(x: np.ndarray, k: int, stride: int, padding: int) -> np.ndarray:
    """Window extraction by direct indexing, one element at a time."""
    c, h, w = x.shape
    xp = np.zeros((c, h + 2 * padding, w + 2 * padding))
    xp[:, padding:padding + h, padding:padding + w] = x
    oh = (h + 2 * padding - k) // stride + 1
    ow = (w + 2 * padding - k) // stride + 1
    out = np.zeros((c * k * k, oh * ow))
    for ci in range(c):
        for ki in range(k):
            for kj in range(k):
                row = ci * k * k + ki * k + kj
                for oi in range(oh):
                    for oj in range(ow):
                        out[row, oi * ow + oj] = xp[ci, oi * stride + ki,
                                                    oj * stride + kj]
    return out


def conv2d_loops(filters: np.ndarray, x: np.ndarray, stride: int,
                 padding: int, bias=None) -> np.ndarray:
    """Six nested loops over (m, oi, oj, c, ki, kj)."""
    m, c, k, _ = filters.shape
    _, h, w = x.shape
    xp = np.zeros((c, h + 2 * padding, w + 2 * padding))
    xp[:, padding:padding + h, padding:padding + w] = x
    oh = (h + 2 * padding - k) // stride + 1
    ow = (w + 2 * padding - k) // stride + 1
    out = np.zeros((m, oh, ow))
    for mi in range(m):
        for oi in range(oh):
            for oj in range(ow):
                acc = 0.0
                for ci in range(c):
                    for ki in range(k):
                        for kj in range(k):
                            acc += filters[mi, ci, ki, kj] * \
                                xp[ci, oi * stride + ki, oj * stride + kj]
                out[mi, oi, oj] = acc + (0.0 if bias is None else bias[mi])
    return out


def matmul_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def gram_singular_values(w: np.ndarray) -> np.ndarray:
    """Singular values via the eigendecomposition of W^T W, descending."""
    evals = np.linalg.eigvalsh(w.T @ w)
    evals = np.clip(evals, 0.0, None)
    return np.sqrt(evals)[::-1]


def full_sigma_per_channel(w: np.ndarray, c: int) -> list[np.ndarray]:
    """All singular values (no rank cut) of each channel block."""
    kk = w.shape[1] // c
    return [np.linalg.svd(w[:, i * kk:(i + 1) * kk], compute_uv=False)
            for i in range(c)]


def tail_from_sigma(sigma: np.ndarray, g: int) -> float:
    return float(np.sum(sigma[g:] ** 2))


def enumerate_g(ranks) -> list[tuple[int, ...]]:
    return list(product(*[range(int(r) + 1) for r in ranks]))


def brute_min_error(sigmas: list[np.ndarray], alpha: np.ndarray,
                    gamma: int, ranks) -> float:
    """Minimum weighted squared error over every g with sum(g) <= gamma."""
    best = np.inf
    for g in enumerate_g(ranks):
        if sum(g) > gamma:
            continue
        err = sum(alpha[c] * tail_from_sigma(sigmas[c], g[c])
                  for c in range(len(g)))
        best = min(best, err)
    return float(best)


def brute_min_filters(sigmas: list[np.ndarray], alpha: np.ndarray,
                      beta: float, ranks) -> int:
    """Minimum sum(g) over every g whose weighted squared error is <= beta."""
    best = None
    for g in enumerate_g(ranks):
        err = sum(alpha[c] * tail_from_sigma(sigmas[c], g[c])
                  for c in range(len(g)))
        if err <= beta:
            total = sum(g)
            best = total if best is None else min(best, total)
    assert best is not None, "beta below zero error is impossible here"
    return best


def numerical_ranks(w: np.ndarray, c: int) -> list[int]:
    """Rank per channel block with the same cutoff rule the package states."""
    kk = w.shape[1] // c
    ranks = []
    for i in range(c):
        block = w[:, i * kk:(i + 1) * kk]
        s = np.linalg.svd(block, compute_uv=False)
        if s.size == 0 or s[0] == 0.0:
            ranks.append(0)
            continue
        eps = max(block.shape) * s[0] * 2.0 ** -40
        ranks.append(int(np.sum(s > eps)))
    return ranks


def linear_net_alpha(conv_w: np.ndarray, dense_w: np.ndarray, c: int,
                     samples_cols_mean: list[np.ndarray],
                     samples_logits: list[np.ndarray]) -> np.ndarray:
    """Closed-form sensitivity weights for conv -> global mean -> dense.

    With logits z = A @ mean_p(W @ cols) the margin derivative w.r.t.
    W[m, t] is (A[j,m] - A[n,m]) * colmean[t], so the squared Frobenius
    norm over channel block c separates into a class factor times a column
    factor. Exact, no differencing.
    """
    m_out, patch = conv_w.shape
    kk = patch // c
    vals = np.zeros((len(samples_logits), c))
    for s, (colmean, z) in enumerate(zip(samples_cols_mean, samples_logits)):
        n_x = int(np.argmax(z))
        delta = np.delete(z - z[n_x], n_x)
        a_diff = np.delete(dense_w - dense_w[n_x], n_x, axis=0)
        class_fac = np.sum(a_diff ** 2, axis=1)
        for ch in range(c):
            col_fac = float(np.sum(colmean[ch * kk:(ch + 1) * kk] ** 2))
            vals[s, ch] = float(np.sum(class_fac * col_fac /
                                       (2.0 * delta ** 2)))
    return vals.mean(axis=0) / (m_out * kk)
