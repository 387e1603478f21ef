"""Generalized depthwise-separable structure and its two greedy optimizers.

A (C, K, M) convolution with weight matrix W factors as W = W_P @ W_D where
W_D is block-diagonal over input channels (g_c rows of K^2 entries each, unit
norm) and W_P mixes the G = sum(g_c) intermediate channels into M outputs.
mego() minimizes weighted error under a filter budget; lego() minimizes the
filter count under a squared-error budget. Both are provably optimal greedy
loops over per-channel singular values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .svd import SubMatrixSVD, svd_submatrix, tail_error_sq, truncate
from .types import ConvLayerSpec, ShapeError, WeightMatrix


class StructureError(ValueError):
    """Depthwise factor has mass outside its permitted channel block."""


class RankError(ValueError):
    """A channel block's rank exceeds its allotted filter count."""


@dataclass
class GDWSDecomposition:
    """One rewritten layer: channel distribution g plus the factor pair."""

    spec: ConvLayerSpec
    g: np.ndarray
    W_P: np.ndarray
    W_D: np.ndarray
    achieved_error_sq: float
    _approx: np.ndarray | None = field(default=None, repr=False)

    @property
    def G(self) -> int:
        return int(self.g.sum())

    def approx_matrix(self) -> WeightMatrix:
        """Materialized W_P @ W_D (cached; large layers pay only on demand)."""
        if self._approx is None:
            self._approx = self.W_P @ self.W_D
        return WeightMatrix(self.spec, self._approx)

    def block_offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.g)))


def _check_alpha(alpha, c: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (c,):
        raise ShapeError(f"alpha length {alpha.shape} != C={c}")
    if not np.isfinite(alpha).all() or (alpha < 0).any():
        raise ValueError("alpha entries must be finite and non-negative")
    return alpha


def weighted_error_sq(w: WeightMatrix, q: WeightMatrix, alpha) -> float:
    """sum_c alpha_c * ||W_c - Q_c||_F^2 over channel blocks."""
    if w.spec.in_channels != q.spec.in_channels or w.data.shape != q.data.shape:
        raise ShapeError("weight matrices have different shapes")
    alpha = _check_alpha(alpha, w.spec.in_channels)
    total = 0.0
    for c in range(w.spec.in_channels):
        d = w.channel_block(c) - q.channel_block(c)
        total += float(alpha[c]) * float(np.sum(d * d))
    return total


def _assemble(spec: ConvLayerSpec, g: np.ndarray,
              p_blocks: list[np.ndarray], d_blocks: list[np.ndarray],
              err_sq: float) -> GDWSDecomposition:
    c, kk = spec.in_channels, spec.kernel ** 2
    big_g = int(g.sum())
    w_p = np.zeros((spec.out_channels, big_g))
    w_d = np.zeros((big_g, c * kk))
    h = 0
    for ch in range(c):
        n = int(g[ch])
        if n:
            w_p[:, h:h + n] = p_blocks[ch]
            w_d[h:h + n, ch * kk:(ch + 1) * kk] = d_blocks[ch]
            h += n
    return GDWSDecomposition(spec, g, w_p, w_d, err_sq)


def decompose(w_hat: WeightMatrix, g, svds: list[SubMatrixSVD]) -> tuple[np.ndarray, np.ndarray]:
    """Split a rank-limited matrix into the (W_P, W_D) factor pair.

    Column h_c + i of W_P is sigma_i * u_i of channel c; row h_c + i of W_D
    is v_i placed in channel c's column block. Raises RankError when the
    supplied triples cannot reproduce w_hat within 1e-9 relative Frobenius,
    which is exactly the case rank(w_hat_c) > g_c.
    """
    spec = w_hat.spec
    g = np.asarray(g, dtype=np.int64)
    if g.shape != (spec.in_channels,) or (g < 0).any():
        raise ShapeError("bad channel distribution")
    if len(svds) != spec.in_channels:
        raise ShapeError("need one SVD per channel")
    p_blocks, d_blocks = [], []
    for c in range(spec.in_channels):
        n, sv = int(g[c]), svds[c]
        keep = min(n, sv.r)
        p = np.zeros((spec.out_channels, n))
        d = np.zeros((n, spec.kernel ** 2))
        p[:, :keep] = sv.U[:, :keep] * sv.sigma[:keep]
        d[:keep, :] = sv.V[:, :keep].T
        p_blocks.append(p)
        d_blocks.append(d)
    dec = _assemble(spec, g, p_blocks, d_blocks, 0.0)
    resid = np.linalg.norm(dec.approx_matrix().data - w_hat.data)
    scale = max(np.linalg.norm(w_hat.data), 1e-300)
    if resid / scale > 1e-9:
        raise RankError("channel rank exceeds its filter count g_c")
    return dec.W_P, dec.W_D


def infer_g(w_d: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    """Recover the channel distribution from the depthwise factor's pattern."""
    kk = spec.kernel ** 2
    g = np.zeros(spec.in_channels, dtype=np.int64)
    current = 0
    for row in w_d:
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            g[current] += 1
            continue
        chans = np.unique(nz // kk)
        if chans.size > 1:
            raise StructureError("depthwise row spans multiple channel blocks")
        ch = int(chans[0])
        if ch < current:
            raise StructureError("depthwise rows out of channel order")
        current = ch
        g[ch] += 1
    return g


def compose(w_p: np.ndarray, w_d: np.ndarray, spec: ConvLayerSpec,
            g=None) -> WeightMatrix:
    """Multiply the factor pair back into a weight matrix.

    Validates the block structure first: any mass outside a row's channel
    block is a hard StructureError, never silently zeroed.
    """
    w_p = np.asarray(w_p, dtype=np.float64)
    w_d = np.asarray(w_d, dtype=np.float64)
    if w_p.ndim != 2 or w_d.ndim != 2 or w_p.shape[1] != w_d.shape[0]:
        raise ShapeError(f"factor shapes {w_p.shape} x {w_d.shape} do not chain")
    if w_p.shape[0] != spec.out_channels or w_d.shape[1] != spec.patch_len:
        raise ShapeError("factor dims disagree with the layer spec")
    kk = spec.kernel ** 2
    if g is None:
        g = infer_g(w_d, spec)
    else:
        g = np.asarray(g, dtype=np.int64)
        if g.shape != (spec.in_channels,) or int(g.sum()) != w_d.shape[0]:
            raise ShapeError("g disagrees with factor row count")
        h = 0
        for c in range(spec.in_channels):
            n = int(g[c])
            block = w_d[h:h + n]
            outside = block.copy()
            outside[:, c * kk:(c + 1) * kk] = 0.0
            if np.any(outside != 0.0):
                raise StructureError(f"row block {c} has mass outside its channel")
            h += n
    return WeightMatrix(spec, w_p @ w_d)


def validate(dec: GDWSDecomposition, atol: float = 1e-9) -> None:
    """Assert the canonical-form invariants; raises on violation."""
    spec, kk = dec.spec, dec.spec.kernel ** 2
    if dec.g.shape != (spec.in_channels,) or (dec.g < 0).any():
        raise ShapeError("bad channel distribution")
    if (dec.g > kk).any():
        raise RankError("g_c exceeds K^2")
    off = dec.block_offsets()
    for c in range(spec.in_channels):
        rows = dec.W_D[off[c]:off[c + 1]]
        outside = rows.copy()
        outside[:, c * kk:(c + 1) * kk] = 0.0
        if np.any(outside != 0.0):
            raise StructureError(f"channel {c}: mass outside block")
        seg = rows[:, c * kk:(c + 1) * kk]
        norms = np.linalg.norm(seg, axis=1)
        live = norms > 0
        if live.any() and np.max(np.abs(norms[live] - 1.0)) > atol:
            raise StructureError(f"channel {c}: non-unit depthwise rows")


def mego(w: WeightMatrix, alpha, gamma: int) -> GDWSDecomposition:
    """Minimum weighted error subject to sum(g) <= gamma.

    Greedy: repeatedly grant one more filter to the channel whose next
    singular value removes the most weighted energy, alpha_c * sigma_{g_c+1}^2.
    Ties go to the lowest channel index. Channels with alpha_c = 0 contribute
    no error and are pinned at g_c = 0.
    """
    spec = w.spec
    alpha = _check_alpha(alpha, spec.in_channels)
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    svds = [svd_submatrix(b) for b in w.blocks()]
    g = np.zeros(spec.in_channels, dtype=np.int64)
    cap = np.array([sv.r if alpha[c] > 0 else 0
                    for c, sv in enumerate(svds)], dtype=np.int64)
    for _ in range(gamma):
        open_c = np.nonzero(g < cap)[0]
        if open_c.size == 0:
            break
        gains = np.array([alpha[c] * svds[c].sigma[g[c]] ** 2 for c in open_c])
        g[open_c[int(np.argmax(gains))]] += 1
    return _from_svds(w, svds, g, alpha)


def lego(w: WeightMatrix, alpha, beta: float) -> GDWSDecomposition:
    """Minimum filter count subject to weighted SQUARED error <= beta.

    Greedy: start every channel at its numerical rank, then drop retained
    singular values in ascending order of alpha_c * sigma_i^2 while the
    accumulated dropped energy stays within beta (inclusive). Ties break to
    the lowest channel index, then the largest singular index. Channels may
    be dropped to zero filters.
    """
    spec = w.spec
    alpha = _check_alpha(alpha, spec.in_channels)
    if beta < 0:
        raise ValueError("beta must be non-negative")
    svds = [svd_submatrix(b) for b in w.blocks()]
    g = np.array([sv.r if alpha[c] > 0 else 0
                  for c, sv in enumerate(svds)], dtype=np.int64)
    terms = []
    for c, sv in enumerate(svds):
        if alpha[c] == 0:
            continue
        for i in range(sv.r):
            terms.append((float(alpha[c] * sv.sigma[i] ** 2), c, -i))
    terms.sort()
    dropped = 0.0
    for val, c, neg_i in terms:
        if dropped + val > beta:
            break
        # drops within a channel proceed from the smallest sigma upward,
        # which the sort already guarantees
        dropped += val
        g[c] -= 1
    return _from_svds(w, svds, g, alpha)


def _from_svds(w: WeightMatrix, svds: list[SubMatrixSVD], g: np.ndarray,
               alpha: np.ndarray) -> GDWSDecomposition:
    spec = w.spec
    p_blocks, d_blocks = [], []
    err = 0.0
    for c in range(spec.in_channels):
        n, sv = int(g[c]), svds[c]
        p_blocks.append(sv.U[:, :n] * sv.sigma[:n])
        d_blocks.append(sv.V[:, :n].T)
        err += float(alpha[c]) * tail_error_sq(sv, n)
    return _assemble(spec, g, p_blocks, d_blocks, err)


def exact_gdws(w: WeightMatrix) -> GDWSDecomposition:
    """Error-free rewrite with g_c = rank(W_c), preserving sparsity.

    Each channel block is factored over a basis of its own rows (picked by
    pivoted QR), so a sparse W yields factors no denser than W itself. The
    SVD route would instead densify any channel whose sparsity pattern
    couples several rows and columns.
    """
    spec = w.spec
    p_blocks, d_blocks = [], []
    g = np.zeros(spec.in_channels, dtype=np.int64)
    err = 0.0
    for c in range(spec.in_channels):
        block = w.channel_block(c)
        sv = svd_submatrix(block)
        r = sv.r
        g[c] = r
        if r == 0:
            p_blocks.append(np.zeros((spec.out_channels, 0)))
            d_blocks.append(np.zeros((0, spec.kernel ** 2)))
            continue
        _, _, piv = scipy.linalg.qr(block.T, pivoting=True, mode="economic")
        rows = np.sort(piv[:r])
        basis = block[rows].copy()
        norms = np.linalg.norm(basis, axis=1)
        basis /= norms[:, None]
        coef = np.linalg.lstsq(basis.T, block.T, rcond=None)[0].T
        scale = np.max(np.abs(coef), initial=0.0)
        if scale > 0:
            coef[np.abs(coef) < 1e-12 * scale] = 0.0
        resid = np.linalg.norm(block - coef @ basis)
        if resid > 1e-9 * max(np.linalg.norm(block), 1e-300):
            # ill-conditioned row subset; fall back to the dense exact route
            coef = sv.U * sv.sigma
            basis = sv.V.T
            resid = np.linalg.norm(block - coef @ basis)
        p_blocks.append(coef)
        d_blocks.append(basis)
        err += float(resid) ** 2
    return _assemble(spec, g, p_blocks, d_blocks, err)
