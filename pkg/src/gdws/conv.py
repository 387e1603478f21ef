"""Reference convolution executor and MAC accounting.

Everything here is a pure function of its arguments and runs in float64.
The executor is intentionally naive: it exists to define correct answers,
not to be fast.
"""

from __future__ import annotations

import numpy as np

from .types import ConvLayerSpec, ShapeError, WeightMatrix


def _check_input(x: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"{spec.id}: feature map must be (C,H,W), got {x.shape}")
    c, h, w = x.shape
    if c != spec.in_channels:
        raise ShapeError(f"{spec.id}: {c} channels, spec wants {spec.in_channels}")
    if spec.input_h is not None and (h, w) != (spec.input_h, spec.input_w):
        raise ShapeError(f"{spec.id}: spatial dims {(h, w)} != spec "
                         f"{(spec.input_h, spec.input_w)}")
    return x


def im2col(x: np.ndarray, spec: ConvLayerSpec) -> np.ndarray:
    """Unroll input windows into a (C*K^2) x (H'*W') matrix.

    Column p holds the vectorized receptive field of output position p
    (row-major over output positions). Row c*K^2 + k holds kernel element k
    of channel c, matching the WeightMatrix column layout, so the layer
    output is exactly the matrix product weight @ im2col.
    """
    x = _check_input(x, spec)
    c, h, w = x.shape
    k, s, p = spec.kernel, spec.stride, spec.padding
    if p:
        x = np.pad(x, ((0, 0), (p, p), (p, p)))
    oh = (h + 2 * p - k) // s + 1
    ow = (w + 2 * p - k) // s + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"{spec.id}: empty output ({oh}x{ow})")
    # windows: (C, oh, ow, K, K) after stride slicing
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(1, 2))
    win = win[:, ::s, ::s]
    cols = win.transpose(0, 3, 4, 1, 2).reshape(c * k * k, oh * ow)
    return np.ascontiguousarray(cols)


def conv2d_ref(w: WeightMatrix, x: np.ndarray,
               bias: np.ndarray | None = None) -> np.ndarray:
    """Standard 2D convolution, output (M, H', W').

    Accumulates over the C*K^2 patch index in ascending order so results are
    bit-for-bit reproducible regardless of BLAS.
    """
    spec = w.spec
    cols = im2col(x, spec)
    h, ww = x.shape[1], x.shape[2]
    k, s, p = spec.kernel, spec.stride, spec.padding
    oh = (h + 2 * p - k) // s + 1
    ow = (ww + 2 * p - k) // s + 1
    out = np.zeros((spec.out_channels, oh * ow))
    for idx in range(spec.patch_len):
        out += np.outer(w.data[:, idx], cols[idx])
    out = out.reshape(spec.out_channels, oh, ow)
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def macs_standard(spec: ConvLayerSpec) -> int:
    """H'W'MCK^2 multiply-accumulates of the standard form."""
    oh, ow = spec.out_hw()
    return oh * ow * spec.out_channels * spec.patch_len


def macs_gdws(spec: ConvLayerSpec, g) -> int:
    """H'W'G(K^2+M) multiply-accumulates of the rewritten form."""
    g = np.asarray(g, dtype=np.int64)
    if g.shape != (spec.in_channels,):
        raise ShapeError(f"{spec.id}: g length {g.shape} != C={spec.in_channels}")
    if (g < 0).any():
        raise ShapeError(f"{spec.id}: negative filter counts")
    oh, ow = spec.out_hw()
    big_g = int(g.sum())
    return oh * ow * big_g * (spec.kernel ** 2 + spec.out_channels)
