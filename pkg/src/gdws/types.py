"""Shape descriptors and the flat weight-matrix view of a 2D convolution.

A feature map is a plain float ndarray of shape (channels, height, width).
Weights of a (C, K, M) convolution are kept as an M x (C*K*K) matrix whose
column c*K*K + k holds kernel element k (row-major within the K x K window)
of input channel c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor or descriptor shapes disagree."""


@dataclass(frozen=True)
class ConvLayerSpec:
    """Static shape of one standard 2D convolution.

    input_h / input_w are optional; they are needed for MAC counts and
    execution but not for weight-space operations.
    """

    id: str
    in_channels: int
    kernel: int
    out_channels: int
    stride: int = 1
    padding: int = 0
    input_h: int | None = None
    input_w: int | None = None

    def __post_init__(self) -> None:
        if min(self.in_channels, self.kernel, self.out_channels) < 1:
            raise ShapeError(f"{self.id}: channel/kernel counts must be >= 1")
        if self.stride < 1 or self.padding < 0:
            raise ShapeError(f"{self.id}: bad stride/padding")
        if (self.input_h is None) != (self.input_w is None):
            raise ShapeError(f"{self.id}: give both input dims or neither")
        if self.input_h is not None:
            oh, ow = self.out_hw()
            if oh < 1 or ow < 1:
                raise ShapeError(f"{self.id}: empty output ({oh}x{ow})")

    @property
    def patch_len(self) -> int:
        return self.in_channels * self.kernel * self.kernel

    def out_hw(self) -> tuple[int, int]:
        if self.input_h is None or self.input_w is None:
            raise ShapeError(f"{self.id}: input dims unknown")
        k, s, p = self.kernel, self.stride, self.padding
        oh = (self.input_h + 2 * p - k) // s + 1
        ow = (self.input_w + 2 * p - k) // s + 1
        return oh, ow

    def with_input(self, h: int, w: int) -> "ConvLayerSpec":
        return ConvLayerSpec(self.id, self.in_channels, self.kernel,
                             self.out_channels, self.stride, self.padding, h, w)


@dataclass
class WeightMatrix:
    """M x (C*K^2) weight matrix with addressable per-channel blocks."""

    spec: ConvLayerSpec
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        want = (self.spec.out_channels, self.spec.patch_len)
        if self.data.shape != want:
            raise ShapeError(
                f"{self.spec.id}: weight shape {self.data.shape}, expected {want}")

    def channel_block(self, c: int) -> np.ndarray:
        """View of the M x K^2 sub-matrix for input channel c."""
        kk = self.spec.kernel ** 2
        return self.data[:, c * kk:(c + 1) * kk]

    def blocks(self) -> list[np.ndarray]:
        return [self.channel_block(c) for c in range(self.spec.in_channels)]

    @staticmethod
    def from_blocks(spec: ConvLayerSpec, blocks: list[np.ndarray]) -> "WeightMatrix":
        if len(blocks) != spec.in_channels:
            raise ShapeError(f"{spec.id}: need {spec.in_channels} blocks")
        return WeightMatrix(spec, np.hstack(blocks))

    @staticmethod
    def from_filters(spec: ConvLayerSpec, filters: np.ndarray) -> "WeightMatrix":
        """Flatten an (M, C, K, K) filter bank into the matrix layout."""
        m, c, k = spec.out_channels, spec.in_channels, spec.kernel
        filters = np.asarray(filters, dtype=np.float64)
        if filters.shape != (m, c, k, k):
            raise ShapeError(f"{spec.id}: filter bank shape {filters.shape}")
        return WeightMatrix(spec, filters.reshape(m, c * k * k))

    def to_filters(self) -> np.ndarray:
        m, c, k = self.spec.out_channels, self.spec.in_channels, self.spec.kernel
        return self.data.reshape(m, c, k, k)


@dataclass(frozen=True)
class MacReport:
    standard_macs: int
    gdws_macs: int
    reduction_factor: float = field(default=0.0)

    @staticmethod
    def of(standard_macs: int, gdws_macs: int) -> "MacReport":
        red = standard_macs / gdws_macs if gdws_macs > 0 else math.inf
        return MacReport(standard_macs, gdws_macs, red)
