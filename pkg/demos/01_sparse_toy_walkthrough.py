"""Factor a tiny sparse convolution by hand-checkable numbers.

A 3-channel, 2x2-kernel, 4-filter layer with only four nonzero weights
rewrites exactly into a depthwise/pointwise pair that needs fewer
multiply-accumulates than the standard form. Every number printed here
can be verified by hand.
"""

import numpy as np

from gdws import ConvLayerSpec, WeightMatrix, exact_gdws, macs_gdws, macs_standard

spec = ConvLayerSpec("toy", in_channels=3, kernel=2, out_channels=4,
                     input_h=2, input_w=2)

w = np.zeros((4, 12))
w[0, 0] = 2.0    # filter 0 reads channel 0, kernel position 0
w[1, 4] = 1.5    # filter 1 reads channel 1, kernel position 0
w[2, 8] = -0.7   # filter 2 reads channel 2, kernel position 0
w[3, 2] = 3.0    # filter 3 reads channel 0, kernel position 2
layer = WeightMatrix(spec, w)

print("weight matrix (4 filters x 12 = 3 channels * 4 kernel positions):")
print(layer.data)

dec = exact_gdws(layer)
print("\nper-channel depthwise filter counts g:", dec.g.tolist())
print("reconstruction error (squared):", dec.achieved_error_sq)

print("\ndepthwise factor W_D (each row is one unit-norm kernel):")
print(dec.W_D)
print("\npointwise factor W_P (mixes depthwise outputs into filters):")
print(dec.W_P)

nnz_p = np.count_nonzero(dec.W_P)
nnz_d = np.count_nonzero(dec.W_D)
print(f"\nnonzeros: original {np.count_nonzero(w)},"
      f" factors {nnz_p} + {nnz_d} = {nnz_p + nnz_d}")

std = macs_standard(spec)
new = macs_gdws(spec, dec.g)
print(f"multiply-accumulates: standard {std}, rewritten {new},"
      f" reduction {std / new}x")
