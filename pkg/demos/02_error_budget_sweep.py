"""Sweep the squared-error budget and watch complexity fall.

lego() returns the cheapest rewrite whose weighted squared weight error
stays within the budget. Loosening the budget monotonically removes
depthwise filters, trading accuracy for multiply-accumulates.
"""

import numpy as np

from gdws import ConvLayerSpec, WeightMatrix, lego, macs_gdws, macs_standard

rng = np.random.default_rng(7)
spec = ConvLayerSpec("conv", in_channels=8, kernel=3, out_channels=16,
                     input_h=14, input_w=14)
layer = WeightMatrix(spec, rng.standard_normal((16, 8 * 9)))
alpha = np.ones(8)

# budget at zero forces the exact rewrite; the top end allows dropping
# everything that matters
full_energy = float(np.sum(layer.data ** 2))
budgets = [0.0] + [full_energy * f for f in (0.001, 0.01, 0.05, 0.2, 0.5)]

std = macs_standard(spec)
print(f"standard form: {std} MACs\n")
print(f"{'budget':>12}  {'filters':>7}  {'achieved err^2':>14}  {'MACs':>8}  {'ratio':>6}")
for beta in budgets:
    dec = lego(layer, alpha, beta)
    macs = macs_gdws(spec, dec.g)
    ratio = std / macs if macs else float("inf")
    print(f"{beta:12.4f}  {dec.G:7d}  {dec.achieved_error_sq:14.6f}"
          f"  {macs:8d}  {ratio:6.2f}")

print("\nDense random weights have full-rank channel blocks, so the exact")
print("rewrite costs MORE than the standard form. Savings appear once the")
print("budget lets filters go, or when the weights are sparse or low-rank.")
