"""Rewrite a whole network for a uniform per-layer MAC reduction.

The conv layers below are built with redundant (low-rank) channel
blocks plus a little noise, the regime this rewrite exploits. A 50
percent MAC cut then barely moves the logits. Fully random dense
weights have no such redundancy and would degrade visibly under the
same cut; see the budget-sweep demo for that trade-off.
"""

import numpy as np

from gdws import (build_mego_uniform, format_report, forward_pass, report,
                  verify_network)
from gdws.executor import (AvgPool2, Conv2D, Dense, GlobalAvgPool,
                           NetworkManifest, ReLU, WeightMatrix)
from gdws.types import ConvLayerSpec

rng = np.random.default_rng(42)


def redundant_conv(lid, c, k, m, rank, **kw):
    """Each channel block is rank-limited with 0.1% additive noise."""
    spec = ConvLayerSpec(lid, c, k, m, **kw)
    kk = k * k
    w = np.zeros((m, c * kk))
    for ci in range(c):
        block = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, kk))
        w[:, ci * kk:(ci + 1) * kk] = block + 1e-3 * rng.standard_normal((m, kk))
    return Conv2D(lid, WeightMatrix(spec, w), rng.standard_normal(m) * 0.1)


net = NetworkManifest("demo-cnn", "standard", (3, 16, 16), [
    redundant_conv("c1", 3, 3, 8, rank=2, padding=1),
    ReLU("r1"),
    AvgPool2("p1"),
    redundant_conv("c2", 8, 3, 12, rank=2),
    ReLU("r2"),
    redundant_conv("c3", 12, 3, 10, rank=1),
    ReLU("r3"),
    GlobalAvgPool("gap"),
    Dense("fc", rng.standard_normal((5, 10)), np.zeros(5)),
])

print("original:")
rows, macs = report(net)
print(format_report(rows, macs))

compressed = build_mego_uniform(net, reduction_pct=50.0)
print("\nafter a uniform 50% per-layer MAC target:")
rows, macs = report(compressed)
print(format_report(rows, macs))

probes = [rng.standard_normal((3, 16, 16)) for _ in range(20)]
rep = verify_network(net, compressed, probes)
print(f"\nmax logit difference over {rep.probe_count} probes:"
      f" {rep.max_logit_abs_diff:.6f}")
print(f"decision flips: {rep.decision_flips}")

x = probes[0]
print("\nfirst probe logits, original:  ", np.round(forward_pass(net, x), 4))
print("first probe logits, compressed:", np.round(forward_pass(compressed, x), 4))
