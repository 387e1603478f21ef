"""Acceptance gate for the extractor: one verdict line, always printed.

Both halves run against the shared two-conv toy net: the sensitivity
weights must match the consumer's finite-difference oracle per channel,
and the exported container must reproduce the torch logits through the
consumer's executor.
"""

import sys

import numpy as np
import torch
from gdws.alpha import compute_alpha_fd
from gdws.container import load_model, save_feature_map
from gdws.executor import activations

from gdws_extractor import ExtractionJob, export_model, extract_alpha

from torch_fixtures import TWO_CONV_SHAPE, save_checkpoint, two_conv_net


def _verdict(capfd, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    with capfd.disabled():
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def test_cross_implementation_agreement(capfd, tmp_path):
    model = two_conv_net()
    ck = save_checkpoint(model, TWO_CONV_SHAPE, tmp_path / "net.pt")
    net = load_model(export_model(ck, tmp_path / "export"))

    rng = np.random.default_rng(12)
    worst_z = 0.0
    for _ in range(100):
        x = rng.standard_normal(TWO_CONV_SHAPE)
        with torch.no_grad():
            zt = model(torch.as_tensor(x).unsqueeze(0)).flatten().numpy()
        zp = np.asarray(activations(net, x)[-1]).ravel()
        worst_z = max(worst_z, float(np.max(np.abs(zt - zp))))

    samples = [rng.standard_normal(TWO_CONV_SHAPE) for _ in range(6)]
    data = tmp_path / "data"
    data.mkdir()
    for i, s in enumerate(samples):
        save_feature_map(data / f"s{i:02d}.gdwt", s)
    got = extract_alpha(ExtractionJob(ck, data, len(samples),
                                      {"c1": "c1", "c2": "c2"}))
    ref = compute_alpha_fd(net, samples)
    worst_a = 0.0
    for lid in ("c1", "c2"):
        a, b = got.layers[lid], ref.layers[lid]
        rel = np.abs(a - b) / np.maximum(np.abs(b), 1e-30)
        worst_a = max(worst_a, float(np.max(rel)))

    ok = worst_a <= 1e-3 and worst_z <= 1e-4
    _verdict(capfd, "extractor cross-check", ok,
             f"alpha rel diff {worst_a:.2e} (tol 1e-3), "
             f"round-trip logit diff {worst_z:.2e} (tol 1e-4)")
