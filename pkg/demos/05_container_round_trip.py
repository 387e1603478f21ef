"""Serialize a network, rewrite it through the command line, verify it back.

Models travel as a JSON manifest plus a sibling binary blob of float32
tensors. The same files drive the command-line tools, so this script
stages a model on disk, runs the rewrite command against it, and checks
the result with the verify command.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from gdws import AlphaFile, load_model, save_alpha, save_model
from gdws.cli import main
from gdws.executor import (Conv2D, Dense, GlobalAvgPool, NetworkManifest,
                           ReLU, WeightMatrix)
from gdws.types import ConvLayerSpec

rng = np.random.default_rng(12)

spec1 = ConvLayerSpec("c1", 2, 3, 6, padding=1)
spec2 = ConvLayerSpec("c2", 6, 2, 8)
net = NetworkManifest("round-trip", "standard", (2, 8, 8), [
    Conv2D("c1", WeightMatrix(spec1, rng.standard_normal((6, 18)))),
    ReLU("r1"),
    Conv2D("c2", WeightMatrix(spec2, rng.standard_normal((8, 24)))),
    GlobalAvgPool("gap"),
    Dense("fc", rng.standard_normal((3, 8)), np.zeros(3)),
])

with tempfile.TemporaryDirectory() as d:
    root = Path(d)
    model = root / "model.json"
    save_model(net, model)
    print("manifest on disk:")
    print(model.read_text()[:400], "...\n")

    save_alpha(AlphaFile({"c1": np.ones(2), "c2": np.ones(6)}), root / "a.json")

    out = root / "compressed.json"
    rc = main(["approx", "--model", str(model), "--alpha", str(root / "a.json"),
               "--beta", "0.1", "--out", str(out)])
    print(f"\nrewrite command exit code: {rc}")

    back = load_model(out)
    print(f"loaded back: variant={back.variant},"
          f" layers={[l.type for l in back.layers]}")

    print("\nverify command output:")
    main(["verify", "--orig", str(model), "--gdws", str(out), "--probes", "10"])
