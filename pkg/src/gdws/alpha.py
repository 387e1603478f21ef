"""Per-channel error weights: uniform mode, file ingestion, and a
finite-difference oracle.

The weight of channel c in layer l answers: how much do the decision
margins move, on average over inputs, per unit of squared weight change in
that channel's block? The oracle estimates this with central differences
and is meant for cross-checking on small nets; autodiff-based extraction is
a separate tool that writes the same file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conv import conv2d_ref
from .executor import Conv2D, NetworkManifest, activations, run_layer, \
    with_sized_specs
from .types import ShapeError, WeightMatrix

ALPHA_FORMAT = "gdws-alpha"
ALPHA_VERSION = 1


class LogitTieError(ValueError):
    """A probe input produced a tied decision margin; the weight is singular there."""


@dataclass(frozen=True)
class LogitDiffs:
    """Margins of the predicted class: delta_j = z_j - z_{n_x} for j != n_x."""

    n_x: int
    delta: np.ndarray


def logit_diffs(logits: np.ndarray, tie_tol: float = 1e-12) -> LogitDiffs:
    z = np.asarray(logits, dtype=np.float64).ravel()
    n_x = int(np.argmax(z))
    delta = np.delete(z - z[n_x], n_x)
    if delta.size and np.min(np.abs(delta)) <= tie_tol:
        j = int(np.argmin(np.abs(delta)))
        raise LogitTieError(
            f"margin to competitor {j} is {delta[j]:.3e}; the sensitivity "
            f"weight diverges at ties, reject this sample")
    return LogitDiffs(n_x, delta)


def alpha_uniform(c: int) -> np.ndarray:
    if c < 1:
        raise ValueError("need at least one channel")
    return np.ones(c)


def _margins(logits: np.ndarray, n_x: int) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64).ravel()
    return np.delete(z - z[n_x], n_x)


def alpha_fd(net: NetworkManifest, samples: list, layer_id: str,
             channel: int, h: float = 1e-3) -> float:
    """Central-difference estimate of one channel's sensitivity weight.

    Per weight entry w the probe step is max(h*|w|, 0.01*h), so zero
    entries still move and the step scales down with h. The margin
    derivative matrix for competitor class j is assembled entry by entry in
    a fixed order; the result is the mean over samples of
    sum_j ||dD_j||_F^2 / (2 delta_j^2), divided by M*K^2.
    """
    if not samples:
        raise ValueError("need at least one sample")
    net = with_sized_specs(net)
    idx = next((i for i, l in enumerate(net.layers)
                if isinstance(l, Conv2D) and l.id == layer_id), None)
    if idx is None:
        raise ShapeError(f"no conv layer with id {layer_id!r}")
    conv = net.layers[idx]
    spec = conv.spec
    if not 0 <= channel < spec.in_channels:
        raise ShapeError(f"{layer_id}: channel {channel} out of range")
    kk = spec.kernel ** 2
    cols = range(channel * kk, (channel + 1) * kk)
    tail = net.layers[idx + 1:]

    def logits_with(wdata: np.ndarray, xin: np.ndarray) -> np.ndarray:
        y = conv2d_ref(WeightMatrix(spec, wdata), xin, conv.bias)
        for layer in tail:
            y = run_layer(layer, y)
        return np.asarray(y, dtype=np.float64).ravel()

    per_sample = np.zeros(len(samples))
    for s, x in enumerate(samples):
        acts = activations(net, x)
        xin = acts[idx]
        base = logit_diffs(acts[-1].ravel())
        n_j = base.delta.size
        if n_j == 0:
            continue
        d = np.zeros((spec.out_channels * kk, n_j))
        row = 0
        for m in range(spec.out_channels):
            for col in cols:
                w0 = conv.weights.data[m, col]
                step = max(h * abs(w0), 1e-2 * h)
                wplus = conv.weights.data.copy()
                wplus[m, col] = w0 + step
                wminus = conv.weights.data.copy()
                wminus[m, col] = w0 - step
                dplus = _margins(logits_with(wplus, xin), base.n_x)
                dminus = _margins(logits_with(wminus, xin), base.n_x)
                d[row] = (dplus - dminus) / (2.0 * step)
                row += 1
        per_sample[s] = float(np.sum(np.sum(d * d, axis=0) / (2.0 * base.delta ** 2)))
    return float(np.mean(per_sample)) / (spec.out_channels * kk)


@dataclass
class AlphaFile:
    layers: dict
    meta: dict = field(default_factory=dict)


def compute_alpha_fd(net: NetworkManifest, samples: list,
                     h: float = 1e-3) -> AlphaFile:
    """Sensitivity weights for every channel of every conv layer."""
    layers = {}
    for conv in net.conv_layers():
        c = conv.spec.in_channels
        layers[conv.id] = np.array(
            [alpha_fd(net, samples, conv.id, ch, h) for ch in range(c)])
    meta = {"sample_count": len(samples), "input_kind": "external",
            "generator": f"central-differences h={h:g}"}
    return AlphaFile(layers, meta)


def save_alpha(alpha_file: AlphaFile, path) -> None:
    doc = {
        "format": ALPHA_FORMAT,
        "version": ALPHA_VERSION,
        "meta": alpha_file.meta,
        "layers": {k: [float(v) for v in vec]
                   for k, vec in alpha_file.layers.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_alpha(path) -> AlphaFile:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON: {e}") from e
    if doc.get("format") != ALPHA_FORMAT or doc.get("version") != ALPHA_VERSION:
        raise ValueError(f"{path}: not a {ALPHA_FORMAT} v{ALPHA_VERSION} file")
    layers = {}
    for lid, vec in doc.get("layers", {}).items():
        arr = np.asarray(vec, dtype=np.float64)
        if arr.ndim != 1 or not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError(f"{path}: layer {lid!r} entries must be finite "
                             f"non-negative reals")
        layers[lid] = arr
    return AlphaFile(layers, doc.get("meta", {}))


def check_alpha_cover(alpha_file: AlphaFile, net: NetworkManifest) -> None:
    """Every conv layer present with the right vector length, or ValueError."""
    for conv in net.conv_layers():
        if conv.id not in alpha_file.layers:
            raise ValueError(f"alpha file missing conv layer {conv.id!r}")
        got = alpha_file.layers[conv.id].shape[0]
        want = conv.spec.in_channels
        if got != want:
            raise ValueError(f"alpha for {conv.id!r} has length {got}, "
                             f"layer has {want} input channels")
