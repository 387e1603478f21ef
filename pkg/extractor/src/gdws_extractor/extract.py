"""Per-channel sensitivity weights from a checkpoint, via autodiff.

For input x with predicted class n_x and margins delta_j = z_j - z_{n_x},
channel c of conv layer l accumulates ||d delta_j / d W^{(l,c)}||_F^2
divided by 2*delta_j^2, over every competitor class j and every usable
sample, then divides by M_l * K_l^2 and the usable-sample count. One
backward pass per (sample, competitor) pair.

A sample whose top margin is tied is useless (the weight diverges at
ties), so it is skipped with a warning; if every sample ties, there is
no average to report and extraction fails.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .formats import read_feature_map
from .graph import conv_layers, load_checkpoint

TIE_TOL = 1e-12


class EmptyResultError(ValueError):
    """Every sample was rejected; there is nothing to average."""


@dataclass(frozen=True)
class ExtractionJob:
    """What to extract and where from.

    ckpt: checkpoint path; data: directory of .gdwt feature maps;
    n: how many samples to use; mapping: conv module name -> the layer
    id used in the container manifest and the output file.
    """

    ckpt: Path
    data: Path
    n: int
    mapping: dict

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample count must be >= 1")


@dataclass
class AlphaFile:
    layers: dict
    meta: dict = field(default_factory=dict)


def load_samples(data, n: int, input_shape) -> list[np.ndarray]:
    data = Path(data)
    if not data.is_dir():
        raise ValueError(f"{data}: sample source must be a directory of "
                         f".gdwt feature maps; dataset identifiers are not "
                         f"supported")
    files = sorted(data.glob("*.gdwt"))
    if not files:
        raise ValueError(f"{data}: no .gdwt feature maps found")
    if n > len(files):
        raise ValueError(f"requested {n} samples, directory holds {len(files)}")
    want = tuple(int(v) for v in input_shape)
    out = []
    for p in files[:n]:
        x = read_feature_map(p)
        if x.shape != want:
            raise ValueError(f"{p.name}: shape {x.shape} does not match "
                             f"model input {want}")
        out.append(x)
    return out


def _sample_contribution(model, convs, x: np.ndarray):
    """Squared-gradient accumulation for one input, or None on a tie."""
    xt = torch.as_tensor(np.asarray(x, dtype=np.float64)).unsqueeze(0)
    z = model(xt).flatten()
    zd = z.detach()
    n_x = int(torch.argmax(zd).item())
    js = [j for j in range(z.numel()) if j != n_x]
    if js and min(abs(float(zd[j] - zd[n_x])) for j in js) <= TIE_TOL:
        return None
    acc = {name: np.zeros(mod.in_channels) for name, mod in convs}
    params = [mod.weight for _, mod in convs]
    for i, j in enumerate(js):
        grads = torch.autograd.grad(z[j] - z[n_x], params,
                                    retain_graph=i + 1 < len(js))
        dj2 = 2.0 * float(zd[j] - zd[n_x]) ** 2
        for (name, _), gw in zip(convs, grads):
            acc[name] += (gw.pow(2).sum(dim=(0, 2, 3)) / dj2).numpy()
    return acc


def extract_alpha(job: ExtractionJob) -> AlphaFile:
    """Run the job end to end; raises on unmapped conv layers."""
    model, input_shape, _ = load_checkpoint(job.ckpt)
    convs = conv_layers(model)
    unmapped = [name for name, _ in convs if name not in job.mapping]
    if unmapped:
        raise ValueError(f"layer map does not cover conv layers: {unmapped}")
    samples = load_samples(job.data, job.n, input_shape)

    model = model.double().eval()
    for _, mod in convs:
        mod.weight.requires_grad_(True)
    totals = {name: np.zeros(mod.in_channels) for name, mod in convs}
    used = skipped = 0
    for i, x in enumerate(samples):
        contrib = _sample_contribution(model, convs, x)
        if contrib is None:
            skipped += 1
            warnings.warn(f"sample {i}: decision margin is tied, skipping")
            continue
        for name in totals:
            totals[name] += contrib[name]
        used += 1
    if used == 0:
        raise EmptyResultError(f"all {len(samples)} samples were skipped; "
                               f"no margins to average")

    layers = {}
    for name, mod in convs:
        m, k = mod.out_channels, mod.kernel_size[0]
        layers[job.mapping[name]] = totals[name] / (m * k * k * used)
    meta = {"sample_count": used, "skipped": skipped,
            "generator": "autograd", "input_kind": "external",
            "graph": "as-is", "model": Path(job.ckpt).stem}
    return AlphaFile(layers, meta)
