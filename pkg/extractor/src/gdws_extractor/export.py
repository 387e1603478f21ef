"""Convert a torch checkpoint into the model container format.

Conv weights land as an (M, C*K*K) matrix whose column c*K*K + k holds
kernel element k (row-major within the window) of input channel c; a
torch (M, C, K, K) tensor reshaped row-major has exactly that order.
"""

from __future__ import annotations

from pathlib import Path

from torch import nn

from .formats import BlobWriter, write_model
from .graph import load_checkpoint, walk


def _np(t):
    return t.detach().cpu().double().numpy()


def layer_entries(model: nn.Module, blob: BlobWriter) -> list[dict]:
    entries: list[dict] = []
    for name, mod in walk(model):
        if isinstance(mod, nn.Conv2d):
            m, c = mod.out_channels, mod.in_channels
            k = mod.kernel_size[0]
            entry = {"id": name, "type": "conv2d", "C": c, "K": k, "M": m,
                     "stride": mod.stride[0], "padding": mod.padding[0],
                     "weights": blob.put(_np(mod.weight).reshape(m, c * k * k))}
            if mod.bias is not None:
                entry["bias"] = blob.put(_np(mod.bias))
            entries.append(entry)
        elif isinstance(mod, nn.ReLU):
            entries.append({"id": name, "type": "relu"})
        elif isinstance(mod, nn.AvgPool2d):
            entries.append({"id": name, "type": "avgpool"})
        elif isinstance(mod, nn.AdaptiveAvgPool2d):
            entries.append({"id": name, "type": "globalavgpool"})
        elif isinstance(mod, nn.Linear):
            entry = {"id": name, "type": "dense", "in": mod.in_features,
                     "out": mod.out_features,
                     "weights": blob.put(_np(mod.weight))}
            if mod.bias is not None:
                entry["bias"] = blob.put(_np(mod.bias))
            entries.append(entry)
    return entries


def export_model(ckpt_path, out_dir, name: str | None = None) -> Path:
    """Write <name>.json plus <name>.bin under out_dir; returns the manifest path."""
    model, input_shape, _ = load_checkpoint(ckpt_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or Path(ckpt_path).stem
    manifest = out_dir / f"{name}.json"
    blob = BlobWriter()
    entries = layer_entries(model, blob)
    write_model(manifest, name, input_shape, entries, blob)
    return manifest
