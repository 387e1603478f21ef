"""On-disk model container: a JSON manifest plus one float32 blob.

The manifest lists layers in execution order; weight references are
{"offset": <bytes into the blob>, "len": <element count>}. The blob holds
raw float32 little-endian values, row-major. Feature maps live in their own
small binary format, a 16-byte header (magic "GDWT", then u32 channels,
height, width, little-endian) followed by the float32 data.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .executor import (AvgPool2, Conv2D, Dense, GdwsPair, GlobalAvgPool,
                       NetworkManifest, ReLU)
from .types import ConvLayerSpec, ShapeError, WeightMatrix

FORMAT_NAME = "gdws-model"
FORMAT_VERSION = 1
FEATUREMAP_MAGIC = b"GDWT"


class ContainerError(ValueError):
    """Manifest or blob fails validation."""


class _BlobWriter:
    def __init__(self) -> None:
        self.chunks: list[bytes] = []
        self.offset = 0

    def put(self, arr: np.ndarray) -> dict:
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        ref = {"offset": self.offset, "len": int(arr.size)}
        self.chunks.append(raw)
        self.offset += len(raw)
        return ref


def _layer_entry(layer, blob: _BlobWriter) -> dict:
    if isinstance(layer, Conv2D):
        s = layer.spec
        entry = {"id": layer.id, "type": "conv2d", "C": s.in_channels,
                 "K": s.kernel, "M": s.out_channels, "stride": s.stride,
                 "padding": s.padding, "weights": blob.put(layer.weights.data)}
        if layer.bias is not None:
            entry["bias"] = blob.put(layer.bias)
        return entry
    if isinstance(layer, GdwsPair):
        s = layer.spec
        entry = {"id": layer.id, "type": "gdws_pair", "C": s.in_channels,
                 "K": s.kernel, "M": s.out_channels, "stride": s.stride,
                 "padding": s.padding,
                 "g": [int(v) for v in layer.g],
                 "dup": [int(v) for v in layer.dup],
                 "gdw_weights": blob.put(layer.gdw),
                 "pw_weights": blob.put(layer.pw)}
        if layer.bias is not None:
            entry["bias"] = blob.put(layer.bias)
        return entry
    if isinstance(layer, Dense):
        n_out, n_in = layer.weights.shape
        entry = {"id": layer.id, "type": "dense", "in": n_in, "out": n_out,
                 "weights": blob.put(layer.weights)}
        if layer.bias is not None:
            entry["bias"] = blob.put(layer.bias)
        return entry
    if isinstance(layer, (ReLU, AvgPool2, GlobalAvgPool)):
        return {"id": layer.id, "type": layer.type}
    raise ContainerError(f"cannot serialize layer type {type(layer).__name__}")


def save_model(net: NetworkManifest, manifest_path) -> None:
    """Write <manifest_path> and a sibling .bin blob, deterministically."""
    manifest_path = Path(manifest_path)
    blob_path = manifest_path.with_suffix(".bin")
    blob = _BlobWriter()
    layers = [_layer_entry(l, blob) for l in net.layers]
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": net.name,
        "variant": net.variant,
        "input": list(net.input_shape),
        "blob": blob_path.name,
        "layers": layers,
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    blob_path.write_bytes(b"".join(blob.chunks))


def _read(blob: bytes, ref: dict, shape: tuple) -> np.ndarray:
    need = int(np.prod(shape)) if shape else int(ref["len"])
    if ref["len"] != need:
        raise ContainerError(f"blob ref len {ref['len']}, expected {need}")
    start = int(ref["offset"])
    end = start + 4 * need
    if end > len(blob):
        raise ContainerError("blob reference out of bounds")
    arr = np.frombuffer(blob[start:end], dtype="<f4").astype(np.float64)
    return arr.reshape(shape) if shape else arr


def load_model(manifest_path) -> NetworkManifest:
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise ContainerError(f"manifest is not valid JSON: {e}") from e
    if doc.get("format") != FORMAT_NAME:
        raise ContainerError(f"not a {FORMAT_NAME} manifest")
    if doc.get("version") != FORMAT_VERSION:
        raise ContainerError(f"unsupported version {doc.get('version')!r}")
    blob = (manifest_path.parent / doc["blob"]).read_bytes()
    shape = tuple(int(v) for v in doc.get("input", ()))
    if len(shape) != 3:
        raise ContainerError("manifest lacks a valid input shape")

    layers = []
    c, h, w = shape
    for entry in doc["layers"]:
        kind = entry.get("type")
        lid = entry.get("id", f"layer{len(layers)}")
        if kind == "conv2d":
            spec = ConvLayerSpec(lid, entry["C"], entry["K"], entry["M"],
                                 entry["stride"], entry["padding"], h, w)
            wm = WeightMatrix(spec, _read(blob, entry["weights"],
                                          (spec.out_channels, spec.patch_len)))
            bias = (_read(blob, entry["bias"], (spec.out_channels,))
                    if "bias" in entry else None)
            layers.append(Conv2D(lid, wm, bias))
            oh, ow = spec.out_hw()
            c, h, w = spec.out_channels, oh, ow
        elif kind == "gdws_pair":
            spec = ConvLayerSpec(lid, entry["C"], entry["K"], entry["M"],
                                 entry["stride"], entry["padding"], h, w)
            g = np.asarray(entry["g"], dtype=np.int64)
            dup = np.asarray(entry["dup"], dtype=np.int64)
            big_g = int(g.sum())
            gdw = _read(blob, entry["gdw_weights"],
                        (big_g, spec.kernel, spec.kernel))
            pw = _read(blob, entry["pw_weights"], (spec.out_channels, big_g))
            bias = (_read(blob, entry["bias"], (spec.out_channels,))
                    if "bias" in entry else None)
            layers.append(GdwsPair(lid, spec, g, dup, gdw, pw, bias))
            oh, ow = spec.out_hw()
            c, h, w = spec.out_channels, oh, ow
        elif kind == "dense":
            wm = _read(blob, entry["weights"], (entry["out"], entry["in"]))
            bias = (_read(blob, entry["bias"], (entry["out"],))
                    if "bias" in entry else None)
            layers.append(Dense(lid, wm, bias))
            c, h, w = entry["out"], 1, 1
        elif kind == "relu":
            layers.append(ReLU(lid))
        elif kind == "avgpool":
            layers.append(AvgPool2(lid))
            h, w = h // 2, w // 2
        elif kind == "globalavgpool":
            layers.append(GlobalAvgPool(lid))
            h, w = 1, 1
        else:
            raise ContainerError(f"unknown layer type {kind!r}")

    variant = doc.get("variant", "standard")
    name = doc.get("name", manifest_path.stem)
    try:
        return NetworkManifest(name, variant, shape, layers)
    except ShapeError as e:
        raise ContainerError(str(e)) from e


def save_feature_map(path, x: np.ndarray) -> None:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"feature map must be (C,H,W), got {x.shape}")
    header = FEATUREMAP_MAGIC + struct.pack("<III", *x.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(x, dtype="<f4").tobytes())


def load_feature_map(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != FEATUREMAP_MAGIC:
        raise ContainerError(f"{path}: not a feature-map file")
    c, h, w = struct.unpack("<III", raw[4:16])
    need = 16 + 4 * c * h * w
    if len(raw) != need:
        raise ContainerError(f"{path}: size {len(raw)}, expected {need}")
    data = np.frombuffer(raw[16:], dtype="<f4").astype(np.float64)
    return data.reshape(c, h, w)
