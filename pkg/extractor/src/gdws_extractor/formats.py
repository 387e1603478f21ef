"""Writers and readers for the interchange formats this tool speaks.

Implemented from the format contracts, not by importing the consumer:
the only coupling to the rewrite toolkit is these bytes.

- model container: JSON manifest (sorted keys, indent 1) plus a sibling
  .bin blob of raw little-endian float32 values; weight references are
  {"offset": bytes, "len": elements}
- sensitivity file: JSON, format "gdws-alpha" version 1
- feature-map probe: 16-byte header (magic "GDWT", u32 C, H, W,
  little-endian) followed by float32 data

All writes are atomic: temp file in the target directory, then rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MODEL_FORMAT = "gdws-model"
MODEL_VERSION = 1
ALPHA_FORMAT = "gdws-alpha"
ALPHA_VERSION = 1
FEATUREMAP_MAGIC = b"GDWT"


class FormatError(ValueError):
    """File does not match the interchange contract."""


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


class BlobWriter:
    def __init__(self) -> None:
        self.chunks: list[bytes] = []
        self.offset = 0

    def put(self, arr: np.ndarray) -> dict:
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        ref = {"offset": self.offset, "len": int(arr.size)}
        self.chunks.append(raw)
        self.offset += len(raw)
        return ref


def write_model(manifest_path, name: str, input_shape, layer_entries: list,
                blob: BlobWriter) -> None:
    manifest_path = Path(manifest_path)
    blob_path = manifest_path.with_suffix(".bin")
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "name": name,
        "variant": "standard",
        "input": [int(v) for v in input_shape],
        "blob": blob_path.name,
        "layers": layer_entries,
    }
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    _atomic_write_bytes(manifest_path, text.encode())
    _atomic_write_bytes(blob_path, b"".join(blob.chunks))


def write_alpha(path, layers: dict, meta: dict) -> None:
    for lid, vec in layers.items():
        arr = np.asarray(vec, dtype=np.float64)
        if arr.ndim != 1 or not np.isfinite(arr).all() or (arr < 0).any():
            raise FormatError(f"layer {lid!r}: sensitivity entries must be "
                              f"finite non-negative reals")
    doc = {
        "format": ALPHA_FORMAT,
        "version": ALPHA_VERSION,
        "meta": meta,
        "layers": {k: [float(v) for v in layers[k]] for k in layers},
    }
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    path = Path(path)
    _atomic_write_bytes(path, text.encode())


def read_feature_map(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != FEATUREMAP_MAGIC:
        raise FormatError(f"{path}: not a feature-map file")
    c, h, w = struct.unpack("<III", raw[4:16])
    need = 16 + 4 * c * h * w
    if len(raw) != need:
        raise FormatError(f"{path}: size {len(raw)}, expected {need}")
    data = np.frombuffer(raw[16:], dtype="<f4").astype(np.float64)
    return data.reshape(c, h, w)
