"""Sensitivity extraction and container export for torch checkpoints."""

from .export import export_model, layer_entries
from .extract import (AlphaFile, EmptyResultError, ExtractionJob,
                      extract_alpha, load_samples)
from .formats import (ALPHA_FORMAT, ALPHA_VERSION, MODEL_FORMAT,
                      MODEL_VERSION, BlobWriter, FormatError,
                      read_feature_map, write_alpha, write_model)
from .graph import (UnsupportedArchitecture, conv_layers, load_checkpoint,
                    smoke_forward, walk)

__all__ = [
    "ALPHA_FORMAT", "ALPHA_VERSION", "MODEL_FORMAT", "MODEL_VERSION",
    "AlphaFile", "BlobWriter", "EmptyResultError", "ExtractionJob",
    "FormatError", "UnsupportedArchitecture", "conv_layers",
    "export_model", "extract_alpha", "layer_entries", "load_checkpoint",
    "load_samples", "read_feature_map", "smoke_forward", "walk",
    "write_alpha", "write_model",
]
