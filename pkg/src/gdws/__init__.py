"""Post-training rewrite of standard 2D convolutions into generalized
depthwise-separable form, with exact MAC accounting and verification."""

from .alpha import (AlphaFile, LogitDiffs, LogitTieError, alpha_fd,
                    alpha_uniform, compute_alpha_fd, load_alpha, logit_diffs,
                    save_alpha)
from .approx import (GDWSDecomposition, RankError, StructureError, compose,
                     decompose, exact_gdws, lego, mego, weighted_error_sq)
from .container import (ContainerError, load_feature_map, load_model,
                        save_feature_map, save_model)
from .conv import conv2d_ref, im2col, macs_gdws, macs_standard
from .executor import (AvgPool2, Conv2D, Dense, GdwsPair, GlobalAvgPool,
                       NetworkManifest, ReLU, activations, forward_pass)
from .network import (VerificationReport, build_lego_network,
                      build_mego_gamma, build_mego_uniform, format_report,
                      lower_gdw, report, to_gdws_pair, verify_network)
from .svd import SubMatrixSVD, svd_submatrix, tail_error_sq, truncate
from .types import ConvLayerSpec, MacReport, ShapeError, WeightMatrix

__version__ = "0.1.0"

__all__ = [
    "AlphaFile", "AvgPool2", "Conv2D", "ConvLayerSpec", "ContainerError",
    "Dense", "GDWSDecomposition", "GdwsPair", "GlobalAvgPool", "LogitDiffs",
    "LogitTieError", "MacReport", "NetworkManifest", "RankError", "ReLU",
    "ShapeError", "StructureError", "SubMatrixSVD", "VerificationReport",
    "WeightMatrix", "activations", "alpha_fd", "alpha_uniform",
    "build_lego_network", "build_mego_gamma", "build_mego_uniform",
    "compose", "compute_alpha_fd", "conv2d_ref", "decompose", "exact_gdws",
    "format_report", "forward_pass", "im2col", "lego", "load_alpha",
    "load_feature_map", "load_model", "logit_diffs", "lower_gdw",
    "macs_gdws", "macs_standard", "mego", "report", "save_alpha",
    "save_feature_map", "save_model", "svd_submatrix", "tail_error_sq",
    "to_gdws_pair", "truncate", "verify_network", "weighted_error_sq",
]
