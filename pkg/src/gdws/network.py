"""Network-level rewriting, verification, and MAC/parameter reporting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .approx import (GDWSDecomposition, compose, exact_gdws, lego, mego,
                     weighted_error_sq)
from .conv import macs_gdws, macs_standard
from .executor import (Conv2D, Dense, GdwsPair, NetworkManifest, activations,
                       forward_pass, run_layer, sized_spec, with_sized_specs)
from .svd import svd_submatrix, tail_error_sq
from .types import MacReport, ShapeError, WeightMatrix


def lower_gdw(g) -> np.ndarray:
    """Duplication map: intermediate channel j reads input channel map[j].

    Channel c appears g_c times, in channel order, so the depthwise stage of
    the rewritten layer acts on a channel-duplicated input.
    """
    g = np.asarray(g, dtype=np.int64)
    if (g < 0).any():
        raise ShapeError("negative filter counts")
    return np.repeat(np.arange(g.shape[0]), g)


def to_gdws_pair(dec: GDWSDecomposition, layer_id: str,
                 bias: np.ndarray | None) -> GdwsPair:
    """Package a decomposition as an executable depthwise/pointwise pair."""
    spec, k = dec.spec, dec.spec.kernel
    off = dec.block_offsets()
    stacks = []
    for c in range(spec.in_channels):
        rows = dec.W_D[off[c]:off[c + 1], c * k * k:(c + 1) * k * k]
        stacks.append(rows.reshape(-1, k, k))
    gdw = (np.concatenate(stacks) if stacks else np.zeros((0, k, k)))
    return GdwsPair(layer_id, spec, dec.g.copy(), lower_gdw(dec.g),
                    gdw, dec.W_P.copy(), bias)


def _map_layers(net: NetworkManifest, fn, workers: int | None):
    """Apply fn to conv layers (others pass through), order preserved."""
    jobs = [(i, l) for i, l in enumerate(net.layers) if isinstance(l, Conv2D)]
    out = list(net.layers)
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda jl: fn(jl[1]), jobs))
    else:
        results = [fn(l) for _, l in jobs]
    for (i, _), new in zip(jobs, results):
        out[i] = new
    return out


def build_lego_network(net: NetworkManifest, alphas: dict, beta: float,
                       workers: int | None = None) -> NetworkManifest:
    """Rewrite every conv layer at the same squared-error budget beta.

    alphas maps layer id to that layer's per-channel error weights and must
    cover every conv layer. 1x1 convolutions are left in standard form (they
    are already pointwise; the rewrite can only add work). Biases move to
    the pointwise stage unchanged.
    """
    if net.variant != "standard":
        raise ShapeError(f"expected a standard-variant network, got {net.variant}")
    missing = [l.id for l in net.conv_layers() if l.id not in alphas]
    if missing:
        raise ValueError(f"no alpha vector for conv layer(s): {', '.join(missing)}")

    def rewrite(layer: Conv2D):
        if layer.spec.kernel == 1:
            return layer
        if beta == 0:
            dec = exact_gdws(layer.weights)
        else:
            dec = lego(layer.weights, alphas[layer.id], beta)
        return to_gdws_pair(dec, layer.id, layer.bias)

    return net.replaced(_map_layers(net, rewrite, workers), "gdws")


def build_mego_gamma(net: NetworkManifest, alphas: dict | None, gamma: int,
                     workers: int | None = None) -> NetworkManifest:
    """Rewrite every conv layer under the same filter budget gamma.

    alphas may be None for unweighted error. 1x1 convolutions stay standard.
    """
    if net.variant != "standard":
        raise ShapeError(f"expected a standard-variant network, got {net.variant}")
    if gamma < 1:
        raise ValueError("gamma must be >= 1")

    def rewrite(layer: Conv2D):
        if layer.spec.kernel == 1:
            return layer
        alpha = (alphas[layer.id] if alphas
                 else np.ones(layer.spec.in_channels))
        dec = mego(layer.weights, alpha, gamma)
        return to_gdws_pair(dec, layer.id, layer.bias)

    if alphas is not None:
        missing = [l.id for l in net.conv_layers() if l.id not in alphas]
        if missing:
            raise ValueError(
                f"no alpha vector for conv layer(s): {', '.join(missing)}")
    return net.replaced(_map_layers(net, rewrite, workers), "gdws")


def uniform_gamma(spec, reduction_pct: float) -> int:
    """Largest filter total whose MAC count meets the per-layer target.

    Returns 0 when even one filter overshoots the target.
    """
    std = macs_standard(spec)
    target = (1.0 - reduction_pct / 100.0) * std
    oh, ow = spec.out_hw()
    per_filter = oh * ow * (spec.kernel ** 2 + spec.out_channels)
    return int(target // per_filter)


def build_mego_uniform(net: NetworkManifest, reduction_pct: float,
                       workers: int | None = None) -> NetworkManifest:
    """Cut every conv layer's MACs by the same percentage, unweighted error.

    Layers where even a single filter misses the target get one filter
    anyway (the layer must stay functional) unless their exact rewrite is
    already a net loss in MACs, in which case they stay standard.
    """
    if net.variant != "standard":
        raise ShapeError(f"expected a standard-variant network, got {net.variant}")
    if not 0.0 < reduction_pct < 100.0:
        raise ValueError("reduction_pct must be in (0, 100)")
    sized = with_sized_specs(net)

    def rewrite(layer: Conv2D):
        spec = layer.spec
        if spec.kernel == 1:
            return layer
        gamma = uniform_gamma(spec, reduction_pct)
        if gamma < 1:
            ranks = np.array([svd_submatrix(b).r for b in layer.weights.blocks()])
            if macs_gdws(spec, ranks) > macs_standard(spec):
                return layer
            gamma = 1
        ones = np.ones(spec.in_channels)
        dec = mego(layer.weights, ones, gamma)
        return to_gdws_pair(dec, layer.id, layer.bias)

    return sized.replaced(_map_layers(sized, rewrite, workers), "gdws")


@dataclass
class LayerCheck:
    layer_id: str
    predicted_error_sq: float
    measured_weight_error_sq: float
    max_output_abs_diff: float | None


@dataclass
class VerificationReport:
    per_layer: list
    max_logit_abs_diff: float | None
    decision_flips: int | None
    probe_count: int
    noise_gain_bound: float

    def to_dict(self) -> dict:
        return {
            "per_layer": [{
                "layer_id": c.layer_id,
                "predicted_error_sq": c.predicted_error_sq,
                "measured_weight_error_sq": c.measured_weight_error_sq,
                "max_output_abs_diff": c.max_output_abs_diff,
            } for c in self.per_layer],
            "end_to_end": {
                "max_logit_abs_diff": self.max_logit_abs_diff,
                "decision_flips": self.decision_flips,
                "probe_count": self.probe_count,
            },
            "noise_gain_bound": self.noise_gain_bound,
        }


def verify_network(orig: NetworkManifest, gdws: NetworkManifest,
                   probes: list, alphas: dict | None = None) -> VerificationReport:
    """Measure what the rewrite changed, per layer and end to end.

    Per-layer output diffs feed both variants the original network's input
    activation for that layer, isolating each layer's own error from
    upstream drift. The noise gain bound is the sum over rewritten layers of
    the measured weighted squared weight error (uniform weights when no
    alphas are given).
    """
    if len(orig.layers) != len(gdws.layers):
        raise ShapeError("layer counts differ")
    pairs = []
    for a, b in zip(orig.layers, gdws.layers):
        if a.id != b.id:
            raise ShapeError(f"layer ids diverge at {a.id!r} vs {b.id!r}")
        if isinstance(b, GdwsPair):
            if not isinstance(a, Conv2D):
                raise ShapeError(f"{a.id}: rewritten layer has no conv original")
            pairs.append((a, b))
        elif type(a) is not type(b):
            raise ShapeError(f"{a.id}: layer kinds differ")

    checks = []
    bound = 0.0
    for conv, pair in pairs:
        w = conv.weights
        alpha = (np.asarray(alphas[conv.id], dtype=np.float64)
                 if alphas else np.ones(w.spec.in_channels))
        predicted = 0.0
        for c in range(w.spec.in_channels):
            predicted += float(alpha[c]) * tail_error_sq(
                svd_submatrix(w.channel_block(c)), int(pair.g[c]))
        q = compose(pair.pw, _pair_wd(pair), w.spec, pair.g)
        measured = weighted_error_sq(w, q, alpha)
        bound += measured
        checks.append(LayerCheck(conv.id, predicted, measured, None))

    max_logit = None
    flips = None
    if probes:
        max_logit = 0.0
        flips = 0
        orig_sized = with_sized_specs(orig)
        gdws_sized = with_sized_specs(gdws)
        pair_pos = [i for i, l in enumerate(gdws_sized.layers)
                    if isinstance(l, GdwsPair)]
        pos_diff = dict.fromkeys(pair_pos, 0.0)
        for x in probes:
            acts = activations(orig_sized, x)
            for i in pair_pos:
                got = run_layer(gdws_sized.layers[i], acts[i])
                pos_diff[i] = max(pos_diff[i],
                                  float(np.max(np.abs(got - acts[i + 1]))))
            za = acts[-1].ravel()
            zb = forward_pass(gdws_sized, x)
            max_logit = max(max_logit, float(np.max(np.abs(za - zb))))
            if int(np.argmax(za)) != int(np.argmax(zb)):
                flips += 1
        for check, i in zip(checks, pair_pos):
            check.max_output_abs_diff = pos_diff[i]

    return VerificationReport(checks, max_logit, flips, len(probes), bound)


def _pair_wd(pair: GdwsPair) -> np.ndarray:
    """Rebuild the block-structured depthwise factor from stacked filters."""
    spec, k = pair.spec, pair.spec.kernel
    big_g = int(np.sum(pair.g))
    w_d = np.zeros((big_g, spec.patch_len))
    h = 0
    for c in range(spec.in_channels):
        n = int(pair.g[c])
        w_d[h:h + n, c * k * k:(c + 1) * k * k] = pair.gdw[h:h + n].reshape(n, k * k)
        h += n
    return w_d


@dataclass
class LayerRow:
    layer_id: str
    kind: str
    C: int | None
    K: int | None
    M: int | None
    g: list | None
    G: int | None
    ranks: list | None
    params: int
    macs_standard_equiv: int
    macs_actual: int


def report(net: NetworkManifest) -> tuple[list, MacReport]:
    """Per-layer complexity table plus the network MAC totals."""
    sized = with_sized_specs(net)
    rows = []
    total_std = 0
    total_act = 0
    for layer in sized.layers:
        if isinstance(layer, Conv2D):
            spec = layer.spec
            std = macs_standard(spec)
            ranks = [svd_submatrix(b).r for b in layer.weights.blocks()]
            params = spec.out_channels * spec.patch_len
            params += spec.out_channels if layer.bias is not None else 0
            rows.append(LayerRow(layer.id, "conv2d", spec.in_channels,
                                 spec.kernel, spec.out_channels, None, None,
                                 ranks, params, std, std))
            total_std += std
            total_act += std
        elif isinstance(layer, GdwsPair):
            spec = layer.spec
            std = macs_standard(spec)
            act = macs_gdws(spec, layer.g)
            big_g = int(np.sum(layer.g))
            k = spec.kernel
            params = big_g * k * k + spec.out_channels * big_g
            params += spec.out_channels if layer.bias is not None else 0
            q = compose(layer.pw, _pair_wd(layer), spec, layer.g)
            ranks = [svd_submatrix(b).r for b in q.blocks()]
            rows.append(LayerRow(layer.id, "gdws_pair", spec.in_channels, k,
                                 spec.out_channels, [int(v) for v in layer.g],
                                 big_g, ranks, params, std, act))
            total_std += std
            total_act += act
        elif isinstance(layer, Dense):
            n_out, n_in = layer.weights.shape
            macs = n_out * n_in
            params = macs + (n_out if layer.bias is not None else 0)
            rows.append(LayerRow(layer.id, "dense", None, None, None, None,
                                 None, None, params, macs, macs))
            total_std += macs
            total_act += macs
        else:
            rows.append(LayerRow(layer.id, layer.type, None, None, None,
                                 None, None, None, 0, 0, 0))
    return rows, MacReport.of(total_std, total_act)


def format_report(rows: list, macs: MacReport) -> str:
    head = f"{'layer':<12}{'kind':<12}{'C':>4}{'K':>3}{'M':>4}  " \
           f"{'G':>4}  {'params':>8}  {'macs':>10}  {'std macs':>10}  g"
    lines = [head, "-" * len(head)]
    for r in rows:
        c = "" if r.C is None else r.C
        k = "" if r.K is None else r.K
        m = "" if r.M is None else r.M
        g_total = "" if r.G is None else r.G
        g = "" if r.g is None else ",".join(str(v) for v in r.g)
        lines.append(f"{r.layer_id:<12}{r.kind:<12}{c:>4}{k:>3}{m:>4}  "
                     f"{g_total:>4}  {r.params:>8}  {r.macs_actual:>10}  "
                     f"{r.macs_standard_equiv:>10}  {g}")
    lines.append("-" * len(head))
    red = "inf" if macs.gdws_macs == 0 else f"{macs.reduction_factor:.4g}"
    lines.append(f"total macs: standard {macs.standard_macs}, "
                 f"current {macs.gdws_macs}, reduction {red}x")
    return "\n".join(lines)
