import numpy as np
import pytest

from gdws import (ConvLayerSpec, GdwsPair, ShapeError, WeightMatrix,
                  build_lego_network, build_mego_gamma, build_mego_uniform,
                  compose, conv2d_ref, forward_pass, lego, lower_gdw,
                  macs_gdws, macs_standard, report, to_gdws_pair,
                  verify_network)
from gdws.executor import run_layer, with_sized_specs
from gdws.network import uniform_gamma

from nets import golden_layer, random_layer, three_conv_cnn, two_conv_net


def _random_valid_pair(rng, c, k, m, stride=1, padding=0, h=6, w=6):
    """A structurally valid depthwise/pointwise pair with random content."""
    spec = ConvLayerSpec("rp", c, k, m, stride, padding, h, w)
    g = rng.integers(0, k * k + 1, size=c)
    big_g = int(g.sum())
    w_d = np.zeros((big_g, spec.patch_len))
    row = 0
    for ch in range(c):
        for _ in range(int(g[ch])):
            seg = rng.standard_normal(k * k)
            seg /= np.linalg.norm(seg)
            w_d[row, ch * k * k:(ch + 1) * k * k] = seg
            row += 1
    w_p = rng.standard_normal((m, big_g))
    return spec, g, w_p, w_d


def test_lower_gdw_golden():
    assert lower_gdw([2, 1, 1]).tolist() == [0, 0, 1, 2]


def test_lower_gdw_all_ones_is_identity():
    assert lower_gdw([1, 1, 1, 1]).tolist() == [0, 1, 2, 3]


def test_lower_gdw_counts_and_order():
    rng = np.random.default_rng(61)
    g = rng.integers(0, 4, size=6)
    dup = lower_gdw(g)
    assert len(dup) == g.sum()
    assert all(a <= b for a, b in zip(dup, dup[1:]))
    for c in range(6):
        assert int(np.sum(dup == c)) == int(g[c])


def test_lowered_execution_equals_composed_conv():
    rng = np.random.default_rng(62)
    for trial in range(10):
        c = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        m = int(rng.integers(1, 5))
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 2))
        h = int(rng.integers(k + 1, k + 5))
        spec, g, w_p, w_d = _random_valid_pair(rng, c, k, m, stride, padding,
                                               h, h)
        from gdws.approx import GDWSDecomposition
        dec = GDWSDecomposition(spec, np.asarray(g, dtype=np.int64), w_p, w_d, 0.0)
        bias = rng.standard_normal(m)
        pair = to_gdws_pair(dec, "rp", bias)
        x = rng.standard_normal((c, h, h))
        got = run_layer(pair, x)
        want = conv2d_ref(compose(w_p, w_d, spec, g), x, bias)
        assert got.shape == want.shape
        assert np.max(np.abs(got - want)) <= 1e-9


def test_zero_filter_pair_is_bias_only():
    spec = ConvLayerSpec("z", 2, 2, 3, 1, 0, 4, 4)
    pair = GdwsPair("z", spec, np.zeros(2, dtype=np.int64),
                    np.zeros(0, dtype=np.int64), np.zeros((0, 2, 2)),
                    np.zeros((3, 0)), np.array([1.0, -2.0, 0.5]))
    out = run_layer(pair, np.random.default_rng(63).standard_normal((2, 4, 4)))
    assert out.shape == (3, 3, 3)
    assert np.allclose(out[0], 1.0) and np.allclose(out[1], -2.0)


# ---------- builders ----------

def test_lego_build_zero_budget_preserves_logits():
    rng = np.random.default_rng(64)
    net = three_conv_cnn(rng)
    alphas = {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 0.0)
    assert gnet.variant == "gdws"
    for _ in range(20):
        x = rng.standard_normal((2, 10, 10))
        a = forward_pass(net, x)
        b = forward_pass(gnet, x)
        assert np.max(np.abs(a - b)) <= 1e-9


def test_lego_build_huge_budget_zeroes_everything():
    rng = np.random.default_rng(65)
    net = two_conv_net(rng)
    alphas = {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 1e9)
    pairs = [l for l in gnet.layers if isinstance(l, GdwsPair)]
    assert pairs and all(int(np.sum(p.g)) == 0 for p in pairs)
    # bias-only propagation still runs end to end
    x = rng.standard_normal((2, 6, 6))
    out = forward_pass(gnet, x)
    assert out.shape == (3,)
    assert np.array_equal(out, forward_pass(gnet, x * 3.0))


def test_lego_build_matches_standalone_per_layer():
    rng = np.random.default_rng(66)
    net = two_conv_net(rng)
    alphas = {l.id: rng.uniform(0.5, 2.0, l.spec.in_channels)
              for l in net.conv_layers()}
    beta = 0.05
    gnet = build_lego_network(net, alphas, beta)
    for orig, new in zip(net.layers, gnet.layers):
        if not isinstance(new, GdwsPair):
            continue
        solo = lego(orig.weights, alphas[orig.id], beta)
        assert np.array_equal(new.g, solo.g)
        assert np.allclose(new.pw, solo.W_P)


def test_lego_build_requires_alpha_for_every_conv():
    rng = np.random.default_rng(67)
    net = two_conv_net(rng)
    with pytest.raises(ValueError, match="c2"):
        build_lego_network(net, {"c1": np.ones(2)}, 0.0)


def test_lego_build_rejects_rewritten_input():
    rng = np.random.default_rng(68)
    net = two_conv_net(rng)
    alphas = {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 0.0)
    with pytest.raises(ShapeError):
        build_lego_network(gnet, alphas, 0.0)


def test_lego_build_threaded_equals_sequential():
    rng = np.random.default_rng(69)
    net = three_conv_cnn(rng)
    alphas = {l.id: rng.uniform(0.5, 2.0, l.spec.in_channels)
              for l in net.conv_layers()}
    a = build_lego_network(net, alphas, 0.01, workers=1)
    b = build_lego_network(net, alphas, 0.01, workers=4)
    for la, lb in zip(a.layers, b.layers):
        if isinstance(la, GdwsPair):
            assert np.array_equal(la.g, lb.g)
            assert np.array_equal(la.pw, lb.pw)
            assert np.array_equal(la.gdw, lb.gdw)


def test_uniform_gamma_formula_on_golden_shape():
    # 33% target on the 48-MAC layer leaves 32.16, and 4 filters cost 32
    spec = golden_layer().spec
    assert uniform_gamma(spec, 33.0) == 4
    assert uniform_gamma(spec, 50.0) == 3
    assert macs_gdws(spec, [2, 1, 1]) == 32


def test_uniform_build_hits_mac_targets():
    rng = np.random.default_rng(70)
    net = three_conv_cnn(rng)
    gnet = build_mego_uniform(net, 50.0)
    for layer in gnet.layers:
        if isinstance(layer, GdwsPair):
            spec = layer.spec
            assert macs_gdws(spec, layer.g) <= 0.5 * macs_standard(spec)


def test_uniform_build_low_target_saturates_cheap_layers():
    # a rank-deficient layer whose exact rewrite is cheaper than standard
    rng = np.random.default_rng(71)
    spec = ConvLayerSpec("lr", 4, 3, 20, 1, 0, 6, 6)
    basis = rng.standard_normal((20, 1))
    blocks = [basis @ rng.standard_normal((1, 9)) for _ in range(4)]
    w = WeightMatrix.from_blocks(spec, blocks)
    from gdws import Conv2D, Dense, GlobalAvgPool, NetworkManifest
    net = NetworkManifest("lr", "standard", (4, 6, 6),
                          [Conv2D("lr", w), GlobalAvgPool("g"),
                           Dense("fc", rng.standard_normal((3, 20)))])
    gnet = build_mego_uniform(net, 0.001)
    pair = gnet.layers[0]
    assert isinstance(pair, GdwsPair)
    assert pair.g.tolist() == [1, 1, 1, 1]


def test_uniform_build_rejects_out_of_range():
    rng = np.random.default_rng(72)
    net = two_conv_net(rng)
    for bad in (0.0, 100.0, -3.0):
        with pytest.raises(ValueError):
            build_mego_uniform(net, bad)


def test_gamma_build_uses_budget_per_layer():
    rng = np.random.default_rng(73)
    net = two_conv_net(rng)
    gnet = build_mego_gamma(net, None, 2)
    for layer in gnet.layers:
        if isinstance(layer, GdwsPair):
            assert int(np.sum(layer.g)) <= 2


# ---------- verification and reporting ----------

def test_verify_exact_build():
    rng = np.random.default_rng(74)
    net = three_conv_cnn(rng)
    alphas = {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 0.0)
    probes = [rng.standard_normal((2, 10, 10)) for _ in range(10)]
    rep = verify_network(net, gnet, probes)
    assert rep.max_logit_abs_diff <= 1e-6
    assert rep.decision_flips == 0
    assert rep.noise_gain_bound <= 1e-12
    for check in rep.per_layer:
        assert check.max_output_abs_diff <= 1e-9


def test_verify_predicted_matches_measured():
    rng = np.random.default_rng(75)
    net = two_conv_net(rng)
    alphas = {l.id: rng.uniform(0.5, 2.0, l.spec.in_channels)
              for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 0.02)
    rep = verify_network(net, gnet, [], alphas)
    assert rep.max_logit_abs_diff is None
    for conv, check in zip(net.conv_layers(), rep.per_layer):
        energy = sum(
            a * np.linalg.norm(conv.weights.channel_block(c)) ** 2
            for c, a in enumerate(alphas[conv.id]))
        assert abs(check.predicted_error_sq - check.measured_weight_error_sq) \
            <= 1e-9 * max(energy, 1e-12)
    total = sum(c.measured_weight_error_sq for c in rep.per_layer)
    assert rep.noise_gain_bound == total


def test_verify_rejects_topology_mismatch():
    rng = np.random.default_rng(76)
    a = two_conv_net(rng)
    b = three_conv_cnn(rng)
    with pytest.raises(ShapeError):
        verify_network(a, b, [])


def test_report_totals_and_params():
    rng = np.random.default_rng(77)
    net = three_conv_cnn(rng)
    alphas = {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}
    gnet = build_lego_network(net, alphas, 0.0)
    rows, macs = report(gnet)
    # full-rank exact rewrites cost MORE macs; totals must still reconcile
    assert macs.gdws_macs == sum(r.macs_actual for r in rows)
    assert macs.standard_macs == sum(r.macs_standard_equiv for r in rows)
    sized = with_sized_specs(gnet)
    for row, layer in zip(rows, sized.layers):
        if isinstance(layer, GdwsPair):
            spec = layer.spec
            big_g = int(np.sum(layer.g))
            k = spec.kernel
            want = big_g * k * k + spec.out_channels * big_g + spec.out_channels
            assert row.params == want
            assert row.G == big_g
            assert row.macs_actual == macs_gdws(spec, layer.g)
            assert row.macs_standard_equiv == macs_standard(spec)
            assert row.ranks == [int(v) for v in layer.g]


def test_report_on_standard_net_counts_standard_macs():
    rng = np.random.default_rng(78)
    net = two_conv_net(rng)
    rows, macs = report(net)
    assert macs.standard_macs == macs.gdws_macs
    conv_rows = [r for r in rows if r.kind == "conv2d"]
    assert all(r.ranks is not None for r in conv_rows)


def test_report_shows_reduction_after_uniform_build():
    rng = np.random.default_rng(79)
    net = three_conv_cnn(rng)
    gnet = build_mego_uniform(net, 50.0)
    _, macs = report(gnet)
    assert macs.gdws_macs < macs.standard_macs
    assert macs.reduction_factor > 1.0
