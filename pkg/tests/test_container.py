import json

import numpy as np
import pytest

from gdws import (ContainerError, GdwsPair, build_lego_network,
                  forward_pass, load_feature_map, load_model,
                  save_feature_map, save_model)

from nets import three_conv_cnn, two_conv_net


def _alphas(net):
    return {l.id: np.ones(l.spec.in_channels) for l in net.conv_layers()}


def test_model_round_trip_standard(tmp_path):
    rng = np.random.default_rng(81)
    net = three_conv_cnn(rng)
    path = tmp_path / "m.json"
    save_model(net, path)
    back = load_model(path)
    assert back.name == net.name
    assert back.variant == "standard"
    assert back.input_shape == net.input_shape
    assert len(back.layers) == len(net.layers)
    x = rng.standard_normal((2, 10, 10))
    a = forward_pass(net, x)
    b = forward_pass(back, x)
    # weights pass through float32 at rest
    assert np.max(np.abs(a - b)) <= 1e-4


def test_model_round_trip_exact_at_float32(tmp_path):
    rng = np.random.default_rng(82)
    net = two_conv_net(rng)
    # store float32-representable weights so the trip is bit exact
    for layer in net.conv_layers():
        layer.weights.data[:] = layer.weights.data.astype(np.float32)
        layer.bias[:] = layer.bias.astype(np.float32)
    path = tmp_path / "m.json"
    save_model(net, path)
    back = load_model(path)
    for a, b in zip(net.conv_layers(), back.conv_layers()):
        assert np.array_equal(a.weights.data, b.weights.data)
        assert np.array_equal(a.bias, b.bias)


def test_model_round_trip_gdws_variant(tmp_path):
    rng = np.random.default_rng(83)
    net = three_conv_cnn(rng)
    gnet = build_lego_network(net, _alphas(net), 0.0)
    path = tmp_path / "g.json"
    save_model(gnet, path)
    back = load_model(path)
    assert back.variant == "gdws"
    pairs_a = [l for l in gnet.layers if isinstance(l, GdwsPair)]
    pairs_b = [l for l in back.layers if isinstance(l, GdwsPair)]
    assert len(pairs_a) == len(pairs_b) == 3
    for a, b in zip(pairs_a, pairs_b):
        assert np.array_equal(a.g, b.g)
        assert np.array_equal(a.dup, b.dup)
    x = rng.standard_normal((2, 10, 10))
    assert np.max(np.abs(forward_pass(gnet, x) - forward_pass(back, x))) <= 1e-4


def test_save_is_deterministic(tmp_path):
    rng = np.random.default_rng(84)
    net = two_conv_net(rng)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(net, p1)
    save_model(net, p2)
    assert p1.read_bytes() == p2.read_bytes().replace(b'"b.bin"', b'"a.bin"')
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_manifest_offsets_are_bytes_len_elements(tmp_path):
    rng = np.random.default_rng(85)
    net = two_conv_net(rng)
    path = tmp_path / "m.json"
    save_model(net, path)
    doc = json.loads(path.read_text())
    offset = 0
    for entry in doc["layers"]:
        for key in ("weights", "gdw_weights", "pw_weights", "bias"):
            if key in entry:
                ref = entry[key]
                assert ref["offset"] == offset
                offset += 4 * ref["len"]
    assert (tmp_path / "m.bin").stat().st_size == offset


def test_load_rejects_bad_format(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format": "something-else", "version": 1}))
    with pytest.raises(ContainerError):
        load_model(path)


def test_load_rejects_bad_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format": "gdws-model", "version": 99,
                                "blob": "x.bin", "input": [1, 2, 2],
                                "layers": []}))
    with pytest.raises(ContainerError):
        load_model(path)


def test_load_rejects_truncated_blob(tmp_path):
    rng = np.random.default_rng(86)
    net = two_conv_net(rng)
    path = tmp_path / "m.json"
    save_model(net, path)
    blob = tmp_path / "m.bin"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(ContainerError):
        load_model(path)


def test_load_rejects_garbage_json(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{not json")
    with pytest.raises(ContainerError):
        load_model(path)


def test_feature_map_round_trip(tmp_path):
    rng = np.random.default_rng(87)
    x = rng.standard_normal((3, 5, 4)).astype(np.float32).astype(np.float64)
    path = tmp_path / "x.gdwt"
    save_feature_map(path, x)
    raw = path.read_bytes()
    assert raw[:4] == b"GDWT"
    assert len(raw) == 16 + 4 * 3 * 5 * 4
    back = load_feature_map(path)
    assert back.shape == (3, 5, 4)
    assert np.array_equal(back, x)


def test_feature_map_rejects_wrong_magic(tmp_path):
    path = tmp_path / "x.gdwt"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(ContainerError):
        load_feature_map(path)


def test_feature_map_rejects_size_mismatch(tmp_path):
    path = tmp_path / "x.gdwt"
    save_feature_map(path, np.zeros((1, 2, 2)))
    path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(ContainerError):
        load_feature_map(path)
