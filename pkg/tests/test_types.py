import math

import numpy as np
import pytest

from gdws import ConvLayerSpec, MacReport, ShapeError, WeightMatrix


def test_spec_output_dims():
    spec = ConvLayerSpec("a", 3, 3, 8, 2, 1, 9, 9)
    assert spec.out_hw() == (5, 5)
    assert spec.patch_len == 27


def test_spec_rejects_bad_counts():
    with pytest.raises(ShapeError):
        ConvLayerSpec("a", 0, 3, 8)
    with pytest.raises(ShapeError):
        ConvLayerSpec("a", 3, 3, 8, stride=0)
    with pytest.raises(ShapeError):
        ConvLayerSpec("a", 3, 3, 8, padding=-1)


def test_spec_rejects_empty_output():
    with pytest.raises(ShapeError):
        ConvLayerSpec("a", 1, 5, 1, 1, 0, 3, 3)


def test_spec_requires_both_dims():
    with pytest.raises(ShapeError):
        ConvLayerSpec("a", 1, 1, 1, input_h=4)


def test_weight_matrix_shape_checked():
    spec = ConvLayerSpec("a", 2, 2, 3)
    with pytest.raises(ShapeError):
        WeightMatrix(spec, np.zeros((3, 7)))


def test_channel_blocks_concatenate_back():
    rng = np.random.default_rng(7)
    spec = ConvLayerSpec("a", 4, 3, 5)
    w = WeightMatrix(spec, rng.standard_normal((5, 36)))
    rebuilt = np.hstack(w.blocks())
    assert np.array_equal(rebuilt, w.data)


def test_channel_block_is_a_view():
    spec = ConvLayerSpec("a", 2, 2, 3)
    w = WeightMatrix(spec, np.zeros((3, 8)))
    w.channel_block(1)[0, 0] = 5.0
    assert w.data[0, 4] == 5.0


def test_filter_round_trip():
    rng = np.random.default_rng(8)
    spec = ConvLayerSpec("a", 3, 2, 4)
    filters = rng.standard_normal((4, 3, 2, 2))
    w = WeightMatrix.from_filters(spec, filters)
    assert np.array_equal(w.to_filters(), filters)
    # column c*K^2 + k is kernel element k of channel c
    assert w.data[1, 2 * 4 + 3] == filters[1, 2, 1, 1]


def test_mac_report_ratio():
    r = MacReport.of(48, 32)
    assert r.reduction_factor == 1.5
    assert MacReport.of(10, 0).reduction_factor == math.inf
