import json

import pytest

from systolic_cost.arch import LayerKind, LayerSpec
from systolic_cost.blackbox import BlackboxLUT, build_blackbox_lut, quantize, signature
from systolic_cost.hardware import CostModelKind, ModelError, hard_layer_cost, network_cost
from systolic_cost.simulator import simulate_layer


def conv(c, f, k=3, h=16, w=16):
    return LayerSpec(LayerKind.CONV, c=c, f=f, h=h, w=w, k1=k, k2=k)


@pytest.mark.parametrize("x, q", [(130, 128), (136, 144), (120, 128), (7, 16), (8, 16), (280, 288), (10, 16)])
def test_quantize(x, q):
    assert quantize(x, 16) == q


def test_grid_points_equal_simulator():
    lut = build_blackbox_lut([conv(64, 64)], c_range=(64, 160))
    for c in (64, 96, 128, 160):
        for f in (80, 144):
            layer = conv(c, f)
            assert lut.layer_cost(layer).runtime_cycles == simulate_layer(layer).total_cycles


def test_nearest_neighbour_lookup():
    lut = build_blackbox_lut([conv(64, 64)], c_range=(64, 160))
    # 130 sits nearest to the stored 128 row
    assert lut.lookup(conv(130, 128)) == simulate_layer(conv(128, 128)).total_cycles
    # halfway between 128 and 144 ties towards the smaller key
    assert lut.lookup(conv(136, 128)) == simulate_layer(conv(128, 128)).total_cycles
    # the quantization error hides the 128 -> 129 cliff
    big = build_blackbox_lut([conv(64, 64, h=64, w=64)], c_range=(112, 144))
    assert big.lookup(conv(129, 128, h=64, w=64)) < hard_layer_cost(conv(129, 128, h=64, w=64)).runtime_cycles


def test_missing_signature():
    lut = build_blackbox_lut([conv(64, 64)])
    with pytest.raises(ModelError):
        lut.lookup(conv(64, 64, k=5))


def test_custom_oracle_and_depthwise_diagonal():
    dw = LayerSpec(LayerKind.DEPTHWISE, c=64, f=64, h=8, w=8, k1=3, k2=3)
    calls = []
    lut = build_blackbox_lut([dw], c_range=(64, 96), oracle=lambda l, hw: calls.append(l) or l.c)
    table = lut.entries[signature(dw)]
    assert set(table) == {(64, 64), (80, 80), (96, 96)}
    assert all(l.c == l.f for l in calls)
    assert lut.lookup(LayerSpec(LayerKind.DEPTHWISE, c=90, f=90, h=8, w=8, k1=3, k2=3)) == 96


def test_dilated_layers_round_trip(tmp_path):
    dil = LayerSpec(LayerKind.DILATED, c=64, f=64, h=8, w=8, k1=3, k2=3, dilation=2)
    lut = build_blackbox_lut([dil], c_range=(64, 80))
    path = tmp_path / "lut.json"
    lut.save(path)
    again = BlackboxLUT.load(path)
    assert again.entries == lut.entries
    assert again.lookup(dil) == simulate_layer(dil).total_cycles


def test_save_load_round_trip(tmp_path, load):
    spec = load("flat.yaml")
    lut = build_blackbox_lut(spec.flatten())
    path = tmp_path / "lut.json"
    lut.save(path)
    again = BlackboxLUT.load(path)
    assert again.quant == lut.quant and again.entries == lut.entries
    a = network_cost(spec, kind=CostModelKind.BLACKBOX, lut=lut)
    b = network_cost(spec, kind=CostModelKind.BLACKBOX, lut=again)
    assert a.total_cycles == b.total_cycles > 0
    assert all(0 < lc.utilization <= 1 for lc in a.layers)


@pytest.mark.parametrize("doc", [{"format": "other"}, {"format": "systolic-cost-lut", "version": 99}])
def test_rejects_foreign_documents(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        BlackboxLUT.load(path)
    path.write_text("{not json")
    with pytest.raises(ValueError):
        BlackboxLUT.load(path)


def test_dws_and_zero_cost(load):
    dws = LayerSpec(LayerKind.DWS, c=128, f=128, h=16, w=16, k1=3, k2=3)
    lut = build_blackbox_lut([dws], c_range=(128, 128))
    assert lut.layer_cost(dws).runtime_cycles == simulate_layer(dws).total_cycles
    zero = LayerSpec(LayerKind.IDENTITY, c=5, f=5, h=2, w=2)
    assert lut.layer_cost(zero).runtime_cycles == 0
