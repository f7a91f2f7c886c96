from __future__ import annotations

import math

import numpy as np
import pytest

from builders import flows_snapshot
from islandkit.errors import ConfigurationError, DimensionError, ValidationError
from islandkit.grid_model import PowerFlowSnapshot, build_topology
from islandkit.layers import (
    active_power_layer,
    assemble_multilayer,
    check_layer,
    frequency_layer,
    normalize_layer,
    reactive_power_layer,
)
from islandkit.signal_analysis import SimilarityMatrix


@pytest.fixture
def topo():
    return build_topology(["A", "B", "C"], [("A", "B", "L1"), ("B", "C", "L2"), ("B", "C", "L3")])


def test_measured_layer_averages_both_ends(topo):
    snap = PowerFlowSnapshot(
        [100.0, 20.0, 8.0], [-98.0, -20.0, -8.0], [10.0, 4.0, 2.0], [-6.0, -4.0, -2.0],
        v=[1, 1, 1], phi=[0, 0, 0], pg=[0, 0, 0], qg=[0, 0, 0], pl=[0, 0, 0], ql=[0, 0, 0],
    )
    p = active_power_layer(snap, topo).weights
    q = reactive_power_layer(snap, topo).weights
    assert p[0, 1] == p[1, 0] == 99.0
    assert p[1, 2] == 28.0  # parallel circuits add
    assert p[0, 2] == 0.0
    assert q[0, 1] == 8.0 and q[1, 2] == 6.0
    check_layer(p)


def test_formula_layers(topo):
    g = np.zeros((3, 3))
    b = np.zeros((3, 3))
    b[0, 1] = b[1, 0] = 10.0
    g[1, 2] = g[2, 1] = 5.0
    snap = PowerFlowSnapshot(
        [0, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0],
        v=[1.0, 1.0, 1.0], phi=[0.1, 0.0, 0.0], pg=[0, 0, 0], qg=[0, 0, 0], pl=[0, 0, 0], ql=[0, 0, 0], g=g, b=b,
    )
    p = active_power_layer(snap, topo, "formula").weights
    q = reactive_power_layer(snap, topo, "formula").weights
    assert p[0, 1] == pytest.approx(10 * math.sin(0.1), abs=1e-12)
    assert p[0, 1] == pytest.approx(0.99833, abs=1e-5)
    assert q[1, 2] == pytest.approx(5.0, abs=1e-12)


def test_formula_needs_admittance(topo):
    snap = flows_snapshot(topo, [1.0, 1.0, 1.0])
    with pytest.raises(ConfigurationError):
        active_power_layer(snap, topo, "formula")
    with pytest.raises(ConfigurationError):
        active_power_layer(snap, topo, "guess")


def test_clamp_policies():
    c = np.array([[1.0, 0.6, -0.4], [0.6, 1.0, 0.2], [-0.4, 0.2, 1.0]])
    corr = SimilarityMatrix(c, "frequency", raw=c)
    zero = frequency_layer(corr, "zero").weights
    shift = frequency_layer(corr, "shift").weights
    assert zero.tolist() == [[0.0, 0.6, 0.0], [0.6, 0.0, 0.2], [0.0, 0.2, 0.0]]
    assert np.allclose(shift, [[0, 1.6, 0.6], [1.6, 0, 1.2], [0.6, 1.2, 0]])
    check_layer(zero)
    with pytest.raises(ConfigurationError):
        frequency_layer(corr, "abs")


def test_normalize_and_checks():
    w = np.array([[0.0, 4.0], [4.0, 0.0]])
    assert normalize_layer(SimilarityMatrix(w, "active")).weights.max() == 1.0
    with pytest.raises(ValidationError):
        check_layer(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValidationError):
        check_layer(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(DimensionError):
        check_layer(np.zeros((2, 3)))


def test_multilayer_requires_common_vertex_set():
    a = SimilarityMatrix(np.zeros((3, 3)), "active")
    b = SimilarityMatrix(np.zeros((4, 4)), "reactive")
    with pytest.raises((DimensionError, ValidationError)):
        assemble_multilayer([a, b])
    g = assemble_multilayer([a, SimilarityMatrix(np.zeros((3, 3)), "reactive")])
    assert g.n == 3 and g.kinds == ["active", "reactive"]
    assert g.layer("reactive").kind == "reactive"
