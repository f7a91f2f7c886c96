from __future__ import annotations

import itertools

import numpy as np
import pytest

from builders import path_topology, planted_pair
from islandkit.errors import InfeasibleError, SizeLimitError, ValidationError
from islandkit.grid_model import build_topology
from islandkit.layers import active_power_layer
from islandkit.oracle import (
    bell,
    boundary_weight,
    clusters_connected,
    exact_min_disruption,
    restricted_growth_strings,
    stirling2,
)


def _canonical(a):
    remap = {}
    return tuple(remap.setdefault(x, len(remap)) for x in a)


@pytest.mark.parametrize("n", range(1, 7))
def test_enumeration_counts_against_brute_force(n):
    for k in range(1, n + 1):
        brute = {_canonical(a) for a in itertools.product(range(k), repeat=n) if len(set(a)) == k}
        got = list(restricted_growth_strings(n, k))
        assert len(got) == len(set(got)) == len(brute) == stirling2(n, k)
        assert set(got) == brute


def test_known_bell_and_stirling_values():
    assert [bell(n) for n in range(9)] == [1, 1, 2, 5, 15, 52, 203, 877, 4140]
    assert stirling2(8, 2) == 127 and stirling2(8, 3) == 966
    assert sum(1 for _ in restricted_growth_strings(8)) == 4140


def test_path_cuts_lightest_branch():
    topo, snap = path_topology(4, [5.0, 1.0, 7.0])
    res = exact_min_disruption(active_power_layer(snap, topo), topo, 2)
    assert res.objective == 1.0
    assert res.partition.assignment == (0, 0, 1, 1)
    assert res.evaluated == stirling2(4, 2)


def test_complete_four_needs_three_cuts():
    labels = ["A", "B", "C", "D"]
    topo = build_topology(labels, [(a, b, f"{a}{b}") for a, b in itertools.combinations(labels, 2)])
    w = np.ones((4, 4)) - np.eye(4)
    assert exact_min_disruption(w, topo, 2).objective == 3.0


def test_planted_bridge_is_cut():
    topo, snap, truth = planted_pair(0)
    layer = active_power_layer(snap, topo)
    res = exact_min_disruption(layer, topo, 2)
    assert res.partition.assignment == truth
    bridges = [pos for pos, br in enumerate(topo.branches) if truth[br.from_bus.index] != truth[br.to_bus.index]]
    assert res.objective == pytest.approx(sum(abs(snap.p_from[p]) for p in bridges))


def test_eight_node_planted_value():
    labels = [f"N{i}" for i in range(8)]
    edges = [(i, i + 1) for i in range(3)] + [(i, i + 1) for i in range(4, 7)] + [(3, 4)]
    topo = build_topology(labels, [(labels[i], labels[j], f"E{i}{j}") for i, j in edges])
    w = np.zeros((8, 8))
    for i, j in edges:
        w[i, j] = w[j, i] = 1.0
    w[3, 4] = w[4, 3] = 0.1
    assert exact_min_disruption(w, topo, 2).objective == pytest.approx(0.1)


def test_connectivity_filter():
    topo = build_topology(["C", "X", "Y", "Z"], [("C", "X", "a"), ("C", "Y", "b"), ("C", "Z", "c")])
    w = np.zeros((4, 4))
    for j, x in zip((1, 2, 3), (1.0, 2.0, 3.0)):
        w[0, j] = w[j, 0] = x
    res = exact_min_disruption(w, topo, 3)
    assert clusters_connected(topo, res.partition.assignment)
    assert res.objective == 3.0
    free = exact_min_disruption(w, topo, 3, connected=False)
    assert free.objective <= res.objective
    # three components cannot form two connected clusters
    split = build_topology(["A", "B", "C", "D"], [("A", "B", "x")])
    with pytest.raises(InfeasibleError):
        exact_min_disruption(np.zeros((4, 4)), split, 2)


def test_limits():
    topo, snap = path_topology(13, [1.0] * 12)
    with pytest.raises(SizeLimitError):
        exact_min_disruption(active_power_layer(snap, topo), topo, 2)
    one, snap1 = path_topology(1, [])
    with pytest.raises(ValidationError):
        exact_min_disruption(np.zeros((1, 1)), one, 2)


def test_boundary_weight_sums_cut_pairs():
    topo, snap = path_topology(4, [5.0, 1.0, 7.0])
    assert boundary_weight(active_power_layer(snap, topo), topo, (0, 1, 1, 0)) == 12.0
