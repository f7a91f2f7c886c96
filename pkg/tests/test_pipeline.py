from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import flows_snapshot, path_topology, planted_pair
from islandkit.coherency import Partition
from islandkit.config import RunConfig
from islandkit.errors import NonIslandingError, ValidationError
from islandkit.grid_model import build_topology
from islandkit.layers import MultiLayerGraph, active_power_layer, reactive_power_layer
from islandkit.pipeline import (
    IslandingConfig,
    balance_report,
    cut_set,
    disruption_metrics,
    enforce_connectivity,
    msci,
    single_layer_islanding,
)
from islandkit.reference import case1_partition, ieee39_topology
from islandkit.synth import SynthSpec, ieee39_scenario, synth_scenario
from islandkit.workflow import build_graph, run_island

SCHEMA = json.loads(
    (Path(__file__).resolve().parents[1] / "src" / "islandkit" / "data" / "solution.schema.json").read_text()
)


def test_cut_set_and_disruption_on_a_path():
    topo, snap = path_topology(4, [5.0, 1.0, 7.0])
    part = Partition((0, 0, 1, 1))
    assert [br.id for br in cut_set(topo, part)] == ["L2"]
    assert disruption_metrics(snap, topo, part) == (1.0, 0.3)


def test_cut_set_natural_order():
    labels = [f"B{i}" for i in range(1, 4)]
    topo = build_topology(labels, [("B1", "B2", "L10"), ("B2", "B3", "L9"), ("B1", "B3", "L2")])
    assert [br.id for br in cut_set(topo, (0, 1, 2))] == ["L2", "L9", "L10"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_disruption_equals_branch_resummation(seed):
    topo, snap, _ = planted_pair(seed)
    rng = np.random.default_rng(seed)
    a = tuple(int(x) for x in rng.integers(0, 3, topo.n_buses))
    p, q = disruption_metrics(snap, topo, a)
    cut = [pos for pos, br in enumerate(topo.branches) if a[br.from_bus.index] != a[br.to_bus.index]]
    assert p == pytest.approx(sum((abs(snap.p_from[c]) + abs(snap.p_to[c])) / 2 for c in cut), abs=1e-9)
    assert q == pytest.approx(sum((abs(snap.q_from[c]) + abs(snap.q_to[c])) / 2 for c in cut), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_balance_is_conserved(seed, k):
    rng = np.random.default_rng(seed)
    n = 8
    topo, _ = path_topology(n, [1.0] * (n - 1))
    pg, pl, qg, ql = (rng.integers(0, 500, n).astype(float) for _ in range(4))
    snap = flows_snapshot(topo, [1.0] * (n - 1), pg=pg, pl=pl, qg=qg, ql=ql)
    a = Partition.from_labels([int(x) for x in rng.integers(0, k, n)])
    rep = balance_report(snap, a)
    assert math.fsum(i.dp for i in rep.islands) == pg.sum() - pl.sum()
    assert math.fsum(i.dq for i in rep.islands) == qg.sum() - ql.sum()
    assert rep.total_abs_dp == math.fsum(abs(i.dp) for i in rep.islands)


def test_repair_moves_a_stranded_bus():
    topo, snap = path_topology(3, [10.0, 10.0])
    fixed, moved = enforce_connectivity(topo, (0, 1, 0))
    assert moved == [2]
    assert fixed.assignment == (0, 1, 1)


def test_repair_keeps_the_larger_fragment_and_uses_boundary_weight():
    # cluster 0 = {0..4} on a path plus stranded {6,7}; cluster 1 = {5}
    labels = [f"B{i}" for i in range(8)]
    edges = [(i, i + 1) for i in range(7)]
    topo = build_topology(labels, [(labels[i], labels[j], f"L{i}") for i, j in edges])
    part = (0, 0, 0, 0, 0, 1, 0, 0)
    fixed, moved = enforce_connectivity(topo, part)
    assert moved == [6, 7]
    assert fixed.assignment == (0, 0, 0, 0, 0, 1, 1, 1)
    assert all(len(topo.components(g)) == 1 for g in fixed.groups())


def test_repair_picks_heavier_neighbour():
    # X belongs to cluster 0 but only touches clusters 1 (weight 1) and 2 (weight 3)
    topo = build_topology(
        ["P1", "P2", "X", "Y", "Z"],
        [("P1", "P2", "1"), ("P2", "Y", "2"), ("X", "Y", "3"), ("X", "Z", "4")],
    )
    w = np.zeros((5, 5))
    w[2, 3] = w[3, 2] = 1.0
    w[2, 4] = w[4, 2] = 3.0
    fixed, moved = enforce_connectivity(topo, (0, 0, 0, 1, 2), w)
    assert moved == [2]
    assert fixed.assignment == (0, 0, 1, 2, 1)
    # equal weights fall back to the lowest cluster id
    w[2, 4] = w[4, 2] = 1.0
    fixed, _ = enforce_connectivity(topo, (0, 0, 0, 1, 2), w)
    assert fixed.assignment == (0, 0, 1, 1, 2)


def test_case_one_cut_set_on_39_bus():
    topo = ieee39_topology()
    part = case1_partition(topo)
    assert [br.id for br in cut_set(topo, part)] == ["L2-25", "L3-18", "L14-15"]
    assert all(len(topo.components(g)) == 1 for g in part.groups())


def test_full_pipeline_on_39_bus_scenario():
    sc = ieee39_scenario(seed=0)
    run = RunConfig(case=4, seed=3)
    out = run_island(run, sc.topology, sc.snapshot, sc.waveforms)
    jsonschema.validate(out, SCHEMA)
    assert out["k"] == 2
    assert [c["id"] for c in out["cut_set"]] == ["L2-25", "L3-18", "L14-15"]
    truth = [[sc.topology.labels[i] for i in g] for g in sc.groups.groups()]
    assert out["islands"] == truth
    assert out["warnings"] == []


@pytest.mark.parametrize("case", [1, 2, 3])
def test_single_layer_cases_run(case):
    sc = synth_scenario(SynthSpec(seed=1))
    out = run_island(RunConfig(case=case, seed=1), sc.topology, sc.snapshot, sc.waveforms)
    jsonschema.validate(out, SCHEMA)
    assert out["config"]["case"] == case
    assert all(len(sc.topology.components([sc.topology.index_of(b) for b in isl])) == 1 for isl in out["islands"])


def test_same_seed_same_solution():
    sc = synth_scenario(SynthSpec(seed=2, noise=0.01))
    graph = build_graph(RunConfig(), sc.topology, sc.snapshot, sc.waveforms)
    a = msci(graph, sc.topology, sc.snapshot, IslandingConfig(seed=9))
    b = msci(graph, sc.topology, sc.snapshot, IslandingConfig(seed=9))
    assert a.to_dict(sc.topology, sc.snapshot) == b.to_dict(sc.topology, sc.snapshot)


def test_explicit_k_and_limits():
    sc = synth_scenario(SynthSpec(seed=4))
    layer = active_power_layer(sc.snapshot, sc.topology)
    sol = single_layer_islanding(layer, sc.topology, sc.snapshot, k=2)
    assert sol.partition.k == 2
    assert sol.config["k_used"] == 2
    with pytest.raises(NonIslandingError):
        single_layer_islanding(layer, sc.topology, sc.snapshot, k=12)
    one = single_layer_islanding(layer, sc.topology, sc.snapshot, k=1)
    assert one.cut_set == [] and one.active_disruption == 0.0


def test_graph_size_must_match_topology():
    sc = synth_scenario(SynthSpec(seed=0))
    other = synth_scenario(SynthSpec(group_sizes=(3, 3), freqs=(0.3, 0.6), seed=0))
    graph = MultiLayerGraph([reactive_power_layer(other.snapshot, other.topology)])
    with pytest.raises(ValidationError):
        msci(graph, sc.topology, sc.snapshot)


def test_split_coherent_group_is_warned():
    sc = synth_scenario(SynthSpec(seed=0))
    graph = build_graph(RunConfig(), sc.topology, sc.snapshot, sc.waveforms)
    sol = msci(graph, sc.topology, sc.snapshot, IslandingConfig(k=4))
    assert sol.partition.k == 4
    assert len(sol.warnings) >= 1 and "split across islands" in sol.warnings[0]
