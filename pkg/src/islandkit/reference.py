"""Bundled reference data: the 39-bus topology and island balance fixtures."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .coherency import Partition
from .grid_model import GridTopology, PowerFlowSnapshot, build_topology, parse_topology


def _read(name: str) -> dict:
    return json.loads((resources.files("islandkit") / "data" / name).read_text(encoding="utf-8"))


def ieee39_topology() -> GridTopology:
    return parse_topology(_read("ieee39_topology.json"))


@lru_cache(maxsize=None)
def reference_cases() -> dict:
    return _read("reference_islands.json")


def reference_case(name: str) -> dict:
    for case in reference_cases()["cases"]:
        if case["name"] == name:
            return case
    names = [c["name"] for c in reference_cases()["cases"]]
    raise KeyError(f"unknown reference case {name!r}; available: {names}")


def island_snapshot(name: str) -> tuple[GridTopology, PowerFlowSnapshot, Partition]:
    """One aggregate bus per island carrying that island's totals.

    Islands are chained by zero-flow branches so the result is a valid
    topology/snapshot pair; the partition puts each bus in its own island.
    """
    islands = reference_case(name)["islands"]
    k = len(islands)
    labels = [f"I{c + 1}" for c in range(k)]
    topo = build_topology(labels, [(labels[c], labels[c + 1], f"T{c + 1}") for c in range(k - 1)])
    zeros = np.zeros(k - 1)
    snap = PowerFlowSnapshot(
        zeros, zeros, zeros, zeros,
        v=np.ones(k), phi=np.zeros(k),
        pg=[isl["PG"] for isl in islands], qg=[isl["QG"] for isl in islands],
        pl=[isl["PL"] for isl in islands], ql=[isl["QL"] for isl in islands],
    )
    return topo, snap, Partition(tuple(range(k)))


def case1_partition(topo: GridTopology | None = None) -> Partition:
    """The frequency-similarity bus split on the 39-bus topology."""
    topo = topo or ieee39_topology()
    groups = reference_case("frequency")["bus_islands"]
    where = {lab: c for c, members in enumerate(groups) for lab in members}
    return Partition(tuple(where[lab] for lab in topo.labels))
