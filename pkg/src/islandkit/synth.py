"""
Synthetic scenarios
-------------------

Planted-group test grids: every group of buses swings at its own
oscillation frequency, branches inside a group carry large flows and the
few bridges between groups carry small ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coherency import Partition
from .errors import ValidationError
from .grid_model import (
    GridTopology,
    PowerFlowSnapshot,
    WaveformSet,
    build_topology,
    save_flow_snapshot,
    save_topology,
    save_waveforms,
)


@dataclass(frozen=True)
class SynthSpec:
    group_sizes: tuple[int, ...] = (4, 4, 4)
    freqs: tuple[float, ...] = (0.3, 0.5, 0.8)  # Hz, one per group
    phases: tuple[float, ...] | None = None  # rad; default spreads groups evenly
    amplitude: float = 0.2  # rad
    jitter: float = 0.05  # relative amplitude / absolute phase jitter per bus
    noise: float = 0.002  # rad, std of white noise on the angles
    duration: float = 10.0  # s
    dt: float = 0.01  # s
    intra_flow: tuple[float, float] = (100.0, 300.0)  # MW
    bridge_flow: tuple[float, float] = (5.0, 20.0)  # MW
    bridges: tuple[tuple[int, int], ...] | None = None  # group pairs; default chains groups
    seed: int = 0

    def __post_init__(self):
        g = len(self.group_sizes)
        if g < 1 or any(s < 1 for s in self.group_sizes):
            raise ValidationError("every group needs at least one bus")
        if len(self.freqs) != g:
            raise ValidationError(f"{g} groups need {g} frequencies, got {len(self.freqs)}")
        fs = sorted(self.freqs)
        if any(b - a < 0.1 - 1e-12 for a, b in zip(fs, fs[1:])):
            raise ValidationError("group frequencies must differ by at least 0.1 Hz")
        if self.phases is not None and len(self.phases) != g:
            raise ValidationError("one phase offset per group required")
        if not 0 <= self.noise < self.amplitude:
            raise ValidationError("noise amplitude must be below the signal amplitude")
        if not (self.dt > 0 and self.duration > 2 * self.dt):
            raise ValidationError("need dt > 0 and at least 3 samples")
        if self.bridges is not None:
            for a, b in self.bridges:
                if not (0 <= a < g and 0 <= b < g and a != b):
                    raise ValidationError(f"bridge {(a, b)} does not join two distinct groups")

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)


@dataclass
class Scenario:
    topology: GridTopology
    snapshot: PowerFlowSnapshot
    waveforms: WaveformSet
    groups: Partition
    spec: SynthSpec = field(repr=False)

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "topology": out / "topology.json",
            "flows": out / "flows.csv",
            "buses": out / "flows_buses.csv",
            "waveforms": out / "waveforms.csv",
            "groups": out / "groups.json",
        }
        save_topology(self.topology, paths["topology"])
        save_flow_snapshot(self.snapshot, self.topology, paths["flows"], paths["buses"])
        save_waveforms(self.waveforms, paths["waveforms"])
        groups = [[self.topology.labels[i] for i in g] for g in self.groups.groups()]
        paths["groups"].write_text(json.dumps({"islands": groups}, indent=2) + "\n", encoding="utf-8")
        return paths


def _waveforms(spec: SynthSpec, labels, assignment, rng: np.random.Generator) -> WaveformSet:
    n_samples = int(round(spec.duration / spec.dt)) + 1
    t = spec.dt * np.arange(n_samples)
    g = spec.n_groups
    phases = spec.phases if spec.phases is not None else [2 * np.pi * c / g for c in range(g)]
    theta = np.empty((len(labels), n_samples))
    for i, c in enumerate(assignment):
        amp = spec.amplitude * (1.0 + spec.jitter * rng.uniform(-1, 1))
        ph = phases[c] + spec.jitter * rng.uniform(-1, 1)
        theta[i] = amp * np.sin(2 * np.pi * spec.freqs[c] * t + ph)
    if spec.noise > 0:
        theta += rng.normal(0.0, spec.noise, size=theta.shape)
    return WaveformSet(tuple(labels), spec.dt, theta)


def _snapshot(spec: SynthSpec, topo: GridTopology, assignment, rng: np.random.Generator) -> PowerFlowSnapshot:
    n_br = len(topo.branches)
    pf, pt, qf, qt = (np.empty(n_br) for _ in range(4))
    for pos, br in enumerate(topo.branches):
        i, j = br.endpoints
        lo, hi = spec.intra_flow if assignment[i] == assignment[j] else spec.bridge_flow
        p = rng.uniform(lo, hi) * rng.choice([-1.0, 1.0])
        q = p * rng.uniform(0.2, 0.5)
        loss = rng.uniform(0.0, 0.02)
        pf[pos], pt[pos] = p, -p * (1 - loss)
        qf[pos], qt[pos] = q, -q * (1 - 2 * loss)
    n = topo.n_buses
    first = {}
    for i, c in enumerate(assignment):
        first.setdefault(c, i)
    is_gen = np.zeros(n, dtype=bool)
    is_gen[list(first.values())] = True
    pg = np.where(is_gen, np.round(rng.uniform(300, 900, n)), 0.0)
    qg = np.where(is_gen, np.round(rng.uniform(50, 300, n)), 0.0)
    pl = np.round(rng.uniform(20, 200, n))
    ql = np.round(rng.uniform(5, 60, n))
    return PowerFlowSnapshot(
        pf, pt, qf, qt,
        v=1.0 + rng.uniform(-0.05, 0.05, n), phi=rng.uniform(-0.3, 0.3, n),
        pg=pg, qg=qg, pl=pl, ql=ql,
    )


def synth_scenario(spec: SynthSpec) -> Scenario:
    """Ring-connected groups joined by low-flow bridges (consecutive groups by default)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0x5EED]))
    labels, assignment, members = [], [], []
    for c, size in enumerate(spec.group_sizes):
        ids = []
        for _ in range(size):
            ids.append(len(labels))
            labels.append(f"B{len(labels) + 1}")
            assignment.append(c)
        members.append(ids)
    branches = []
    for ids in members:
        ring = list(zip(ids, ids[1:]))
        if len(ids) >= 3:
            ring.append((ids[-1], ids[0]))
        branches += ring
    bridges = spec.bridges if spec.bridges is not None else [(c, c + 1) for c in range(spec.n_groups - 1)]
    for a, b in bridges:
        branches.append((members[a][-1], members[b][0]))
    topo = build_topology(
        labels, [(labels[i], labels[j], f"L{k + 1}") for k, (i, j) in enumerate(branches)]
    )
    snap = _snapshot(spec, topo, assignment, rng)
    waves = _waveforms(spec, labels, assignment, rng)
    return Scenario(topo, snap, waves, Partition.from_labels(assignment), spec)


def synth_on_topology(topo: GridTopology, groups: Partition, spec: SynthSpec) -> Scenario:
    """Planted scenario on an existing network; branches crossing groups act as bridges."""
    if groups.n != topo.n_buses:
        raise ValidationError("group assignment must cover the topology")
    if groups.k != spec.n_groups:
        raise ValidationError(f"spec describes {spec.n_groups} groups, assignment has {groups.k}")
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0x5EED]))
    snap = _snapshot(spec, topo, groups.assignment, rng)
    waves = _waveforms(spec, topo.labels, groups.assignment, rng)
    return Scenario(topo, snap, waves, groups, spec)


def ieee39_scenario(seed: int = 0, noise: float = 0.002) -> Scenario:
    """Two planted groups on the 39-bus network, split as the frequency-similarity case."""
    from .reference import case1_partition, ieee39_topology

    topo = ieee39_topology()
    groups = case1_partition(topo)
    sizes = tuple(len(g) for g in groups.groups())
    spec = SynthSpec(group_sizes=sizes, freqs=(0.4, 0.7), noise=noise, seed=seed)
    return synth_on_topology(topo, groups, spec)
