"""
Islanding pipeline
------------------

Two-stage controlled islanding:

1. modularity clustering of a stage-I layer fixes the island count k;
2. each layer gives a normalized Laplacian and a k-dimensional embedding,
   the layers are merged through the modified Laplacian
   ``sum L_i - alpha sum U_i U_i^T``, and k-means on the row-normalized
   merged embedding assigns buses to islands.

Islands are then made physically connected, and the cut-set, power flow
disruption and generation/load balance are reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coherency import CoherencyResult, Partition, detect_coherent_groups
from .errors import ConfigurationError, EmptyGraphError, NonIslandingError, ValidationError
from .grid_model import Branch, GridTopology, PowerFlowSnapshot
from .layers import MultiLayerGraph, active_power_layer, assemble_multilayer, reactive_power_layer
from .oracle import boundary_weight
from .signal_analysis import SimilarityMatrix
from .spectral import (
    kmeans_cluster,
    modified_laplacian,
    normalized_laplacian,
    row_normalize,
    spectral_embedding,
)

# layers used by each case preset, and the layer stage I runs on
CASES = {
    1: (("frequency",), "frequency"),
    2: (("reactive",), "reactive"),
    3: (("active",), "active"),
    4: (("frequency", "active", "reactive"), "frequency"),
}


@dataclass(frozen=True)
class IslandingConfig:
    alpha: float = 0.5
    seed: int = 0
    restarts: int = 20
    k: int | None = None  # None: take k from stage I
    stage_one: str | None = None  # layer kind; None: first layer
    repair: bool = True
    case: int | None = None

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.k is not None and self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")


@dataclass
class IslandBalance:
    pg: float
    pl: float
    qg: float
    ql: float

    @property
    def dp(self) -> float:
        return self.pg - self.pl

    @property
    def dq(self) -> float:
        return self.qg - self.ql


@dataclass
class BalanceReport:
    islands: list[IslandBalance]

    @property
    def total_abs_dp(self) -> float:
        return math.fsum(abs(isl.dp) for isl in self.islands)

    @property
    def total_abs_dq(self) -> float:
        return math.fsum(abs(isl.dq) for isl in self.islands)

    def to_dict(self) -> dict:
        return {
            "islands": [
                {"PG_MW": i.pg, "PL_MW": i.pl, "QG_Mvar": i.qg, "QL_Mvar": i.ql, "dP_MW": i.dp, "dQ_Mvar": i.dq}
                for i in self.islands
            ],
            "sum_abs_dP_MW": self.total_abs_dp,
            "sum_abs_dQ_Mvar": self.total_abs_dq,
        }


@dataclass
class IslandingSolution:
    partition: Partition
    cut_set: list[Branch]
    active_disruption: float
    reactive_disruption: float
    balance: BalanceReport
    config: dict
    stage_one: CoherencyResult | None = None
    reassigned: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self, topo: GridTopology, snap: PowerFlowSnapshot | None = None) -> dict:
        labels = topo.labels
        cut = []
        for br in self.cut_set:
            entry = {"id": br.id, "from": br.from_bus.label, "to": br.to_bus.label}
            if snap is not None:
                pos = topo.branches.index(br)
                entry["P_MW"] = float(abs(snap.p_from[pos]) + abs(snap.p_to[pos])) / 2.0
                entry["Q_Mvar"] = float(abs(snap.q_from[pos]) + abs(snap.q_to[pos])) / 2.0
            cut.append(entry)
        out = {
            "k": self.partition.k,
            "assignment": {lab: c for lab, c in zip(labels, self.partition.assignment)},
            "islands": [[labels[i] for i in g] for g in self.partition.groups()],
            "cut_set": cut,
            "active_disruption_MW": self.active_disruption,
            "reactive_disruption_Mvar": self.reactive_disruption,
            "balance": self.balance.to_dict(),
            "reassigned_buses": [labels[i] for i in self.reassigned],
            "warnings": list(self.warnings),
            "config": dict(self.config),
        }
        if self.stage_one is not None:
            out["stage_one"] = self.stage_one.to_dict(labels)
        return out


def _assignment(p) -> tuple[int, ...]:
    return p.assignment if isinstance(p, Partition) else tuple(int(x) for x in p)


def cut_set(topo: GridTopology, partition) -> list[Branch]:
    """Branches whose endpoints fall in different clusters, sorted by id (numeric runs compared as numbers)."""
    a = _assignment(partition)
    if len(a) != topo.n_buses:
        raise ValidationError("partition does not cover the topology")
    cut = [br for br in topo.branches if a[br.from_bus.index] != a[br.to_bus.index]]
    return sorted(cut, key=lambda br: _natural_key(br.id))


def _natural_key(text: str):
    out = []
    num = ""
    for ch in text:
        if ch.isdigit():
            num += ch
            continue
        if num:
            out.append((0, int(num), ""))
            num = ""
        out.append((1, 0, ch))
    if num:
        out.append((0, int(num), ""))
    return out


def disruption_metrics(snap: PowerFlowSnapshot, topo: GridTopology, partition) -> tuple[float, float]:
    """Active (MW) and reactive (Mvar) flow carried by the cut branches, each ``(|x_ij| + |x_ji|)/2``."""
    a = _assignment(partition)
    p = boundary_weight(active_power_layer(snap, topo, "measured"), topo, a)
    q = boundary_weight(reactive_power_layer(snap, topo, "measured"), topo, a)
    return p, q


def balance_report(snap: PowerFlowSnapshot, partition) -> BalanceReport:
    a = np.array(_assignment(partition))
    if len(a) != len(snap.pg):
        raise ValidationError("partition does not match the snapshot bus count")
    islands = []
    for c in range(int(a.max()) + 1):
        m = a == c
        islands.append(
            IslandBalance(
                math.fsum(snap.pg[m]), math.fsum(snap.pl[m]), math.fsum(snap.qg[m]), math.fsum(snap.ql[m])
            )
        )
    return BalanceReport(islands)


def enforce_connectivity(
    topo: GridTopology, partition, repair_weights=None, max_rounds: int | None = None
) -> tuple[Partition, list[int]]:
    """Make every cluster induce a connected subgraph of the topology.

    Each cluster keeps its largest component (most buses, then largest
    internal repair weight, then lowest bus index). Every other fragment
    joins the neighbouring cluster with the largest total repair weight
    across their shared boundary (lowest cluster id on ties). Rounds repeat
    until nothing moves, at most ``N_B`` times. Returns the repaired
    partition and the indices of the buses that moved.
    """
    a = list(_assignment(partition))
    n = topo.n_buses
    if len(a) != n:
        raise ValidationError("partition does not cover the topology")
    if repair_weights is None:
        w = np.ones((n, n))
    else:
        w = repair_weights.weights if isinstance(repair_weights, SimilarityMatrix) else np.asarray(repair_weights)
    adj = topo.adjacency()
    rounds = n if max_rounds is None else max_rounds
    moved: set[int] = set()

    def internal_weight(comp):
        s = set(comp)
        return math.fsum(w[i, j] for i in comp for j in adj[i] if j in s and i < j)

    for _ in range(rounds):
        moves = []
        for c in sorted(set(a)):
            members = [i for i in range(n) if a[i] == c]
            comps = topo.components(members)
            if len(comps) <= 1:
                continue
            keep = min(comps, key=lambda comp: (-len(comp), -internal_weight(comp), comp[0]))
            for frag in comps:
                if frag is keep:
                    continue
                boundary: dict[int, float] = {}
                for i in frag:
                    for j in adj[i]:
                        if a[j] != c:
                            boundary[a[j]] = boundary.get(a[j], 0.0) + float(w[i, j])
                if not boundary:
                    continue
                target = min(boundary, key=lambda t: (-boundary[t], t))
                moves.append((frag, target))
        if not moves:
            break
        for frag, target in moves:
            for i in frag:
                a[i] = target
                moved.add(i)
    return Partition.from_labels(a), sorted(moved)


def _coherency_warnings(stage_one: CoherencyResult | None, final: Partition, labels) -> list[str]:
    if stage_one is None:
        return []
    out = []
    for g, members in enumerate(stage_one.partition.groups()):
        islands = sorted({final.assignment[i] for i in members})
        if len(islands) > 1:
            names = ", ".join(labels[i] for i in members)
            out.append(f"coherent group {g} ({names}) is split across islands {islands}")
    return out


def _stage_one_layer(graph: MultiLayerGraph, config: IslandingConfig) -> SimilarityMatrix:
    if config.stage_one is None:
        return graph.layers[0]
    return graph.layer(config.stage_one)


def _finish(
    labels_raw,
    topo: GridTopology,
    snap: PowerFlowSnapshot,
    config: IslandingConfig,
    stage_one: CoherencyResult | None,
    kinds,
    k: int,
) -> IslandingSolution:
    partition = Partition.from_labels(labels_raw)
    moved: list[int] = []
    if config.repair and partition.k > 1:
        repair = active_power_layer(snap, topo).weights + reactive_power_layer(snap, topo).weights
        partition, moved = enforce_connectivity(topo, partition, repair)
    p, q = disruption_metrics(snap, topo, partition)
    echo = asdict(config)
    echo.update(layers=list(kinds), k_used=k)
    return IslandingSolution(
        partition=partition,
        cut_set=cut_set(topo, partition),
        active_disruption=p,
        reactive_disruption=q,
        balance=balance_report(snap, partition),
        config=echo,
        stage_one=stage_one,
        reassigned=moved,
        warnings=_coherency_warnings(stage_one, partition, topo.labels),
    )


def _resolve_k(layer: SimilarityMatrix, n: int, config: IslandingConfig) -> tuple[int, CoherencyResult | None]:
    if config.k is None:
        stage_one = detect_coherent_groups(layer)
        k = stage_one.k
    else:
        k = int(config.k)
        try:
            stage_one = detect_coherent_groups(layer)
        except EmptyGraphError:
            stage_one = None
    if k >= n and n > 1:
        raise NonIslandingError(f"k={k} puts every bus in its own island")
    if k > n:
        raise NonIslandingError(f"k={k} exceeds the bus count {n}")
    return k, stage_one


def msci(
    graph: MultiLayerGraph, topo: GridTopology, snap: PowerFlowSnapshot, config: IslandingConfig | None = None
) -> IslandingSolution:
    """Multi-layer spectral clustering controlled islanding (both stages)."""
    config = config or IslandingConfig()
    n = topo.n_buses
    if graph.n != n:
        raise ValidationError(f"graph has {graph.n} vertices, topology has {n} buses")
    k, stage_one = _resolve_k(_stage_one_layer(graph, config), n, config)
    if k == 1:
        return _finish([0] * n, topo, snap, config, stage_one, graph.kinds, k)

    laps = [normalized_laplacian(layer) for layer in graph.layers]
    embs = [spectral_embedding(lap, k) for lap in laps]
    lm = modified_laplacian(laps, embs, config.alpha)
    u = spectral_embedding(lm, k)
    rows, _ = row_normalize(u)
    km = kmeans_cluster(rows, k, seed=config.seed, restarts=config.restarts)
    return _finish(km.partition.assignment, topo, snap, config, stage_one, graph.kinds, k)


def single_layer_islanding(
    layer: SimilarityMatrix,
    topo: GridTopology,
    snap: PowerFlowSnapshot,
    k: int | str | None = "auto",
    config: IslandingConfig | None = None,
) -> IslandingSolution:
    """One-layer islanding.

    With a single layer, ``L_1 - alpha U_1 U_1^T`` only lowers the k smallest
    eigenvalues of ``L_1`` by alpha, so its k-dimensional embedding is that of
    ``L_1``; the embedding is computed from ``L_1`` directly.
    """
    config = config or IslandingConfig()
    if k not in (None, "auto"):
        config = IslandingConfig(**{**asdict(config), "k": int(k)})
    graph = assemble_multilayer([layer])
    n = topo.n_buses
    k_used, stage_one = _resolve_k(layer, n, config)
    if k_used == 1:
        return _finish([0] * n, topo, snap, config, stage_one, graph.kinds, k_used)
    u = spectral_embedding(normalized_laplacian(layer), k_used)
    rows, _ = row_normalize(u)
    km = kmeans_cluster(rows, k_used, seed=config.seed, restarts=config.restarts)
    return _finish(km.partition.assignment, topo, snap, config, stage_one, graph.kinds, k_used)
