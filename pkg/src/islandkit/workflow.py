"""File-to-result runs shared by the CLI subcommands."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from .coherency import Partition, detect_coherent_groups
from .config import RunConfig
from .errors import ConfigurationError, MissingRecordError, ParseError, ValidationError
from .grid_model import (
    GridTopology,
    PowerFlowSnapshot,
    WaveformSet,
    load_flow_snapshot,
    load_topology,
    load_waveforms,
)
from .layers import (
    MultiLayerGraph,
    active_power_layer,
    assemble_multilayer,
    frequency_layer,
    normalize_layer,
    reactive_power_layer,
)
from .pipeline import balance_report, cut_set, disruption_metrics, msci, single_layer_islanding
from .signal_analysis import SimilarityMatrix, angular_velocity, correlation_matrix, dft_spectrum


def frequency_similarity(waves: WaveformSet, run: RunConfig) -> SimilarityMatrix:
    spec = dft_spectrum(angular_velocity(waves), run.band, window=run.window)
    return frequency_layer(correlation_matrix(spec), run.clamp)


def build_layer(kind: str, run: RunConfig, topo: GridTopology, snap=None, waves=None) -> SimilarityMatrix:
    if kind == "frequency":
        if waves is None:
            raise ConfigurationError("the frequency layer needs --waveforms")
        layer = frequency_similarity(waves.reorder(topo.labels), run)
    elif kind in ("active", "reactive"):
        if snap is None:
            raise ConfigurationError(f"the {kind} layer needs --flows")
        build = active_power_layer if kind == "active" else reactive_power_layer
        layer = build(snap, topo, run.layer_mode)
    else:
        raise ConfigurationError(f"unknown layer kind {kind!r}")
    return normalize_layer(layer) if run.normalize else layer


def build_graph(run: RunConfig, topo: GridTopology, snap=None, waves=None) -> MultiLayerGraph:
    kinds = list(run.layer_kinds)
    layers = [build_layer(kind, run, topo, snap, waves) for kind in kinds]
    if run.stage_one_kind not in kinds:
        # stage I on a layer that does not take part in stage II
        layers.append(build_layer(run.stage_one_kind, run, topo, snap, waves))
    return assemble_multilayer(layers)


def load_inputs(topology=None, flows=None, buses=None, waveforms=None):
    topo = load_topology(topology) if topology else None
    snap = load_flow_snapshot(flows, topo, buses) if flows and topo is not None else None
    waves = load_waveforms(waveforms) if waveforms else None
    return topo, snap, waves


def run_island(run: RunConfig, topo: GridTopology, snap: PowerFlowSnapshot, waves=None) -> dict:
    graph = build_graph(run, topo, snap, waves)
    cfg = run.islanding()
    n_stage = len(run.layer_kinds)
    if n_stage == 1 and len(graph) == 1:
        sol = single_layer_islanding(graph.layers[0], topo, snap, k=run.k, config=cfg)
    else:
        stage_graph = MultiLayerGraph(graph.layers[:n_stage])
        if len(graph) > n_stage:
            sol = _msci_external_stage_one(graph, n_stage, topo, snap, cfg)
        else:
            sol = msci(stage_graph, topo, snap, cfg)
    out = sol.to_dict(topo, snap)
    out["config"] = {**run.echo(), "k_used": sol.config["k_used"]}
    return out


def _msci_external_stage_one(graph, n_stage, topo, snap, cfg):
    # k comes from the extra trailing layer; stage II sees only the selected layers
    stage = detect_coherent_groups(graph.layers[-1])
    k = cfg.k if cfg.k is not None else stage.k
    sol = msci(MultiLayerGraph(graph.layers[:n_stage]), topo, snap, replace(cfg, k=k, stage_one=None))
    sol.stage_one = stage
    return sol


def run_coherency(run: RunConfig, topo, snap, waves) -> dict:
    if topo is None:
        if waves is None:
            raise ConfigurationError("coherency needs --waveforms (or --topology with --flows)")
        labels = list(waves.labels)
        layer = frequency_similarity(waves, run)
    else:
        labels = topo.labels
        layer = build_layer(run.stage_one_kind, run, topo, snap, waves)
    res = detect_coherent_groups(layer)
    out = res.to_dict(labels)
    out["layer"] = layer.kind
    if layer.flags:
        out["zero_variance_buses"] = [labels[i] for i in layer.flags]
    return out


def read_assignment(path, topo: GridTopology) -> Partition:
    """Assignment JSON: ``{"assignment": {bus: island}}`` or ``{"islands": [[bus, ...], ...]}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if "islands" in doc:
        where = {}
        for c, members in enumerate(doc["islands"]):
            for lab in members:
                if lab in where:
                    raise ValidationError(f"bus {lab!r} listed in two islands")
                where[lab] = c
    elif "assignment" in doc:
        where = dict(doc["assignment"])
    else:
        raise ParseError(f"{path}: expected an 'assignment' or 'islands' key")
    unknown = set(where) - set(topo.labels)
    if unknown:
        raise ValidationError(f"assignment names unknown buses {sorted(unknown)}")
    missing = [lab for lab in topo.labels if lab not in where]
    if missing:
        raise MissingRecordError(f"assignment misses buses {missing}")
    return Partition.from_labels([where[lab] for lab in topo.labels])


def run_evaluate(topo: GridTopology, snap: PowerFlowSnapshot, partition: Partition) -> dict:
    p, q = disruption_metrics(snap, topo, partition)
    labels = topo.labels
    return {
        "k": partition.k,
        "islands": [[labels[i] for i in g] for g in partition.groups()],
        "cut_set": [
            {"id": br.id, "from": br.from_bus.label, "to": br.to_bus.label} for br in cut_set(topo, partition)
        ],
        "active_disruption_MW": p,
        "reactive_disruption_Mvar": q,
        "balance": balance_report(snap, partition).to_dict(),
        "connected_islands": all(len(topo.components(g)) == 1 for g in partition.groups()),
    }
