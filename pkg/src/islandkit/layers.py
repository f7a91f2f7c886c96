"""
Layer builders
--------------

The three similarity layers over the common bus vertex set: frequency
similarity (complete graph), active power flow and reactive power flow
(supported on physical branches only), and their assembly into a
multi-layer graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, ValidationError
from .grid_model import GridTopology, PowerFlowSnapshot
from .signal_analysis import SimilarityMatrix

LAYER_MODES = ("measured", "formula")
CLAMP_POLICIES = ("zero", "shift")


def _check_mode(mode: str, snap: PowerFlowSnapshot) -> None:
    if mode not in LAYER_MODES:
        raise ConfigurationError(f"unknown layer mode {mode!r}; expected one of {LAYER_MODES}")
    if mode == "formula" and not snap.has_admittance:
        raise ConfigurationError("formula-mode layers need admittance (G_/B_) columns in the bus table")


def _measured_layer(topo: GridTopology, from_flow, to_flow) -> np.ndarray:
    n = topo.n_buses
    w = np.zeros((n, n))
    for pos, br in enumerate(topo.branches):
        i, j = br.endpoints
        weight = (abs(from_flow[pos]) + abs(to_flow[pos])) / 2.0
        # parallel circuits between the same buses add up
        w[i, j] += weight
        w[j, i] = w[i, j]
    return w


def _formula_layer(topo: GridTopology, snap: PowerFlowSnapshot, coeff: np.ndarray, trig) -> np.ndarray:
    n = topo.n_buses
    w = np.zeros((n, n))
    for i, j in topo.bus_pairs():
        val = abs(snap.v[i]) * abs(snap.v[j]) * abs(coeff[i, j] * trig(snap.phi[i] - snap.phi[j]))
        w[i, j] = w[j, i] = val
    return w


def active_power_layer(snap: PowerFlowSnapshot, topo: GridTopology, mode: str = "measured") -> SimilarityMatrix:
    """Active power layer: ``(|P_ij| + |P_ji|) / 2`` per branch.

    ``mode="formula"`` evaluates ``|V_i||V_j||B_ij sin(phi_i - phi_j)|`` verbatim
    from bus voltages and the admittance matrix instead of measured flows.
    """
    _check_mode(mode, snap)
    if mode == "measured":
        w = _measured_layer(topo, snap.p_from, snap.p_to)
    else:
        w = _formula_layer(topo, snap, snap.b, np.sin)
    return SimilarityMatrix(w, "active")


def reactive_power_layer(snap: PowerFlowSnapshot, topo: GridTopology, mode: str = "measured") -> SimilarityMatrix:
    """Reactive power layer: ``(|Q_ij| + |Q_ji|) / 2`` per branch.

    ``mode="formula"`` evaluates ``|V_i||V_j||G_ij cos(phi_i - phi_j)|``.
    """
    _check_mode(mode, snap)
    if mode == "measured":
        w = _measured_layer(topo, snap.q_from, snap.q_to)
    else:
        w = _formula_layer(topo, snap, snap.g, np.cos)
    return SimilarityMatrix(w, "reactive")


def frequency_layer(corr: SimilarityMatrix, clamp: str = "zero") -> SimilarityMatrix:
    """Complete-graph layer from a pre-clamp correlation matrix.

    ``clamp="zero"`` keeps ``max(0, C_ij)`` so anti-correlated buses do not
    attract; ``clamp="shift"`` uses ``C_ij + 1``.
    """
    c = corr.raw if corr.raw is not None else corr.weights
    c = np.asarray(c, dtype=float)
    if clamp == "zero":
        w = np.maximum(c, 0.0)
    elif clamp == "shift":
        w = c + 1.0
    else:
        raise ConfigurationError(f"unknown clamp policy {clamp!r}; expected one of {CLAMP_POLICIES}")
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    return SimilarityMatrix(w, "frequency", raw=c, flags=corr.flags)


def normalize_layer(layer: SimilarityMatrix) -> SimilarityMatrix:
    top = float(layer.weights.max()) if layer.weights.size else 0.0
    if top <= 0:
        return layer
    return SimilarityMatrix(layer.weights / top, layer.kind, raw=layer.raw, flags=layer.flags)


def check_layer(w: np.ndarray, what: str = "layer") -> None:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError(f"{what} has non-finite entries")
    if not np.array_equal(w, w.T):
        raise ValidationError(f"{what} is not symmetric")
    if np.any(w < 0):
        raise ValidationError(f"{what} has negative weights")
    if np.any(np.diag(w) != 0):
        raise ValidationError(f"{what} has a nonzero diagonal")


@dataclass(frozen=True)
class MultiLayerGraph:
    layers: tuple[SimilarityMatrix, ...]

    @property
    def n(self) -> int:
        return self.layers[0].n

    @property
    def kinds(self) -> list[str]:
        return [layer.kind for layer in self.layers]

    def __len__(self) -> int:
        return len(self.layers)

    def layer(self, kind: str) -> SimilarityMatrix:
        for layer in self.layers:
            if layer.kind == kind:
                return layer
        raise ConfigurationError(f"graph has no {kind!r} layer (layers: {self.kinds})")


def assemble_multilayer(layers) -> MultiLayerGraph:
    layers = tuple(layers)
    if not layers:
        raise DimensionError("a multi-layer graph needs at least one layer")
    n = layers[0].n
    for k, layer in enumerate(layers):
        if layer.weights.shape != (n, n):
            raise DimensionError(
                f"layer {k} ({layer.kind}) has shape {layer.weights.shape}, expected {(n, n)}"
            )
        check_layer(layer.weights, f"layer {k} ({layer.kind})")
    return MultiLayerGraph(layers)
