"""Controlled islanding of power grids by multi-layer spectral clustering."""

from .coherency import CoherencyResult, Partition, detect_coherent_groups, greedy_modularity_cluster, modularity_score
from .errors import IslandkitError
from .grid_model import (
    Branch,
    Bus,
    GridTopology,
    PowerFlowSnapshot,
    WaveformSet,
    load_flow_snapshot,
    load_topology,
    load_waveforms,
    validate_snapshot,
)
from .layers import (
    MultiLayerGraph,
    active_power_layer,
    assemble_multilayer,
    frequency_layer,
    reactive_power_layer,
)
from .oracle import exact_max_modularity, exact_min_disruption
from .pipeline import (
    BalanceReport,
    IslandingConfig,
    IslandingSolution,
    balance_report,
    cut_set,
    disruption_metrics,
    enforce_connectivity,
    msci,
    single_layer_islanding,
)
from .signal_analysis import (
    SimilarityMatrix,
    angular_velocity,
    correlation_matrix,
    dft_spectrum,
    dissimilarity_index,
)
from .spectral import (
    kmeans_cluster,
    modified_laplacian,
    normalized_laplacian,
    projection_distance,
    row_normalize,
    spectral_embedding,
)

__version__ = "0.1.0"
