"""
Coherency detection
-------------------

Weighted modularity and greedy agglomerative modularity clustering
(merge the pair with the largest modularity gain until no merge helps).
The cluster count it settles on sets k for the spectral stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraphError, ValidationError
from .signal_analysis import SimilarityMatrix


@dataclass(frozen=True)
class Partition:
    """Cluster id per bus; ids are contiguous ``0..k-1``."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(x) for x in self.assignment)
        object.__setattr__(self, "assignment", a)
        if not a:
            raise ValidationError("partition must cover at least one vertex")
        if sorted(set(a)) != list(range(max(a) + 1)):
            raise ValidationError(f"cluster ids must be contiguous from 0, got {sorted(set(a))}")

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Canonical relabelling: ids numbered by first appearance."""
        remap: dict = {}
        out = []
        for lab in labels:
            if lab not in remap:
                remap[lab] = len(remap)
            out.append(remap[lab])
        return cls(tuple(out))

    @property
    def k(self) -> int:
        return max(self.assignment) + 1

    @property
    def n(self) -> int:
        return len(self.assignment)

    def groups(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, c in enumerate(self.assignment):
            out[c].append(i)
        return out

    def as_array(self) -> np.ndarray:
        return np.array(self.assignment, dtype=int)


@dataclass
class CoherencyResult:
    partition: Partition
    modularity: float
    merge_history: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.partition.k

    def to_dict(self, labels=None) -> dict:
        groups = self.partition.groups()
        if labels is not None:
            groups = [[labels[i] for i in g] for g in groups]
        return {
            "k": self.k,
            "groups": groups,
            "Q": self.modularity,
            "merge_history": [[a, b, dq] for a, b, dq in self.merge_history],
        }


def _weights(layer) -> np.ndarray:
    w = layer.weights if isinstance(layer, SimilarityMatrix) else np.asarray(layer, dtype=float)
    if np.any(w < 0):
        raise ValidationError("modularity needs a nonnegative layer")
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    return w


def modularity_score(layer, partition) -> float:
    """Weighted modularity of ``partition`` on ``layer``.

    Per community: internal weight over ``2m`` minus the squared share of
    total degree. Sums are exactly rounded so a single community scores 0.
    """
    w = _weights(layer)
    assignment = partition.assignment if isinstance(partition, Partition) else tuple(partition)
    if len(assignment) != w.shape[0]:
        raise ValidationError("partition size does not match layer")
    two_m = math.fsum(w.ravel())
    if two_m <= 0:
        raise EmptyGraphError("modularity is undefined on a graph with zero total weight")
    members: dict[int, list[int]] = {}
    for i, c in enumerate(assignment):
        members.setdefault(c, []).append(i)
    q = 0.0
    for idx in members.values():
        internal = math.fsum(w[np.ix_(idx, idx)].ravel())
        degree = math.fsum(w[idx, :].ravel())
        q += internal / two_m - (degree / two_m) ** 2
    return q


def greedy_modularity_cluster(layer) -> CoherencyResult:
    """Agglomerative modularity maximisation from singletons.

    At each step the pair with the largest gain ``2 (e_ab - a_a a_b)`` is
    merged while that gain is positive. Ties go to the lowest first id, then
    the lowest second id; the surviving community keeps the lower id.
    """
    w = _weights(layer)
    n = w.shape[0]
    two_m = math.fsum(w.ravel())
    if two_m <= 0:
        raise EmptyGraphError("modularity is undefined on a graph with zero total weight")

    e = w / two_m  # inter-community weight fractions, one direction
    a = e.sum(axis=1)
    active = np.ones(n, dtype=bool)
    owner = np.arange(n)
    history: list[tuple[int, int, float]] = []
    upper = np.triu(np.ones((n, n), dtype=bool), 1)

    while active.sum() > 1:
        gain = 2.0 * (e - np.outer(a, a))
        mask = upper & active[:, None] & active[None, :]
        gain = np.where(mask, gain, -np.inf)
        flat = int(np.argmax(gain))
        best = gain.flat[flat]
        if not best > 0:
            break
        i, j = divmod(flat, n)
        history.append((int(i), int(j), float(best)))
        e[i, :] += e[j, :]
        e[:, i] += e[:, j]
        e[i, i] = 0.0
        e[j, :] = 0.0
        e[:, j] = 0.0
        a[i] += a[j]
        a[j] = 0.0
        active[j] = False
        owner[owner == j] = i

    partition = Partition.from_labels(owner)
    return CoherencyResult(partition, modularity_score(w, partition), history)


def detect_coherent_groups(layer: SimilarityMatrix) -> CoherencyResult:
    """Coherent bus groups (and hence the island count k) from one similarity layer."""
    return greedy_modularity_cluster(layer)
