"""
Exhaustive oracles
------------------

Brute-force optimisers for small graphs: the minimum boundary-weight
k-partition (optionally restricted to connected clusters) and the
maximum-modularity partition over all set partitions.

Partitions are enumerated as restricted growth strings, which is exactly one
canonical labelling per unlabeled partition, so the enumeration sizes are
Stirling numbers S(n, k) and Bell numbers B(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coherency import Partition, modularity_score
from .errors import EmptyGraphError, InfeasibleError, SizeLimitError, ValidationError
from .grid_model import GridTopology
from .signal_analysis import SimilarityMatrix

# objective values closer than this are treated as ties (first canonical wins)
TIE_TOL = 1e-12


@dataclass
class OracleResult:
    partition: Partition
    objective: float
    evaluated: int
    space: str

    def to_dict(self, labels=None) -> dict:
        groups = self.partition.groups()
        if labels is not None:
            groups = [[labels[i] for i in g] for g in groups]
        return {
            "objective": self.objective,
            "k": self.partition.k,
            "groups": groups,
            "assignment": list(self.partition.assignment),
            "evaluated": self.evaluated,
            "space": self.space,
        }


def restricted_growth_strings(n: int, k: int | None = None):
    """Yield every set partition of ``n`` items as a tuple of block ids.

    With ``k`` given only partitions into exactly ``k`` blocks are produced.
    Order is lexicographic.
    """
    if n == 0:
        if k in (None, 0):
            yield ()
        return
    a = [0] * n

    def rec(pos: int, used: int):
        if pos == n:
            if k is None or used == k:
                yield tuple(a)
            return
        remaining = n - pos
        top = used if k is None else min(used, k - 1)
        for b in range(top + 1):
            new_used = max(used, b + 1)
            if k is not None and new_used + remaining - 1 < k:
                continue
            a[pos] = b
            yield from rec(pos + 1, new_used)

    a[0] = 0
    yield from rec(1, 1)


@lru_cache(maxsize=None)
def _rgs_array(n: int, k: int | None) -> np.ndarray:
    rows = list(restricted_growth_strings(n, k))
    return np.array(rows, dtype=np.int8).reshape(len(rows), n)


def stirling2(n: int, k: int) -> int:
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def bell(n: int) -> int:
    return sum(stirling2(n, k) for k in range(n + 1))


def _layer(layer) -> np.ndarray:
    return layer.weights if isinstance(layer, SimilarityMatrix) else np.asarray(layer, dtype=float)


def cut_pairs(topo: GridTopology, assignment) -> list[tuple[int, int]]:
    return [(i, j) for i, j in topo.bus_pairs() if assignment[i] != assignment[j]]


def boundary_weight(layer, topo: GridTopology, assignment) -> float:
    """Exactly rounded sum of layer weights over bus pairs joined by a cut branch."""
    w = _layer(layer)
    return math.fsum(w[i, j] for i, j in cut_pairs(topo, assignment))


def clusters_connected(topo: GridTopology, assignment) -> bool:
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(assignment):
        groups.setdefault(c, []).append(i)
    return all(len(topo.components(members)) == 1 for members in groups.values())


def exact_min_disruption(
    layer,
    topo: GridTopology,
    k: int,
    max_nodes: int = 12,
    connected: bool = True,
) -> OracleResult:
    """Minimum boundary-weight partition into exactly ``k`` clusters."""
    w = _layer(layer)
    n = topo.n_buses
    if w.shape != (n, n):
        raise ValidationError(f"layer shape {w.shape} does not match {n} buses")
    if n > max_nodes:
        raise SizeLimitError(f"{n} buses exceeds the oracle limit of {max_nodes}")
    if not 2 <= k <= n:
        raise ValidationError(f"k={k} must lie in [2, {n}]")

    cands = _rgs_array(n, k)
    pairs = topo.bus_pairs()
    if pairs:
        u = np.array([p[0] for p in pairs])
        v = np.array([p[1] for p in pairs])
        pw = w[u, v]
        scores = (cands[:, u] != cands[:, v]).astype(float) @ pw
    else:
        scores = np.zeros(len(cands))
    order = np.argsort(scores, kind="stable")

    best = None
    for idx in order:
        if best is not None and scores[idx] > scores[best] + TIE_TOL:
            break
        a = cands[idx]
        if connected and not clusters_connected(topo, a):
            continue
        if best is None or idx < best:
            best = idx
    if best is None:
        raise InfeasibleError(f"no partition into {k} connected clusters exists")
    part = Partition(tuple(int(x) for x in cands[best]))
    space = f"S({n},{k}) = {len(cands)} canonical {k}-partitions" + (", connected only" if connected else "")
    return OracleResult(part, boundary_weight(w, topo, part.assignment), len(cands), space)


def exact_max_modularity(layer, max_nodes: int = 10) -> OracleResult:
    """Maximum-modularity partition over all set partitions (any k)."""
    w = _layer(layer).copy()
    np.fill_diagonal(w, 0.0)
    n = w.shape[0]
    if n > max_nodes:
        raise SizeLimitError(f"{n} vertices exceeds the oracle limit of {max_nodes}")
    two_m = math.fsum(w.ravel())
    if two_m <= 0:
        raise EmptyGraphError("modularity is undefined on a graph with zero total weight")

    d = w.sum(axis=1)
    b = w - np.outer(d, d) / two_m
    cands = _rgs_array(n, None)
    q = np.empty(len(cands))
    chunk = 4096
    for s in range(0, len(cands), chunk):
        c = cands[s : s + chunk]
        same = c[:, :, None] == c[:, None, :]
        q[s : s + chunk] = np.einsum("pij,ij->p", same, b) / two_m
    top = q.max()
    best = int(np.flatnonzero(q >= top - TIE_TOL)[0])
    part = Partition(tuple(int(x) for x in cands[best]))
    return OracleResult(part, modularity_score(w, part), len(cands), f"B({n}) = {len(cands)} set partitions")
