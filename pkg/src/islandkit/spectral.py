"""
Spectral engine
---------------

Normalized Laplacians, spectral embeddings, the squared projection distance
between subspaces, the modified Laplacian that merges several layers, row
normalization and seeded k-means.

The normalized Laplacian is the symmetric form ``D^-1/2 (D - W) D^-1/2``;
it is the one whose spectrum lies in [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coherency import Partition
from .errors import DimensionError, EigenSolverError, OrthonormalityError, ValidationError
from .signal_analysis import SimilarityMatrix

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class LaplacianMatrix:
    matrix: np.ndarray
    kind: str = "normalized"
    degrees: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EmbeddingMatrix:
    vectors: np.ndarray  # (n, k), orthonormal columns
    eigenvalues: np.ndarray  # ascending

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


def normalized_laplacian(w) -> LaplacianMatrix:
    """``I - D^-1/2 W D^-1/2``; isolated vertices get ``L_ii = 1`` and zero off-diagonals."""
    w = w.weights if isinstance(w, SimilarityMatrix) else np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"weight matrix must be square, got {w.shape}")
    d = w.sum(axis=1)
    inv_sqrt = np.zeros_like(d)
    pos = d > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(d[pos])
    lap = np.eye(len(d)) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    lap = 0.5 * (lap + lap.T)
    return LaplacianMatrix(lap, "normalized", d)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive (first index on ties)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def spectral_embedding(lap, k: int) -> EmbeddingMatrix:
    """Eigenvectors of the ``k`` smallest eigenvalues, with a deterministic sign convention."""
    m = lap.matrix if isinstance(lap, LaplacianMatrix) else np.asarray(lap, dtype=float)
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"embedding dimension k={k} must lie in [1, {n}]")
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"eigendecomposition failed: {exc}",
            shape=m.shape,
            asymmetry=float(np.max(np.abs(m - m.T))),
            finite=bool(np.all(np.isfinite(m))),
        ) from exc
    return EmbeddingMatrix(_fix_signs(vecs[:, :k]), vals[:k])


def _check_orthonormal(u: np.ndarray, what: str) -> None:
    err = np.max(np.abs(u.T @ u - np.eye(u.shape[1])))
    if err > ORTHONORMAL_TOL:
        raise OrthonormalityError(f"{what} columns are not orthonormal (max |U^T U - I| = {err:.3g})")


def _vectors(u) -> np.ndarray:
    return u.vectors if isinstance(u, EmbeddingMatrix) else np.asarray(u, dtype=float)


def projection_distance(u, subspaces) -> float:
    """Sum over subspaces of ``k - tr(U U^T U_i U_i^T)``."""
    u = _vectors(u)
    _check_orthonormal(u, "target subspace")
    k = u.shape[1]
    total = 0.0
    for n_sub, ui in enumerate(subspaces):
        ui = _vectors(ui)
        if ui.shape != u.shape:
            raise DimensionError(f"subspace {n_sub} has shape {ui.shape}, expected {u.shape}")
        _check_orthonormal(ui, f"subspace {n_sub}")
        # tr(U U^T Ui Ui^T) = ||U^T Ui||_F^2
        total += k - float(np.sum((u.T @ ui) ** 2))
    return total


def modified_laplacian(laplacians, embeddings, alpha: float) -> LaplacianMatrix:
    """``sum_i L_i - alpha * sum_i U_i U_i^T``; symmetric, possibly indefinite."""
    if alpha < 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    mats = [lap.matrix if isinstance(lap, LaplacianMatrix) else np.asarray(lap, dtype=float) for lap in laplacians]
    vecs = [_vectors(u) for u in embeddings]
    if not mats or len(mats) != len(vecs):
        raise DimensionError("need one embedding per Laplacian and at least one layer")
    n = mats[0].shape[0]
    for m, u in zip(mats, vecs):
        if m.shape != (n, n) or u.shape[0] != n:
            raise DimensionError("Laplacians and embeddings must share the vertex count")
    total = np.zeros((n, n))
    for m in mats:
        total += m
    proj = np.zeros((n, n))
    for u in vecs:
        proj += u @ u.T
    out = total - alpha * proj
    out = 0.5 * (out + out.T)
    return LaplacianMatrix(out, "modified")


def row_normalize(u, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm rows. Returns ``(normalized, zero_rows)``; zero rows stay zero."""
    u = _vectors(u)
    norms = np.linalg.norm(u, axis=1)
    zero = norms < tol
    out = np.zeros_like(u)
    out[~zero] = u[~zero] / norms[~zero, None]
    return out, zero


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass
class KMeansResult:
    partition: Partition
    inertia: float
    centroids: np.ndarray
    restart: int
    inertia_history: list[list[float]] = field(default_factory=list)


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.sum((x[:, None, :] - c[None, :, :]) ** 2, axis=2)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            probs = closest / total
        else:
            # fewer distinct points than k: pick among unused indices
            probs = np.ones(n)
            probs[chosen] = 0.0
            probs /= probs.sum()
        nxt = int(rng.choice(n, p=probs))
        chosen.append(nxt)
        closest = np.minimum(closest, np.sum((x - x[nxt]) ** 2, axis=1))
    return x[chosen].copy()


def _lloyd(x, centroids, max_iter, tol):
    k = centroids.shape[0]
    history = []
    labels = np.zeros(x.shape[0], dtype=int)
    for _ in range(max_iter):
        d = _sq_dists(x, centroids)
        labels = np.argmin(d, axis=1)
        history.append(float(d[np.arange(len(x)), labels].sum()))
        new = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c]:
                new[c] = x[labels == c].mean(axis=0)
        for c in np.flatnonzero(counts == 0):
            # empty cluster: move it onto the point worst served by its centroid
            d_own = np.sum((x - new[labels]) ** 2, axis=1)
            far = int(np.argmax(d_own))
            new[c] = x[far]
            labels[far] = c
        shift = float(np.max(np.linalg.norm(new - centroids, axis=1)))
        centroids = new
        if shift < tol:
            break
    d = _sq_dists(x, centroids)
    labels = _fill_empty(d, np.argmin(d, axis=1), k)
    inertia = float(d[np.arange(len(x)), labels].sum())
    history.append(inertia)
    return labels, centroids, inertia, history


def _fill_empty(d: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    # coincident points can leave a cluster empty; hand it the costliest point of a shared cluster
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        cost = np.where(counts[labels] > 1, d[np.arange(len(labels)), labels], -np.inf)
        labels[int(np.argmax(cost))] = c
    return labels


def kmeans_cluster(
    points,
    k: int,
    seed: int = 0,
    restarts: int = 20,
    max_iter: int = 300,
    tol: float = 1e-9,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` runs.

    Restart ``r`` draws from ``SeedSequence([seed, r])`` so results depend
    only on ``seed``. Ties in inertia go to the earliest restart.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} must lie in [1, {n}]")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    best = None
    histories = []
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        centroids = _kmeans_pp(x, k, rng)
        labels, centroids, inertia, history = _lloyd(x, centroids, max_iter, tol)
        histories.append(history)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia, r)
    labels, centroids, inertia, r = best
    part = Partition.from_labels(labels.tolist())
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    return KMeansResult(part, inertia, centroids[order], r, histories)
