"""Planar feature embeddings.

Every embedder returns coordinates inside the unit square: the raw
configuration is translated, scaled uniformly by its larger axis range, and
centered.  Uniform scaling keeps relative pairwise distances intact, which
the downstream refinement stages rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, dijkstra
from scipy.spatial.distance import pdist, squareform

from .distances import DistanceMatrix
from .errors import ConfigError, DataError, NumericError

__all__ = [
    "Embedding2D",
    "symmetric_eigh",
    "rescale_unit",
    "mds_embed",
    "isomap_embed",
    "lle_embed",
    "le_embed",
    "pca_coords",
    "random_embed",
]


@dataclass
class Embedding2D:
    """(p, 2) planar coordinates in [0, 1]^2 with one label per point."""

    coords: np.ndarray
    labels: list[str]

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise DataError("coords must be a (p, 2) matrix")
        if len(self.labels) != self.coords.shape[0]:
            raise DataError(
                f"{len(self.labels)} labels for {self.coords.shape[0]} points"
            )

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    def copy(self) -> "Embedding2D":
        return Embedding2D(self.coords.copy(), list(self.labels))

    def distances(self) -> np.ndarray:
        """Condensed pairwise Euclidean distances (pdist order)."""
        return pdist(self.coords)


def symmetric_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Eigenvector signs are fixed deterministically: the largest-magnitude
    component of each vector is made positive (ties to the lowest index).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError("expected a square matrix")
    if not np.allclose(m, m.T, atol=1e-10):
        raise DataError("expected a symmetric matrix")
    vals, vecs = np.linalg.eigh(m)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    for j in range(vecs.shape[1]):
        lead = np.argmax(np.abs(vecs[:, j]))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def rescale_unit(coords: np.ndarray) -> np.ndarray:
    """Fit a configuration into [0, 1]^2 without distorting its shape.

    Translates to the origin, divides both axes by the larger axis range,
    then centers each axis.  A degenerate (single-point) configuration maps
    to the center of the square.
    """
    coords = np.asarray(coords, dtype=float)
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo
    scale = span.max()
    if scale == 0:
        return np.full_like(coords, 0.5)
    out = (coords - lo) / scale
    out += (1.0 - span / scale) / 2.0
    return out


def _check_size(d: DistanceMatrix) -> None:
    if d.size < 3:
        raise DataError(f"need at least 3 points to embed, got {d.size}")


def mds_embed(d: DistanceMatrix) -> Embedding2D:
    """Classical (Torgerson) scaling to two dimensions.

    Double-centers the squared distances and keeps the two leading
    eigenpairs, negative eigenvalues clamped to zero.  Raises when the
    leading eigenvalue vanishes (all points coincide).
    """
    _check_size(d)
    coords = _classical_mds(d.values)
    return Embedding2D(rescale_unit(coords), list(d.labels))


def _classical_mds(dist: np.ndarray) -> np.ndarray:
    """Raw Torgerson coordinates before unit-square rescaling."""
    p = dist.shape[0]
    sq = dist * dist
    j = np.eye(p) - np.full((p, p), 1.0 / p)
    b = -0.5 * (j @ sq @ j)
    vals, vecs = symmetric_eigh(b)
    tol = 1e-12 * max(1.0, float(np.abs(dist).max()) ** 2)
    if vals[0] <= tol:
        raise NumericError("degenerate configuration: all points coincide")
    top = np.clip(vals[:2], 0.0, None)
    return vecs[:, :2] * np.sqrt(top)


def _knn_edges(dist: np.ndarray, k: int) -> np.ndarray:
    """Boolean symmetric adjacency: each node joined to its k nearest
    others (ties to the lower index), then the union taken."""
    p = dist.shape[0]
    if not 1 <= k <= p - 1:
        raise ConfigError(f"k must be in [1, {p - 1}], got {k}")
    adj = np.zeros((p, p), dtype=bool)
    for i in range(p):
        order = np.argsort(dist[i], kind="stable")
        picked = [j for j in order if j != i][:k]
        adj[i, picked] = True
    return adj | adj.T


def _require_connected(adj: np.ndarray) -> None:
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise DataError(
            f"k-NN graph has {ncomp} components; increase k or clean the data"
        )


def isomap_embed(d: DistanceMatrix, k: int = 10) -> Embedding2D:
    """Classical scaling of k-NN-graph shortest-path distances."""
    _check_size(d)
    adj = _knn_edges(d.values, k)
    _require_connected(adj)
    weights = np.where(adj, d.values, np.inf)
    np.fill_diagonal(weights, 0.0)
    graph = csgraph_from_dense(weights, null_value=np.inf)
    geo = dijkstra(graph, directed=False)
    if not np.isfinite(geo).all():
        raise DataError("k-NN graph is not connected")
    geo = 0.5 * (geo + geo.T)
    coords = _classical_mds(geo)
    return Embedding2D(rescale_unit(coords), list(d.labels))


def _lle_weights(
    points: np.ndarray, k: int, regularization: float, names: list[str]
) -> np.ndarray:
    """Row-stochastic reconstruction weights: each point expressed as a
    convex-free combination of its k nearest neighbors."""
    p = points.shape[0]
    dist = squareform(pdist(points))
    w = np.zeros((p, p))
    for i in range(p):
        order = np.argsort(dist[i], kind="stable")
        nbrs = np.array([j for j in order if j != i][:k])
        z = points[nbrs] - points[i]
        gram = z @ z.T
        if regularization > 0:
            trace = np.trace(gram)
            bump = regularization * (trace / k if trace > 0 else 1.0)
            gram = gram + bump * np.eye(k)
        elif np.linalg.cond(gram) > 1e12:
            raise NumericError(
                f"singular local Gram at feature {names[i]!r}; "
                "set regularization > 0"
            )
        try:
            wi = np.linalg.solve(gram, np.ones(k))
        except np.linalg.LinAlgError as exc:
            raise NumericError(
                f"singular local Gram at feature {names[i]!r}; "
                "set regularization > 0"
            ) from exc
        total = wi.sum()
        if total == 0 or not np.isfinite(total):
            raise NumericError("reconstruction weights do not normalize")
        w[i, nbrs] = wi / total
    return w


def lle_embed(t, k: int = 10, regularization: float = 1e-3) -> Embedding2D:
    """Locally linear embedding of the feature columns.

    Each feature vector (a column of the table, one entry per sample) is
    reconstructed from its k nearest feature vectors; the embedding keeps
    those reconstruction weights.  With regularization 0 a singular local
    Gram matrix raises instead of producing garbage.
    """
    if t.missing_mask.any():
        raise DataError("lle_embed requires a table with no missing values")
    points = t.values.T  # (p, n) feature vectors
    p = points.shape[0]
    if p < 3:
        raise DataError(f"need at least 3 features to embed, got {p}")
    if not 1 <= k <= p - 1:
        raise ConfigError(f"k must be in [1, {p - 1}], got {k}")
    if regularization < 0:
        raise ConfigError("regularization must be >= 0")
    w = _lle_weights(points, k, regularization, list(t.feature_names))
    m = np.eye(p) - w
    m = m.T @ m
    vals, vecs = symmetric_eigh(m)
    # ascending order: skip the trivial constant vector, keep the next two
    coords = vecs[:, ::-1][:, 1:3]
    return Embedding2D(rescale_unit(coords), list(t.feature_names))


def le_embed(
    d: DistanceMatrix, k: int = 10, heat_scale: float | None = None
) -> Embedding2D:
    """Laplacian eigenmap of the k-NN graph.

    Edge weights are exp(-(d / heat_scale)^2); heat_scale defaults to the
    median k-NN edge distance.  Takes the two eigenvectors above the
    constant one of the unnormalized Laplacian.
    """
    _check_size(d)
    adj = _knn_edges(d.values, k)
    _require_connected(adj)
    iu = np.triu_indices(d.size, k=1)
    edge_d = d.values[iu][adj[iu]]
    if heat_scale is None:
        heat_scale = float(np.median(edge_d))
    if heat_scale <= 0:
        heat_scale = 1.0
    w = np.where(adj, np.exp(-((d.values / heat_scale) ** 2)), 0.0)
    np.fill_diagonal(w, 0.0)
    lap = np.diag(w.sum(axis=1)) - w
    vals, vecs = symmetric_eigh(lap)
    coords = vecs[:, ::-1][:, 1:3]  # ascending: skip the constant vector
    return Embedding2D(rescale_unit(coords), list(d.labels))


def pca_coords(t) -> Embedding2D:
    """Scores of the feature vectors on their first two principal axes."""
    if t.missing_mask.any():
        raise DataError("pca_coords requires a table with no missing values")
    points = t.values.T  # (p, n) feature vectors
    if points.shape[0] < 3:
        raise DataError(f"need at least 3 features to embed, got {points.shape[0]}")
    centered = points - points.mean(axis=0)
    if not np.any(centered):
        raise NumericError("degenerate configuration: all feature vectors equal")
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    scores = u[:, :2] * s[:2]
    for j in range(2):
        lead = np.argmax(np.abs(scores[:, j]))
        if scores[lead, j] < 0:
            scores[:, j] = -scores[:, j]
    return Embedding2D(rescale_unit(scores), list(t.feature_names))


def random_embed(p: int, seed: int = 0, labels: list[str] | None = None) -> Embedding2D:
    """Uniform random locations in the unit square."""
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    if labels is None:
        labels = [f"f{i + 1}" for i in range(p)]
    rng = np.random.default_rng(seed)
    return Embedding2D(rng.random((p, 2)), labels)
