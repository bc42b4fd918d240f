"""Pairwise feature distances.

Features are compared as column vectors across samples.  Distances feed the
embedding and the Bayesian refinement stages, which expect a max-normalized
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DataError

__all__ = ["DistanceMatrix", "feature_distances", "normalize_max", "write_csv"]


@dataclass
class DistanceMatrix:
    """Symmetric (p, p) matrix of non-negative distances, zero diagonal."""

    values: np.ndarray
    labels: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise DataError("distance matrix must be square")
        p = self.values.shape[0]
        if len(self.labels) != p:
            raise DataError(f"{len(self.labels)} labels for {p} rows")
        if not np.allclose(self.values, self.values.T, atol=1e-12):
            raise DataError("distance matrix is not symmetric")
        if np.any(np.diag(self.values) != 0):
            raise DataError("distance matrix diagonal must be zero")
        if np.any(self.values < 0):
            raise DataError("distances must be non-negative")

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def upper(self) -> np.ndarray:
        """Condensed upper triangle in scipy pdist order."""
        return squareform(self.values, checks=False)


def feature_distances(t) -> DistanceMatrix:
    """Euclidean distance between every pair of feature columns.

    The table must have no missing values; run ingest preprocessing first.
    """
    if t.missing_mask.any():
        raise DataError("feature_distances requires a table with no missing values")
    if t.p < 2:
        raise DataError(f"need at least 2 features, got {t.p}")
    condensed = pdist(t.values.T, metric="euclidean")
    return DistanceMatrix(squareform(condensed), list(t.feature_names))


def normalize_max(d: DistanceMatrix) -> DistanceMatrix:
    """Divide by the largest entry so the maximum distance is 1.

    An all-zero matrix is returned unchanged.  Idempotent.
    """
    peak = d.values.max()
    if peak == 0:
        return DistanceMatrix(d.values.copy(), list(d.labels))
    return DistanceMatrix(d.values / peak, list(d.labels))


def write_csv(d: DistanceMatrix, path) -> None:
    """Dump as CSV with labels on the first row and column."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("," + ",".join(d.labels) + "\n")
        for i, label in enumerate(d.labels):
            cells = [label] + [repr(float(v)) for v in d.values[i]]
            fh.write(",".join(cells) + "\n")
