"""Synthetic benchmark data with banded feature correlation.

Features are zero-mean unit-variance Gaussians with covariance
gamma^|i - j|, realized exactly by the first-order recursion
x_j = gamma * x_{j-1} + sqrt(1 - gamma^2) * eps_j.  A chosen fraction of
features gets zero regression weight (spurious); the target is the weighted
sum min-max normalized to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ingest import FeatureTable

__all__ = ["SynthSpec", "generate", "generate_with_weights"]


@dataclass
class SynthSpec:
    n: int
    p: int
    gamma: float = 0.7
    spurious_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.spurious_fraction <= 1.0:
            raise ConfigError(
                f"spurious_fraction must be in [0, 1], got {self.spurious_fraction}"
            )


def generate_with_weights(spec: SynthSpec) -> tuple[FeatureTable, np.ndarray]:
    """Like generate, additionally returning the true regression weights
    (zeros mark the spurious features)."""
    rng = np.random.default_rng(spec.seed)
    eps = rng.standard_normal((spec.n, spec.p))
    x = np.empty_like(eps)
    x[:, 0] = eps[:, 0]
    scale = math.sqrt(1.0 - spec.gamma**2)
    for j in range(1, spec.p):
        x[:, j] = spec.gamma * x[:, j - 1] + scale * eps[:, j]

    n_spurious = int(math.floor(spec.spurious_fraction * spec.p))
    weights = rng.uniform(0.5, 1.5, size=spec.p)
    weights *= np.where(rng.random(spec.p) < 0.5, -1.0, 1.0)
    if n_spurious:
        spurious = rng.choice(spec.p, size=n_spurious, replace=False)
        weights[spurious] = 0.0

    raw = x @ weights
    lo, hi = raw.min(), raw.max()
    target = np.zeros_like(raw) if hi == lo else (raw - lo) / (hi - lo)

    names = [f"f{j + 1}" for j in range(spec.p)]
    ids = [f"s{i + 1}" for i in range(spec.n)]
    return FeatureTable(x, names, ids, target), weights


def generate(spec: SynthSpec) -> FeatureTable:
    """Draw a table of n samples, p correlated features, and a [0, 1]
    target.  Deterministic given the spec seed."""
    table, _ = generate_with_weights(spec)
    return table
