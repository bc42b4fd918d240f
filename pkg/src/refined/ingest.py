"""Tabular data loading and preprocessing.

A :class:`FeatureTable` is the unit of exchange: an (n, p) float matrix with
feature names, sample ids, an optional target vector, and a missing-value
mask.  All preprocessing steps are pure: they return new tables and never
mutate their input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "FeatureTable",
    "SplitSpec",
    "load_csv",
    "write_csv",
    "filter_features",
    "knn_impute",
    "minmax_normalize",
    "relieff_select",
    "split",
    "bootstrap_oversample",
]

# Instances beyond this count are subsampled before the RELIEFf sweep.
RELIEFF_MAX_INSTANCES = 5000


@dataclass
class FeatureTable:
    """Numeric table of n samples by p features.

    values holds NaN where missing_mask is True.  target, when present, has
    one entry per sample and no missing values.
    """

    values: np.ndarray
    feature_names: list[str]
    sample_ids: list[str]
    target: np.ndarray | None = None
    missing_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DataError("feature values must be a 2-D matrix")
        n, p = self.values.shape
        if len(self.feature_names) != p:
            raise DataError(f"{len(self.feature_names)} names for {p} feature columns")
        if len(self.sample_ids) != n:
            raise DataError(f"{len(self.sample_ids)} ids for {n} sample rows")
        if len(set(self.feature_names)) != p:
            seen, dup = set(), None
            for name in self.feature_names:
                if name in seen:
                    dup = name
                    break
                seen.add(name)
            raise DataError(f"duplicate feature name {dup!r}")
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=float)
            if self.target.shape != (n,):
                raise DataError("target length does not match sample count")
        if self.missing_mask is None:
            self.missing_mask = np.isnan(self.values)
        else:
            self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
            if self.missing_mask.shape != self.values.shape:
                raise DataError("missing mask shape does not match values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "FeatureTable":
        return FeatureTable(
            self.values.copy(),
            list(self.feature_names),
            list(self.sample_ids),
            None if self.target is None else self.target.copy(),
            self.missing_mask.copy(),
        )


@dataclass
class SplitSpec:
    """Fractions for a train/validation/test partition."""

    train_fraction: float = 0.8
    valid_fraction: float = 0.1
    test_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_fraction, self.valid_fraction, self.test_fraction)
        if any(f < 0 for f in fracs):
            raise ConfigError("split fractions must be non-negative")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions sum to {sum(fracs)}, expected 1")


def load_csv(path, target_column: str | None = None) -> FeatureTable:
    """Read a comma-separated table with a mandatory header row.

    The first column supplies sample ids when its header is ``id``
    (case-insensitive); otherwise ids are the 1-based row numbers.  Empty
    cells are treated as missing.  Cells must otherwise parse as decimal
    numbers.  When target_column is given, that column is removed from the
    features and stored as the target; target cells must not be empty.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        if not header or all(cell.strip() == "" for cell in header):
            raise DataError(f"{path}: header row is empty")
        has_id = header[0].strip().lower() == "id"
        names = [cell.strip() for cell in (header[1:] if has_id else header)]
        if any(name == "" for name in names):
            raise DataError(f"{path}: blank column name in header")

        target_idx = None
        if target_column is not None:
            if target_column not in names:
                raise DataError(f"{path}: no column named {target_column!r}")
            target_idx = names.index(target_column)
            names = names[:target_idx] + names[target_idx + 1 :]

        ids: list[str] = []
        rows: list[list[float]] = []
        targets: list[float] = []
        expected = len(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != expected:
                raise DataError(
                    f"{path} line {lineno}: {len(row)} cells, expected {expected}"
                )
            cells = row[1:] if has_id else row
            ids.append(row[0].strip() if has_id else str(lineno - 1))
            if target_idx is not None:
                raw = cells.pop(target_idx).strip()
                if raw == "":
                    raise DataError(f"{path} line {lineno}: empty target cell")
                try:
                    targets.append(float(raw))
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}: bad target value {raw!r}"
                    ) from None
            parsed = []
            for col, raw in enumerate(cells):
                raw = raw.strip()
                if raw == "":
                    parsed.append(np.nan)
                    continue
                try:
                    parsed.append(float(raw))
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}: cell {raw!r} is not a number"
                    ) from None
            rows.append(parsed)

    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array(rows, dtype=float)
    target = np.array(targets, dtype=float) if target_idx is not None else None
    return FeatureTable(values, names, ids, target)


def write_csv(t: FeatureTable, path, target_name: str = "y", include_ids: bool = True) -> None:
    """Write a table in the format load_csv reads.

    Floats use repr (shortest round-trip form) so output is byte-stable.
    Missing values become empty cells.  With include_ids=False the id
    column is dropped and readers fall back to row-number ids.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        cols = (["id"] if include_ids else []) + list(t.feature_names)
        if t.target is not None:
            cols.append(target_name)
        fh.write(",".join(cols) + "\n")
        for i in range(t.n):
            cells = [t.sample_ids[i]] if include_ids else []
            for j in range(t.p):
                cells.append("" if t.missing_mask[i, j] else repr(float(t.values[i, j])))
            if t.target is not None:
                cells.append(repr(float(t.target[i])))
            fh.write(",".join(cells) + "\n")


def filter_features(t: FeatureTable, max_bad_fraction: float = 0.10) -> FeatureTable:
    """Drop features whose zero-or-missing fraction exceeds the threshold.

    A cell counts as bad when it is missing or exactly zero.  Raises when
    every feature would be dropped.
    """
    if not 0.0 <= max_bad_fraction <= 1.0:
        raise ConfigError(f"max_bad_fraction {max_bad_fraction} outside [0, 1]")
    bad = t.missing_mask | (np.nan_to_num(t.values, nan=1.0) == 0.0)
    frac = bad.mean(axis=0)
    keep = frac <= max_bad_fraction
    if not keep.any():
        raise DataError("every feature exceeds the zero-or-missing threshold")
    return FeatureTable(
        t.values[:, keep].copy(),
        [name for name, k in zip(t.feature_names, keep) if k],
        list(t.sample_ids),
        None if t.target is None else t.target.copy(),
        t.missing_mask[:, keep].copy(),
    )


def _mutual_sq_distances(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance between sample rows over mutually
    non-missing columns; +inf where two rows share no columns."""
    valid = (~mask).astype(float)
    filled = np.where(mask, 0.0, values)
    sq = filled * filled
    s1 = sq @ valid.T          # sum_c x_ic^2 over columns valid in both
    s2 = valid @ sq.T
    s3 = filled @ filled.T
    d2 = s1 + s2 - 2.0 * s3
    np.maximum(d2, 0.0, out=d2)
    shared = valid @ valid.T
    d2[shared == 0] = np.inf
    return d2


def knn_impute(t: FeatureTable, k: int = 5) -> FeatureTable:
    """Fill each missing cell with the mean of that column over the k
    nearest samples having the value present.

    Distance between two samples is the Euclidean distance over columns
    non-missing in both; ties resolve to the lower sample index.  A table
    with no missing values is returned unchanged (as a copy).
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not t.missing_mask.any():
        return t.copy()
    d2 = _mutual_sq_distances(t.values, t.missing_mask)
    values = t.values.copy()
    for j in range(t.p):
        holes = np.nonzero(t.missing_mask[:, j])[0]
        if holes.size == 0:
            continue
        donors = np.nonzero(~t.missing_mask[:, j])[0]
        if donors.size == 0:
            raise DataError(
                f"feature {t.feature_names[j]!r} is missing in every sample"
            )
        if donors.size < k:
            raise DataError(
                f"feature {t.feature_names[j]!r}: {donors.size} donors for k={k}"
            )
        for i in holes:
            # stable sort on (distance, index): ties go to the lower index
            order = np.argsort(d2[i, donors], kind="stable")
            chosen = donors[order[:k]]
            values[i, j] = t.values[chosen, j].mean()
    return FeatureTable(
        values,
        list(t.feature_names),
        list(t.sample_ids),
        None if t.target is None else t.target.copy(),
        np.zeros_like(t.missing_mask),
    )


def minmax_normalize(t: FeatureTable) -> FeatureTable:
    """Rescale each feature to [0, 1]; constant features map to 0.

    Requires a table with no missing values (impute first).
    """
    if t.missing_mask.any():
        raise DataError("normalize requires a table with no missing values")
    lo = t.values.min(axis=0)
    hi = t.values.max(axis=0)
    span = hi - lo
    flat = span == 0
    span = np.where(flat, 1.0, span)
    values = (t.values - lo) / span
    values[:, flat] = 0.0
    return FeatureTable(
        values,
        list(t.feature_names),
        list(t.sample_ids),
        None if t.target is None else t.target.copy(),
        np.zeros_like(t.missing_mask),
    )


def _relieff_weights(
    values: np.ndarray, labels: np.ndarray, k_neighbors: int, instance_idx: np.ndarray
) -> np.ndarray:
    """Weight accumulation: nearest-hit minus prior-weighted nearest-miss
    feature differences, ranges normalized over the full table.  Works one
    instance at a time so memory stays at O(n * p)."""
    n, p = values.shape
    span = values.max(axis=0) - values.min(axis=0)
    span = np.where(span == 0, 1.0, span)
    classes, counts = np.unique(labels, return_counts=True)
    prior = {c: cnt / n for c, cnt in zip(classes, counts)}
    members_of = {c: np.nonzero(labels == c)[0] for c in classes}
    m = len(instance_idx)
    w = np.zeros(p)
    for i in instance_idx:
        diffs = np.abs(values[i] - values) / span  # (n, p)
        manhattan = diffs.sum(axis=1)
        own = labels[i]
        for c in classes:
            members = members_of[c]
            members = members[members != i]
            if members.size == 0:
                continue
            order = np.argsort(manhattan[members], kind="stable")
            near = members[order[: min(k_neighbors, members.size)]]
            contrib = diffs[near].mean(axis=0)
            if c == own:
                w -= contrib / m
            else:
                w += (prior[c] / (1.0 - prior[own])) * contrib / m
    return w


def relieff_select(
    t: FeatureTable, k_neighbors: int = 10, top_m: int | None = None, seed: int = 0
) -> list[tuple[str, float]]:
    """Rank features by RELIEFf weight against a categorical target.

    Neighbors are found by Manhattan distance on range-normalized feature
    differences, ties resolving to the lower sample index.  All instances
    are swept when n <= 5000; otherwise a seeded subsample of 5000.
    Returns the top_m (name, weight) pairs, weight descending, ties by
    feature order; top_m defaults to all features.
    """
    if t.target is None:
        raise DataError("relieff_select requires a table with a target")
    if k_neighbors < 1:
        raise ConfigError(f"k_neighbors must be >= 1, got {k_neighbors}")
    labels = t.target
    if np.unique(labels).size < 2:
        raise DataError("relieff_select requires at least two target classes")
    if top_m is None:
        top_m = t.p
    if not 1 <= top_m <= t.p:
        raise ConfigError(f"top_m {top_m} outside [1, {t.p}]")
    if t.n <= RELIEFF_MAX_INSTANCES:
        instance_idx = np.arange(t.n)
    else:
        rng = np.random.default_rng(seed)
        instance_idx = np.sort(
            rng.choice(t.n, size=RELIEFF_MAX_INSTANCES, replace=False)
        )
    w = _relieff_weights(t.values, labels, k_neighbors, instance_idx)
    # weight descending, feature order breaking ties
    order = sorted(range(t.p), key=lambda j: (-w[j], j))
    return [(t.feature_names[j], float(w[j])) for j in order[:top_m]]


def split(
    t: FeatureTable, spec: SplitSpec | None = None
) -> tuple[FeatureTable, FeatureTable, FeatureTable]:
    """Random disjoint train/validation/test partition.

    Part sizes are the largest-remainder rounding of n times each fraction,
    leftover units favoring train; every size is within one sample of
    n * fraction.  Deterministic given the spec seed.
    """
    if spec is None:
        spec = SplitSpec()
    if t.n < 3:
        raise DataError(f"need at least 3 samples to split, got {t.n}")
    fracs = [spec.train_fraction, spec.valid_fraction, spec.test_fraction]
    exact = [t.n * f for f in fracs]
    sizes = [int(np.floor(e)) for e in exact]
    leftover = t.n - sum(sizes)
    # hand leftover units to the largest remainders, train winning ties
    order = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in range(leftover):
        sizes[order[i % 3]] += 1
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(t.n)
    bounds = np.cumsum([0] + sizes)
    parts = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        idx = perm[lo:hi]
        parts.append(_take_rows(t, idx))
    return parts[0], parts[1], parts[2]


def _take_rows(t: FeatureTable, idx: np.ndarray) -> FeatureTable:
    return FeatureTable(
        t.values[idx].copy(),
        list(t.feature_names),
        [t.sample_ids[i] for i in idx],
        None if t.target is None else t.target[idx].copy(),
        t.missing_mask[idx].copy(),
    )


def bootstrap_oversample(
    t: FeatureTable,
    threshold: float,
    factor: float = 2.0,
    seed: int = 0,
    above: bool = True,
) -> FeatureTable:
    """Append with-replacement resamples of the target region until its
    count is about factor times the original.

    The region is target >= threshold (or <= when above is False).
    round((factor - 1) * m) rows are appended, ids suffixed __b<k> to stay
    traceable.  factor 1 returns the table unchanged.
    """
    if t.target is None:
        raise DataError("bootstrap_oversample requires a table with a target")
    if factor < 1.0:
        raise ConfigError(f"factor must be >= 1, got {factor}")
    region = t.target >= threshold if above else t.target <= threshold
    pool = np.nonzero(region)[0]
    if pool.size == 0:
        raise DataError("no samples fall in the oversampling region")
    extra = int(round((factor - 1.0) * pool.size))
    if extra == 0:
        return t.copy()
    rng = np.random.default_rng(seed)
    picks = pool[rng.integers(0, pool.size, size=extra)]
    values = np.vstack([t.values, t.values[picks]])
    mask = np.vstack([t.missing_mask, t.missing_mask[picks]])
    target = np.concatenate([t.target, t.target[picks]])
    ids = list(t.sample_ids) + [
        f"{t.sample_ids[i]}__b{k}" for k, i in enumerate(picks)
    ]
    return FeatureTable(values, list(t.feature_names), ids, target, mask)
