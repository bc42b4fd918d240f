"""Feature-to-pixel assignment and its local search.

A :class:`FeatureGridMap` pins each feature to a distinct pixel of a g x g
grid.  The map quality against a reference distance matrix is the summed
absolute gap between normalized pixel-center distances and the reference;
hill climbing lowers it by swapping neighboring features (and moving into
vacant neighbors unless restricted to swaps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .distances import DistanceMatrix
from .embed import Embedding2D
from .errors import ConfigError, DataError

__all__ = [
    "FeatureGridMap",
    "MapCost",
    "grid_size_for",
    "discretize",
    "map_cost",
    "cost_delta",
    "hill_climb",
    "automorphs",
    "map_distance_correlation",
    "write_map",
    "read_map",
]

MAP_MAGIC = "REFINED-MAP v1"

# neighbor scan order: N, NE, E, SE, S, SW, W, NW
_NEIGHBOR_STEPS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass
class FeatureGridMap:
    """Injective assignment of p features to pixels of a g x g grid."""

    grid_size: int
    assignment: np.ndarray  # (p, 2) int rows, cols
    labels: list[str]

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=int)
        if self.assignment.ndim != 2 or self.assignment.shape[1] != 2:
            raise DataError("assignment must be a (p, 2) matrix of pixels")
        p = self.assignment.shape[0]
        if len(self.labels) != p:
            raise DataError(f"{len(self.labels)} labels for {p} assigned features")
        g = self.grid_size
        if g < 1:
            raise DataError(f"grid size must be >= 1, got {g}")
        if g * g < p:
            raise DataError(f"{p} features cannot fit a {g}x{g} grid")
        if self.assignment.size and (
            self.assignment.min() < 0 or self.assignment.max() >= g
        ):
            raise DataError("pixel coordinates outside the grid")
        flat = self.assignment[:, 0] * g + self.assignment[:, 1]
        if np.unique(flat).size != p:
            raise DataError("two features share a pixel")

    @property
    def size(self) -> int:
        return self.assignment.shape[0]

    def copy(self) -> "FeatureGridMap":
        return FeatureGridMap(self.grid_size, self.assignment.copy(), list(self.labels))

    def pixel_centers(self) -> np.ndarray:
        """(p, 2) centers of the assigned pixels on the unit square,
        (x, y) with x along columns."""
        g = self.grid_size
        x = (self.assignment[:, 1] + 0.5) / g
        y = (self.assignment[:, 0] + 0.5) / g
        return np.column_stack([x, y])


@dataclass
class MapCost:
    value: float
    pair_count: int


def grid_size_for(p: int) -> int:
    """Smallest g with g*g >= p."""
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    g = math.isqrt(p)
    return g if g * g == p else g + 1


def discretize(e: Embedding2D, grid_size: int | None = None) -> FeatureGridMap:
    """Snap embedded points to distinct pixels.

    Each point's nominal pixel is the cell containing it (coordinates
    floor(c * g), clamped to the edge).  Conflicts resolve in ascending
    feature order: an occupied nominal pixel sends the feature to the
    nearest vacant pixel by Chebyshev ring search, scanning each ring in
    row-major order.
    """
    p = e.size
    g = grid_size_for(p) if grid_size is None else grid_size
    if g * g < p:
        raise DataError(f"{p} features cannot fit a {g}x{g} grid")
    if e.coords.size and (e.coords.min() < 0 or e.coords.max() > 1):
        raise DataError("embedding coordinates outside the unit square")
    nominal_col = np.minimum((e.coords[:, 0] * g).astype(int), g - 1)
    nominal_row = np.minimum((e.coords[:, 1] * g).astype(int), g - 1)
    taken = np.zeros((g, g), dtype=bool)
    assignment = np.empty((p, 2), dtype=int)
    for j in range(p):
        r, c = int(nominal_row[j]), int(nominal_col[j])
        if not taken[r, c]:
            assignment[j] = (r, c)
            taken[r, c] = True
            continue
        placed = False
        for radius in range(1, 2 * g):
            ring = []
            for rr in range(max(0, r - radius), min(g, r + radius + 1)):
                for cc in range(max(0, c - radius), min(g, c + radius + 1)):
                    if max(abs(rr - r), abs(cc - c)) == radius and not taken[rr, cc]:
                        ring.append((rr, cc))
            if ring:
                assignment[j] = ring[0]  # rings are built in row-major order
                taken[ring[0]] = True
                placed = True
                break
        if not placed:
            raise DataError("no vacant pixel found; grid too small")
    return FeatureGridMap(g, assignment, list(e.labels))


def _aligned_reference(m: FeatureGridMap, reference: DistanceMatrix) -> np.ndarray:
    if m.labels != reference.labels:
        raise DataError("map and reference distance labels do not align")
    return reference.upper()


def map_cost(m: FeatureGridMap, reference: DistanceMatrix) -> MapCost:
    """Summed absolute gap between max-normalized pixel-center distances
    and the reference, over all feature pairs.

    The reference is expected on the same [0, 1] scale (max-normalized).
    """
    ref = _aligned_reference(m, reference)
    q = ref.size
    if q == 0:
        return MapCost(0.0, 0)
    img = pdist(m.pixel_centers())
    peak = img.max()
    if peak > 0:
        img = img / peak
    return MapCost(float(np.abs(img - ref).sum()), q)


def cost_delta(
    m: FeatureGridMap,
    feature: int,
    target: tuple[int, int],
    reference: DistanceMatrix,
    norm: float | None = None,
) -> float:
    """Exact cost change of moving one feature to a target pixel, holding
    the distance normalizer fixed.

    A vacant target is a move; an occupied one a swap with its occupant.
    norm defaults to the current map's largest pixel-center distance.  The
    same-pixel "move" costs exactly 0.  O(p) time.
    """
    ref = _aligned_reference(m, reference)
    p = m.size
    if not 0 <= feature < p:
        raise ConfigError(f"feature index {feature} outside [0, {p})")
    tr, tc = target
    g = m.grid_size
    if not (0 <= tr < g and 0 <= tc < g):
        raise ConfigError(f"target pixel {target} outside the {g}x{g} grid")
    centers = m.pixel_centers()
    if norm is None:
        d_all = pdist(centers)
        norm = float(d_all.max()) if d_all.size else 1.0
    if norm <= 0:
        norm = 1.0
    t_center = np.array([(tc + 0.5) / g, (tr + 0.5) / g])
    ref_sq = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    ref_sq[iu] = ref
    ref_sq += ref_sq.T

    occupant = np.nonzero(
        (m.assignment[:, 0] == tr) & (m.assignment[:, 1] == tc)
    )[0]
    j = feature
    dj_old = np.linalg.norm(centers - centers[j], axis=1) / norm
    dj_new = np.linalg.norm(centers - t_center, axis=1) / norm
    if occupant.size == 0:
        keep = np.ones(p, dtype=bool)
        keep[j] = False
        return float(
            (np.abs(dj_new[keep] - ref_sq[j, keep])
             - np.abs(dj_old[keep] - ref_sq[j, keep])).sum()
        )
    l = int(occupant[0])
    if l == j:
        return 0.0
    dl_old = np.linalg.norm(centers - centers[l], axis=1) / norm
    dl_new = dj_old  # l lands on j's pixel
    keep = np.ones(p, dtype=bool)
    keep[j] = False
    keep[l] = False
    delta = (np.abs(dj_new[keep] - ref_sq[j, keep])
             - np.abs(dj_old[keep] - ref_sq[j, keep])).sum()
    delta += (np.abs(dl_new[keep] - ref_sq[l, keep])
              - np.abs(dl_old[keep] - ref_sq[l, keep])).sum()
    return float(delta)


def hill_climb(
    m: FeatureGridMap,
    reference: DistanceMatrix,
    max_passes: int = 100,
    strict_swaps: bool = False,
) -> tuple[FeatureGridMap, list[float]]:
    """Greedy local search over single-feature moves.

    Each pass scans pixels in row-major order; for the feature at each
    visited pixel the eight neighboring pixels are candidate targets
    (occupied: swap; vacant: move, unless strict_swaps).  The candidate
    with the largest strict decrease is applied, ties broken by the fixed
    neighbor order.

    Passes come in two kinds.  A fast pass freezes the distance
    normalizer so candidate deltas stay exact and O(p); because a move
    can change the largest placed distance, a fast pass may overshoot
    once renormalized, in which case it is discarded and a slow pass
    rescores each candidate by exact recomputation.  The recorded cost
    after each pass is therefore exact and never increases, and when the
    search stops before max_passes no single swap or move can lower the
    exact cost.

    Returns the improved map and the exact cost after each pass.
    """
    if max_passes < 1:
        raise ConfigError(f"max_passes must be >= 1, got {max_passes}")
    ref = _aligned_reference(m, reference)
    current = m.copy()
    p, g = current.size, current.grid_size
    ref_sq = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    ref_sq[iu] = ref
    ref_sq += ref_sq.T

    # all pixel-center pairwise distances, indexed by flat pixel id
    cols, rows = np.meshgrid(np.arange(g), np.arange(g))
    centers = np.column_stack(
        [(cols.ravel() + 0.5) / g, (rows.ravel() + 0.5) / g]
    )
    lut = np.sqrt(
        ((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    )

    occupant = np.full(g * g, -1, dtype=int)
    flat = current.assignment[:, 0] * g + current.assignment[:, 1]
    occupant[flat] = np.arange(p)
    pix = flat.copy()  # feature -> flat pixel id

    def exact_cost(pix_vec: np.ndarray) -> float:
        active = lut[np.ix_(pix_vec, pix_vec)]
        peak = float(active.max()) if p > 1 else 1.0
        if peak <= 0:
            peak = 1.0
        return float(np.abs(active[iu] / peak - ref).sum())

    def targets(j: int, occupant: np.ndarray, pix: np.ndarray):
        r, c = divmod(int(pix[j]), g)
        for dr, dc in _NEIGHBOR_STEPS:
            rr, cc = r + dr, c + dc
            if not (0 <= rr < g and 0 <= cc < g):
                continue
            tcell = rr * g + cc
            l = int(occupant[tcell])
            if l < 0 and strict_swaps:
                continue
            yield tcell, l

    def apply(occupant, pix, cell, j, tcell, l) -> None:
        occupant[cell] = l
        occupant[tcell] = j
        if l >= 0:
            pix[l] = cell
        pix[j] = tcell

    def fast_sweep(occupant: np.ndarray, pix: np.ndarray) -> bool:
        active = lut[np.ix_(pix, pix)]
        norm = float(active.max()) if p > 1 else 1.0
        if norm <= 0:
            norm = 1.0
        changed = False
        for cell in range(g * g):
            j = occupant[cell]
            if j < 0:
                continue
            dj_old = lut[pix[j], pix] / norm
            gap_j_old = np.abs(dj_old - ref_sq[j])
            best_delta = 0.0
            best = None
            for tcell, l in targets(j, occupant, pix):
                dj_new = lut[tcell, pix] / norm
                if l < 0:
                    delta = (np.abs(dj_new - ref_sq[j]) - gap_j_old).sum()
                    delta -= abs(dj_new[j] - ref_sq[j, j]) - gap_j_old[j]
                else:
                    dl_old = lut[pix[l], pix] / norm
                    dl_new = dj_old
                    dgap_j = np.abs(dj_new - ref_sq[j]) - gap_j_old
                    dgap_l = np.abs(dl_new - ref_sq[l]) - np.abs(dl_old - ref_sq[l])
                    delta = dgap_j.sum() + dgap_l.sum()
                    for x in (j, l):
                        delta -= np.abs(dj_new[x] - ref_sq[j, x]) - gap_j_old[x]
                        delta -= np.abs(dl_new[x] - ref_sq[l, x]) - np.abs(
                            dl_old[x] - ref_sq[l, x]
                        )
                if delta < best_delta:
                    best_delta = delta
                    best = (tcell, l)
            if best is not None:
                apply(occupant, pix, cell, j, *best)
                changed = True
        return changed

    def exact_sweep(occupant, pix, cost_now: float) -> tuple[bool, float]:
        changed = False
        for cell in range(g * g):
            j = occupant[cell]
            if j < 0:
                continue
            best_cost = cost_now
            best = None
            for tcell, l in targets(j, occupant, pix):
                trial = pix.copy()
                trial[j] = tcell
                if l >= 0:
                    trial[l] = cell
                cand = exact_cost(trial)
                if cand < best_cost:
                    best_cost = cand
                    best = (tcell, l)
            if best is not None:
                apply(occupant, pix, cell, j, *best)
                cost_now = best_cost
                changed = True
        return changed, cost_now

    history: list[float] = []
    cost_now = exact_cost(pix)
    for _ in range(max_passes):
        trial_occ, trial_pix = occupant.copy(), pix.copy()
        if fast_sweep(trial_occ, trial_pix):
            cost_fast = exact_cost(trial_pix)
            if cost_fast < cost_now:
                occupant, pix = trial_occ, trial_pix
                cost_now = cost_fast
                history.append(cost_now)
                continue
        changed, cost_now = exact_sweep(occupant, pix, cost_now)
        history.append(cost_now)
        if not changed:
            break
    current = FeatureGridMap(
        g, np.column_stack(divmod(pix, g)), list(current.labels)
    )
    return current, history


def automorphs(m: FeatureGridMap) -> list[FeatureGridMap]:
    """The eight symmetry images of the map: four clockwise rotations, then
    the same four of the left-right mirror.  Element 0 is the identity."""
    out = []
    g = m.grid_size
    for mirror in (False, True):
        r = m.assignment[:, 0].copy()
        c = m.assignment[:, 1].copy()
        if mirror:
            c = g - 1 - c
        for _ in range(4):
            out.append(FeatureGridMap(g, np.column_stack([r, c]), list(m.labels)))
            r, c = c.copy(), g - 1 - r
    return out


def map_distance_correlation(m: FeatureGridMap, reference: DistanceMatrix) -> float:
    """Pearson correlation between pixel-center distances and the
    reference; a quick goodness diagnostic."""
    ref = _aligned_reference(m, reference)
    img = pdist(m.pixel_centers())
    if ref.size < 2 or img.std() == 0 or ref.std() == 0:
        return 0.0
    return float(np.corrcoef(img, ref)[0, 1])


def write_map(m: FeatureGridMap, path) -> None:
    """Write the text form: magic line, grid line, one feature line each.

    Feature names must be whitespace-free; the format is whitespace
    delimited.
    """
    for name in m.labels:
        if name != "".join(name.split()):
            raise DataError(f"feature name {name!r} contains whitespace")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MAP_MAGIC + "\n")
        fh.write(f"grid {m.grid_size} {m.grid_size}\n")
        for j, name in enumerate(m.labels):
            fh.write(f"{name} {m.assignment[j, 0]} {m.assignment[j, 1]}\n")


def read_map(path) -> FeatureGridMap:
    """Parse a map file, rejecting bad headers, out-of-range pixels, and
    duplicate pixel claims."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0].strip() != MAP_MAGIC:
        raise DataError(f"{path}: missing '{MAP_MAGIC}' header")
    if len(lines) < 2:
        raise DataError(f"{path}: missing grid line")
    grid_parts = lines[1].split()
    if len(grid_parts) != 3 or grid_parts[0] != "grid":
        raise DataError(f"{path}: malformed grid line {lines[1]!r}")
    try:
        rows, cols = int(grid_parts[1]), int(grid_parts[2])
    except ValueError:
        raise DataError(f"{path}: malformed grid line {lines[1]!r}") from None
    if rows != cols or rows < 1:
        raise DataError(f"{path}: grid must be square and positive")
    labels: list[str] = []
    assignment = []
    seen: set[tuple[int, int]] = set()
    for lineno, line in enumerate(lines[2:], start=3):
        if line.strip() == "":
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path} line {lineno}: expected 'name row col'")
        name = parts[0]
        try:
            r, c = int(parts[1]), int(parts[2])
        except ValueError:
            raise DataError(f"{path} line {lineno}: bad pixel coordinates") from None
        if not (0 <= r < rows and 0 <= c < cols):
            raise DataError(f"{path} line {lineno}: pixel ({r}, {c}) off the grid")
        if (r, c) in seen:
            raise DataError(f"{path} line {lineno}: pixel ({r}, {c}) claimed twice")
        seen.add((r, c))
        labels.append(name)
        assignment.append((r, c))
    if not labels:
        raise DataError(f"{path}: no feature lines")
    return FeatureGridMap(rows, np.array(assignment, dtype=int), labels)
