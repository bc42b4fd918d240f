"""
End-to-end tour: tabular features to image tensors
==================================================

Walks one synthetic dataset through the whole pipeline: generate
correlated features, measure feature-to-feature distances, embed them in
the unit square, tighten the embedding with the Bayesian sampler,
snap features onto a pixel grid, polish the grid by hill climbing, and
finally render every sample as a grayscale image.

Run from the repository root:

    python3 demos/pipeline_tour.py
"""

import tempfile
from pathlib import Path

import numpy as np

from refined import (
    BmdsConfig,
    SynthSpec,
    diagnostics,
    discretize,
    feature_distances,
    generate,
    hill_climb,
    map_cost,
    map_distance_correlation,
    mds_embed,
    minmax_normalize,
    normalize_max,
    read_tensor,
    render,
    run_mcmc,
    write_map,
    write_pgm,
    write_tensor,
)

out_dir = Path(tempfile.mkdtemp(prefix="refined_tour_"))

# ---- 1. synthetic data ------------------------------------------------------
# 120 samples of 64 features; neighbors in index order are correlated
# (gamma 0.8), and 25% of the columns are pure noise with no effect on y.
spec = SynthSpec(n=120, p=64, gamma=0.8, spurious_fraction=0.25, seed=7)
table = generate(spec)
print(f"generated {len(table.sample_ids)} samples x {len(table.feature_names)} features")
print(f"target range: {table.target.min():.3f} .. {table.target.max():.3f}")

# ---- 2. distances between features ------------------------------------------
# Features are min-max scaled so every column lives on [0, 1]; the distance
# between two features is the Euclidean distance of their sample vectors,
# then the whole matrix is scaled so the largest distance is 1.
table = minmax_normalize(table)
d = normalize_max(feature_distances(table))
print(f"\ndistance matrix {d.size}x{d.size}, median pair {np.median(d.upper()):.3f}")

# ---- 3. initial embedding ---------------------------------------------------
# Classical multidimensional scaling gives each feature a 2-D location in
# the unit square; nearby locations mean similar features.
init = mds_embed(d)
print(f"embedded into the unit square: x in [{init.coords[:, 0].min():.2f}, "
      f"{init.coords[:, 0].max():.2f}]")

# ---- 4. Bayesian refinement -------------------------------------------------
# A short Metropolis-within-Gibbs run; the returned locations are the
# highest-posterior configuration visited, and delta_hat holds its
# pairwise distances (the de-noised estimate the grid step targets).
cfg = BmdsConfig(iterations=600, burn_in=300, thin=5, seed=7)
result = run_mcmc(d, init, cfg)
print(f"\nsampler acceptance rate {result.trace.accept_rate:.2f}")
report = diagnostics(result.trace)
for series in report.series[:3]:
    print(f"  {series.name}: ess {series.ess:.0f}, psr {series.psr:.3f}")

# ---- 5. grid assignment and hill climb --------------------------------------
# ceil(sqrt(64)) = 8, so the 64 features land on an 8x8 grid, one per
# pixel.  Hill climbing then swaps/moves features so pixel distances
# track delta_hat; the recorded cost never increases.
m0 = discretize(result.mode_locations)
m, history = hill_climb(m0, result.delta_hat)
print(f"\ngrid {m.grid_size}x{m.grid_size}; cost {history[0]:.1f} -> {history[-1]:.1f} "
      f"over {len(history)} passes")
print(f"distance correlation of the final map: "
      f"{map_distance_correlation(m, result.delta_hat):.3f}")
print(f"sanity: map_cost agrees with the last history entry: "
      f"{abs(map_cost(m, result.delta_hat).value - history[-1]):.2e}")

# ---- 6. images --------------------------------------------------------------
# Each sample becomes an 8x8 grayscale image: its feature values dropped
# into their pixels, vacant pixels zero.  PGM files are easy to eyeball;
# the tensor file is the compact form a downstream model consumes.
stack = render(table, m)
write_map(m, out_dir / "map.txt")
pgm_paths = write_pgm(stack, out_dir / "pgm")
write_tensor(stack, out_dir / "images.tensor")
back = read_tensor(out_dir / "images.tensor")
print(f"\nwrote {len(pgm_paths)} pgm files and a tensor of shape {back.shape}")
print(f"round trip exact: {np.array_equal(back, stack.pixels.astype(np.float32))}")
print(f"artifacts under {out_dir}")
