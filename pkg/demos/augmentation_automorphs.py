"""
Grid symmetries as data augmentation
====================================

A feature-to-pixel map is only defined up to the symmetries of the
square: rotating or mirroring the whole grid changes no pixel-to-pixel
distance, so all eight variants of a map describe the same geometry.
Rendering a sample through each variant yields eight images per sample
for free, which is the augmentation trick this script demonstrates.

Run from the repository root:

    python3 demos/augmentation_automorphs.py
"""

import tempfile
from pathlib import Path

import numpy as np

from refined import (
    SynthSpec,
    automorphs,
    discretize,
    feature_distances,
    generate,
    hill_climb,
    map_cost,
    mds_embed,
    minmax_normalize,
    normalize_max,
    render,
    write_pgm,
    write_tensor,
)
from refined.images import ImageStack

# ---- fit a small map --------------------------------------------------------
table = minmax_normalize(generate(SynthSpec(n=40, p=16, gamma=0.8, seed=21)))
d = normalize_max(feature_distances(table))
m, _ = hill_climb(discretize(mds_embed(d)), d)
print(f"fitted a {m.grid_size}x{m.grid_size} map for {m.size} features")

# ---- the eight symmetric variants -------------------------------------------
group = automorphs(m)
costs = [map_cost(v, d).value for v in group]
print(f"eight variants, cost spread {max(costs) - min(costs):.2e} "
      f"(isometries leave the cost alone)")

# The first variant is the map itself; the second is a quarter turn, so
# rendering through it must equal rotating the base image.
base = render(table, m).pixels[0]
turned = render(table, group[1]).pixels[0]
print(f"quarter-turn render equals rotated base image: "
      f"{np.array_equal(turned, np.rot90(base, k=-1))}")

# ---- an 8x augmented stack --------------------------------------------------
# One pgm per sample per variant; the suffix records which variant.
out_dir = Path(tempfile.mkdtemp(prefix="refined_aug_"))
suffixes = ["_r0", "_r1", "_r2", "_r3", "_r0m", "_r1m", "_r2m", "_r3m"]
pixels, ids, tags = [], [], []
for variant, suffix in zip(group, suffixes):
    stack = render(table, variant)
    pixels.append(stack.pixels)
    ids.extend(stack.sample_ids)
    tags.extend(suffix for _ in stack.sample_ids)
augmented = ImageStack(np.concatenate(pixels), [i + t for i, t in zip(ids, tags)])
paths = write_pgm(augmented, out_dir / "pgm")
write_tensor(augmented, out_dir / "augmented.tensor")
print(f"\n{len(table.sample_ids)} samples became {len(paths)} images "
      f"({len(group)} per sample)")
print(f"artifacts under {out_dir}")
