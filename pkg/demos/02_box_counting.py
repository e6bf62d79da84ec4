"""
Checking brackets against a point cloud
=======================================

The chaos game walks the edges backwards and applies maps to a running
point. Box counting on the cloud gives an independent estimate.
"""

import numpy as np

from gifsdim import box_count_dim, chaos_game, default_scales, dim_bounds_affine, load_spec
from gifsdim.specfile import data_path

for name in ("sierpinski_gap", "diag_pair", "cantor", "two_vertex"):
    sys = load_spec(data_path(name + ".gifs"))
    rep = dim_bounds_affine(sys)
    cloud = chaos_game(sys, 100_000, seed=0)
    anchor = np.min([b.low for b in sys.seed.values()], axis=0)
    est = box_count_dim(cloud, default_scales(sys), anchor=anchor)
    print(f"{name:15s} bracket [{rep.lower:.4f}, {rep.upper:.4f}]  box count {est.slope:.4f} +- {est.stderr:.3f}")

# same seed, same cloud
sys = load_spec(data_path("sierpinski.gifs"))
a = chaos_game(sys, 10_000, seed=42)
b = chaos_game(sys, 10_000, seed=42)
print("bit-identical:", np.array_equal(a.points, b.points))
