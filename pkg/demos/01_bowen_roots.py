"""
Dimension brackets from pressure
================================

The pressure of a locally constant potential is the log spectral radius
of a weighted adjacency matrix. Its zero in ``s`` is a dimension.
"""

import math

import numpy as np

from gifsdim import bowen_root, dim_bounds_affine, full_shift, load_spec, pressure_spectral
from gifsdim.specfile import data_path

# three maps of ratio 1/2 on a single vertex: P(s log 1/2) = log 3 - s log 2
g = full_shift(3)
for s in (0.0, 1.0, math.log2(3), 2.0):
    phi = {e: s * math.log(0.5) for e in g.edges}
    print(f"s={s:.4f}  P={pressure_spectral(g, phi).value:+.6f}")

print("root:", bowen_root(g, {e: math.log(0.5) for e in g.edges}), "log2(3) =", math.log2(3))

# unequal ratios 1/2 and 1/4: 2^-s + 4^-s = 1
g2 = full_shift(2)
print("two-ratio root:", bowen_root(g2, {"e0": math.log(0.5), "e1": math.log(0.25)}))

# a self-affine pair diag(1/2, 1/4): norms give the upper bound, infimum norms the lower
rep = dim_bounds_affine(load_spec(data_path("diag_pair.gifs")))
print(f"bracket ({rep.lower:.6f}, {rep.upper:.6f})  K={rep.K:g}  det bracket {np.round(rep.det_bracket, 6)}")

# two intervals feeding each other: the root now depends on the graph
rep = dim_bounds_affine(load_spec(data_path("two_vertex.gifs")))
print(f"two-vertex system: {rep.lower:.10f} (conformal, flags {rep.flags})")
