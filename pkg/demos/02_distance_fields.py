"""Rasters, exact distance transforms and parallel volumes.

The distance transform is exact per cell center (it matches the all-pairs
brute force in integer arithmetic), so thresholding it at eps gives
bias-free parallel-set volumes -- the substrate for every content estimate.
"""

import math

import numpy as np

from fractal_tiling_lab.grids import (
    ConvexPolygon,
    distance_transform,
    grid_from_bbox,
    inner_parallel_volume,
    inradius,
    parallel_volume,
    rasterize,
)

delta = 2.0**-9

# a unit segment: lambda(A_eps) should follow the stadium formula
g = grid_from_bbox(([-0.4, -0.4], [1.4, 0.4]), delta)
occ = np.zeros(g.extents, bool)
xs = g.centers(0)
j0 = g.indices_of(np.array([[0.0, 0.0]]))[0, 1]
occ[(xs >= 0) & (xs <= 1), j0] = True
field = distance_transform(g.with_occupancy(occ))

print("eps     lambda(A_eps)   2 eps + pi eps^2")
for eps in (0.05, 0.1, 0.2):
    print(f"{eps:.2f}    {parallel_volume(field, eps):.5f}        {2 * eps + math.pi * eps**2:.5f}")

# inner parallel volume of the unit square: 4 eps - 4 eps^2
sq = ConvexPolygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
G = rasterize(sq, ([-0.05, -0.05], [1.05, 1.05]), delta)
print("\ninner volume of the unit square at eps=0.1:", inner_parallel_volume(G, 0.1), "(exact 0.36)")
print("inradius:", inradius(G), "(exact 0.5)")
