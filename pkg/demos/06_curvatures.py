"""Fractal curvatures in the plane: boundary length (k=1) and turning (k=0).

Orientation convention: parallel-set boundaries are traversed with the set
on the left, so a disk counts +1 and a hole -1; eroded generator cores are
holes of the ambient parallel set and therefore count -1 each. For a
square generator the k=0 formula has the exact value -(1/eta) g^D / D.
"""

import math

import numpy as np

from fractal_tiling_lab.curvature import generator_curvature, inner_curvature_samples
from fractal_tiling_lab.grids import ConvexPolygon, inradius, rasterize
from fractal_tiling_lab.levelsets import euler_and_turning
from fractal_tiling_lab.volumes import make_eps_grid

delta = 2.0**-10
D, eta = math.log(8) / math.log(3), math.log(3)
sq = ConvexPolygon(np.array([[1 / 3, 1 / 3], [2 / 3, 1 / 3], [2 / 3, 2 / 3], [1 / 3, 2 / 3]]))
G = rasterize(sq, ([0.30, 0.30], [0.70, 0.70]), delta)
g = inradius(G)
grid = make_eps_grid(delta, g * (1 - 1e-6), 32, math.log(3))

c0 = inner_curvature_samples(G, 0, grid)
c1 = inner_curvature_samples(G, 1, grid)
print("square generator, k=0 samples (all -1):", set(np.round(c0.values, 3)))
res0 = generator_curvature(c0, D, eta, 0, 2, g)
print("k=0 curvature:", res0.value, " exact:", -(1 / eta) * g**D / D)
res1 = generator_curvature(c1, D, eta, 1, 2, g)
print("k=1 curvature:", res1.value)

# Gauss-Bonnet closure on a small point cloud: (1/2pi) sum of exterior
# angles of the polygonized boundary equals the Euler characteristic
from fractal_tiling_lab.grids import distance_transform, grid_from_bbox

rng = np.random.default_rng(3)
gg = grid_from_bbox(([-1.0, -1.0], [3.0, 3.0]), 1 / 128)
occ = np.zeros(gg.extents, bool)
idx = gg.indices_of(rng.random((30, 2)) * 2.0)
occ[idx[:, 0], idx[:, 1]] = True
field = distance_transform(gg.with_occupancy(occ))
for eps in (0.06, 0.15, 0.4):
    chi, turning = euler_and_turning(field, eps)
    print(f"eps={eps:.2f}: chi = {chi}, turning/(2 pi) = {turning:.4f}")
