"""Self-similar tilings: generator, residual set, tiles, central open set.

Coarse resolutions keep this instant; the library defaults go much finer.
"""

from fractal_tiling_lab.grids import IntervalUnion
from fractal_tiling_lab.presets import PRESETS, cantor_ifs
from fractal_tiling_lab.tiling import build_tiling, central_open_set

ifs = cantor_ifs()
td = build_tiling(ifs, IntervalUnion(((0.0, 1.0),)), 2.0**-12)
print("cantor tiling on O = (0,1):")
print("  lambda(G)     =", td.G.area(), " (exact 1/3)")
print("  lambda(Gamma) =", td.Gamma.area(), " (exact (1 - sum r^d) lambda(O) = 1/3)")
print("  inradius g    =", td.g, " (exact 1/6)")
print("  resolved tiles:", len(td.tile_words), " residual mass:", td.residual.area())

carpet = PRESETS["carpet"].scene.ifs
td2 = build_tiling(carpet, PRESETS["carpet"].scene.region, 2.0**-8)
print("\ncarpet tiling on the unit square:")
print("  lambda(G) =", td2.G.area(), " (middle square, exact 1/9)")
print("  g         =", td2.g, " (exact 1/6)")

# the central open set: points strictly closer to F than to any neighbor
# copy; for the middle-thirds system it is exactly (-1/2, 3/2)
vc = central_open_set(ifs, ([-0.7], [1.7]), 2.0**-11)
xs = vc.grid.centers(0)[vc.grid.occupancy]
print("\ncantor central open set: [", xs.min(), ",", xs.max(), "] from", vc.neighbor_count, "neighbor maps")
