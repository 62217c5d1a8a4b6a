"""Scene orchestration: raster -> distance fields -> samples -> formulas.

A SceneBundle memoizes every expensive product (attractor raster, distance
fields, sorted-value samplers, tilings, condition checks) so the CLI and
the test suite can ask for results in any order without recomputation.
Bundles are cached per (preset, delta); everything inside is immutable
after construction, so sharing is safe.
"""

from __future__ import annotations

import math
import numpy as np

from . import conditions, contents, curvature, volumes
from .errors import ConfigError, PreconditionError
from .grids import DistanceField, Grid, distance_transform, inner_distance, inradius
from .ifs import DimensionData, dimension_data
from .levelsets import LevelSetExtractor
from .presets import Preset, Scene, get_preset
from .tiling import TilingData, attractor_raster, build_tiling, central_open_set, relative_inradius

CONTENT_METHODS = (
    "generator_integral",
    "tiling_via_h",
    "gatzouras",
    "relative_generator",
    "direct_limit",
    "direct_average",
    "s_content",
)


class SceneBundle:
    def __init__(self, scene: Scene, curvature_ppd: int = 32):
        scene.validate()
        self.scene = scene
        self.ifs = scene.ifs
        self.delta = scene.delta
        self.d = scene.ifs.ambient_dim
        self.curvature_ppd = curvature_ppd
        self._cache: dict = {}

    def _memo(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- dimensions ---------------------------------------------------------

    @property
    def dim_data(self) -> DimensionData:
        return self._memo("dim", lambda: dimension_data(self.ifs))

    @property
    def lattice_base(self) -> float | None:
        return self.dim_data.lattice_base if self.dim_data.lattice else None

    # -- rasters and fields -------------------------------------------------

    @property
    def tiling(self) -> TilingData:
        def build():
            region = self.scene.region
            if region == "central":
                lo, hi = np.asarray(self.scene.f_bbox[0], float), np.asarray(self.scene.f_bbox[1], float)
                pad = 0.3 * float(np.linalg.norm(hi - lo))
                vc = central_open_set(self.ifs, (lo - pad, hi + pad), self.delta)
                return build_tiling(self.ifs, vc.grid, self.delta)
            return build_tiling(self.ifs, region, self.delta)

        return self._memo("tiling", build)

    @property
    def O(self) -> Grid:
        return self.tiling.O

    @property
    def F_tight(self) -> Grid:
        def build():
            o = self.O
            lo = np.asarray(self.scene.f_bbox[0], float)
            hi = np.asarray(self.scene.f_bbox[1], float)
            # snap outward onto O's cell lattice so every grid here is aligned
            lo_s = o.origin + (np.floor((lo - o.origin) / self.delta) - 1) * self.delta
            hi_s = o.origin + (np.ceil((hi - o.origin) / self.delta) + 1) * self.delta
            return attractor_raster(self.ifs, (lo_s, hi_s), self.delta)

        return self._memo("F_tight", build)

    def F_field(self, pad: float) -> DistanceField:
        pad_cells = int(math.ceil(pad / self.delta)) + 1

        def build():
            o, f = self.O, self.F_tight
            lo = np.minimum(o.origin, f.origin) - pad_cells * self.delta
            hi = np.maximum(
                o.origin + np.array(o.extents) * self.delta,
                f.origin + np.array(f.extents) * self.delta,
            ) + pad_cells * self.delta
            n = np.round((hi - lo) / self.delta).astype(int)
            occ = np.zeros(tuple(n), dtype=bool)
            off = np.round((f.origin - lo) / self.delta).astype(int)
            sel = tuple(
                slice(off[ax], off[ax] + f.extents[ax]) for ax in range(self.d)
            )
            occ[sel] = f.occupancy
            return distance_transform(Grid(lo, self.delta, occ))

        return self._memo(("F_field", pad_cells), build)

    @property
    def field_small(self) -> DistanceField:
        """Field padded for everything up to ~1.25 * g_tilde."""
        pad = self._memo("pad_small", lambda: self._pick_small_pad())
        return self.F_field(pad)

    def _pick_small_pad(self) -> float:
        lo, hi = np.asarray(self.scene.f_bbox[0], float), np.asarray(self.scene.f_bbox[1], float)
        pad = max(0.25 * float(np.linalg.norm(hi - lo)), 64 * self.delta)
        while True:
            field = self.F_field(pad)
            gt = relative_inradius(field, self.O)
            if 1.3 * gt + 8 * self.delta <= pad:
                return pad
            pad *= 1.6

    @property
    def field_full(self) -> DistanceField:
        """Field padded past eps = 1 for the unit-normalized content difference."""
        return self.F_field(1.05)

    @property
    def g(self) -> float:
        return self.tiling.g

    @property
    def g_tilde(self) -> float:
        return self._memo("g_tilde", lambda: relative_inradius(self.field_small, self.O))

    # -- masks on field grids -----------------------------------------------

    def embed_mask(self, grid: Grid, field: DistanceField) -> np.ndarray:
        """Re-index a small aligned grid's occupancy onto a field's grid."""
        return grid.embed_into(field.origin, field.extents)

    # -- eps grids ------------------------------------------------------------

    @property
    def grid_G(self) -> volumes.EpsGrid:
        return self._memo(
            "grid_G",
            lambda: volumes.make_eps_grid(
                self.delta, inradius(self.tiling.G), self.scene.eps_per_decade, self.lattice_base
            ),
        )

    @property
    def grid_rel(self) -> volumes.EpsGrid:
        return self._memo(
            "grid_rel",
            lambda: volumes.make_eps_grid(
                self.delta, self.g_tilde, self.scene.eps_per_decade, self.lattice_base
            ),
        )

    @property
    def grid_full(self) -> volumes.EpsGrid:
        return self._memo(
            "grid_full",
            lambda: volumes.make_eps_grid(
                self.delta, 1.0, self.scene.eps_per_decade, self.lattice_base
            ),
        )

    @property
    def grid_curv(self) -> volumes.EpsGrid:
        # the top stops a hair below the raster depth so the deepest core is
        # still alive at the last node (the depth itself is a critical value)
        return self._memo(
            "grid_curv",
            lambda: volumes.make_eps_grid(
                self.delta, self.g_tilde * (1 - 1e-6), self.curvature_ppd, self.lattice_base
            ),
        )

    @property
    def grid_curv_G(self) -> volumes.EpsGrid:
        return self._memo(
            "grid_curv_G",
            lambda: volumes.make_eps_grid(
                self.delta, inradius(self.tiling.G) * (1 - 1e-6), self.curvature_ppd,
                self.lattice_base,
            ),
        )

    # -- volume samples -------------------------------------------------------

    @property
    def V_G(self) -> volumes.VolumeSamples:
        return self._memo(
            "V_G",
            lambda: volumes.sample_inner_volume(self.tiling.G, self.grid_G, "V_G", "G"),
        )

    @property
    def V_T(self) -> volumes.VolumeSamples:
        def build():
            t = self.tiling
            return volumes.sample_inner_volume(
                t.tile_union, self.grid_G, "V_T", "T", extra_area=t.residual.area()
            )

        return self._memo("V_T", build)

    @property
    def h(self) -> volumes.VolumeSamples:
        return self._memo(
            "h",
            lambda: volumes.h_function(self.V_T, self.ifs, inradius(self.tiling.G), self.grid_G),
        )

    @property
    def F_on_O(self) -> volumes.VolumeSamples:
        return self._memo(
            "F_on_O",
            lambda: volumes.sample_restricted_volume(self.field_small, self.O, self.grid_rel, "O"),
        )

    @property
    def F_on_Gamma(self) -> volumes.VolumeSamples:
        return self._memo(
            "F_on_Gamma",
            lambda: volumes.sample_restricted_volume(
                self.field_small, self.tiling.Gamma, self.grid_rel, "Gamma"
            ),
        )

    @property
    def phi(self) -> volumes.VolumeSamples:
        return self._memo(
            "phi",
            lambda: volumes.phi_function(self.F_on_O, self.ifs, self.g_tilde, self.grid_rel),
        )

    @property
    def F_full_volumes(self) -> volumes.VolumeSamples:
        def build():
            samples = volumes.sample_parallel_volume(self.field_full, self.grid_full)
            # the fully padded field is only needed for these samples; drop
            # the few hundred MB once they are frozen
            pad_cells = int(math.ceil(1.05 / self.delta)) + 1
            self._cache.pop(("F_field", pad_cells), None)
            return samples

        return self._memo("F_full", build)

    @property
    def R_d(self) -> volumes.VolumeSamples:
        return self._memo(
            "R_d",
            lambda: volumes.gatzouras_rd(self.F_full_volumes, self.ifs, self.grid_full, a=1.0),
        )

    # -- checks ----------------------------------------------------------------

    def checks(self) -> dict[str, conditions.CheckReport]:
        def build():
            t = self.tiling
            field = self.field_small
            out = {
                "osc": conditions.check_osc(self.ifs, t.O),
                "strong": conditions.check_strong(t.O, field),
                "compatible": conditions.check_compatibility(t.G, field),
                "projection": conditions.check_projection(
                    self.ifs, t.O, field, self.g_tilde
                ),
            }
            if self.d == 2:
                eps_bn = np.geomspace(8 * self.delta, max(0.5 * self.g_tilde, 16 * self.delta), 12)
                out["boundary_null"] = conditions.check_boundary_null(
                    t.O, field, self.d - 1, eps_bn
                )
            else:
                out["boundary_null"] = conditions.check_boundary_null(
                    t.O, field, 0, np.array([self.delta * 8])
                )
            return out

        return self._memo("checks", build)

    # -- curvature samples -------------------------------------------------------

    @property
    def field_extractor(self) -> LevelSetExtractor:
        return self._memo("extractor_small", lambda: LevelSetExtractor(self.field_small))

    def relative_curvature(self, k: int, region: str = "G") -> curvature.CurvatureSamples:
        """C_k(F_eps, .) localized to the generator (default) or to O.

        One marching pass per region serves both k orders in d=2. The O
        localization backs the direct estimators: the relative fractal
        curvature w.r.t. a strong O coincides with the global one, while the
        outer halo would pollute finite windows in the compatible case.
        """
        key = ("rel_curv", k, region)
        if key in self._cache:
            return self._cache[key]
        mask_grid = self.tiling.G if region == "G" else self.tiling.O
        if self.d == 1:
            if k != 0:
                raise ConfigError("d=1 supports k=0 only")
            samples = curvature.sample_curvature(
                self.field_small, 0, self.grid_curv,
                self.embed_mask(mask_grid, self.field_small), region,
            )
            self._cache[key] = samples
            return samples
        pkey = ("rel_profiles", region)
        if pkey not in self._cache:
            mask = self.embed_mask(mask_grid, self.field_small)
            self._cache[pkey] = curvature.measure_profiles(
                self.field_small, self.grid_curv.eps, mask, self.field_extractor
            )
        lengths, turns, abs_turns = self._cache[pkey]
        if k == 1:
            samples = curvature.CurvatureSamples(
                self.grid_curv.eps, 1, 0.5 * lengths, 0.5 * lengths, self.delta, region
            )
        elif k == 0:
            samples = curvature.CurvatureSamples(
                self.grid_curv.eps, 0, turns / (2 * math.pi),
                abs_turns / (2 * math.pi), self.delta, region,
            )
        else:
            raise ConfigError(f"no curvature order k={k} in d={self.d}")
        self._cache[key] = samples
        return samples

    def generator_curvature_samples(self, k: int) -> curvature.CurvatureSamples:
        def build():
            return curvature.inner_curvature_samples(
                _crop(self.tiling.G, 4), k, self.grid_curv_G, "G_core"
            )

        return self._memo(("gen_curv", k), build)

    def tiling_curvature_samples(self, k: int) -> curvature.CurvatureSamples:
        field = self._memo("T_inner", lambda: inner_distance(self.tiling.tile_union))
        ex = None
        if self.d == 2:
            ex = self._memo("T_inner_ex", lambda: LevelSetExtractor(field))
        return self._memo(
            ("til_curv", k),
            lambda: curvature.sample_curvature(field, k, self.grid_curv_G, None, "T_core", ex),
        )

    @property
    def surface_samples(self) -> volumes.VolumeSamples:
        """H^{d-1}(bd F_eps ^ G) on the curvature grid (full length, not halved)."""

        def build():
            rel = self.relative_curvature(self.d - 1)
            return volumes.VolumeSamples(
                rel.eps, 2.0 * rel.values, "surface", self.delta, "G"
            )

        return self._memo("surface", build)

    # -- contents ----------------------------------------------------------------

    def content(self, method: str) -> contents.ContentResult:
        key = ("content", method)
        if key in self._cache:
            return self._cache[key]
        dd = self.dim_data
        D, eta, d = dd.D, dd.eta, self.d
        note = dd.note
        if method == "generator_integral":
            res = contents.generator_content(self.V_G, D, eta, d, inradius(self.tiling.G), lattice_note=note)
        elif method == "tiling_via_h":
            res = contents.tiling_content_via_h(self.h, D, eta, d, inradius(self.tiling.G), lattice_note=note)
        elif method == "gatzouras":
            res = contents.gatzouras_content(self.R_d, D, eta, d, a=1.0, lattice_note=note)
        elif method == "relative_generator":
            checks = self.checks()
            res = contents.relative_generator_content(
                self.F_on_Gamma, D, eta, d, self.g_tilde, self.tiling.Gamma.area(),
                checks=[checks["strong"], checks["projection"]], lattice_note=note,
            )
        elif method in ("direct_limit", "direct_average"):
            # Restricting to O only pays when bd O lies on the attractor
            # (compatible case): there the outer halo per(O)*eps decays like
            # eps^(D-d+1) and would swamp the window. Otherwise (and always
            # in d=1, where the outer collars belong to the scaled periodic
            # regime) the full parallel volume settles much faster.
            restrict = d == 2 and self.checks()["compatible"].passed
            samples = self.F_on_O if restrict else self.F_full_volumes
            limit, average = contents.direct_content(
                samples, D, d, window=self.direct_window(restrict),
                lattice_base=self.lattice_base, lattice_note=note,
            )
            self._cache[("content", "direct_limit")] = limit
            self._cache[("content", "direct_average")] = average
            return self._cache[key]
        elif method == "s_content":
            checks = self.checks()
            res = contents.s_content(
                self.surface_samples, D, eta, d, self.g_tilde,
                checks=[checks["strong"], checks["projection"], checks["boundary_null"]],
                lattice_note=note,
            )
        else:
            raise ConfigError(f"unknown content method {method!r}")
        self._cache[key] = res
        return res

    def direct_window(self, restrict_to_O: bool = False) -> tuple[float, float]:
        if restrict_to_O:
            lo = 4 * self.delta
            hi = max(0.55 * self.g_tilde, lo * 10.0**1.5 * 1.02)
            return lo, min(hi, self.grid_rel.eps[-1])
        if self.d == 1:
            lo = 16 * self.delta
            scale = float(np.ptp(np.asarray(self.scene.f_bbox, float)))
            hi = min(max(0.3 * scale, lo * 10.0**1.5 * 1.02), self.grid_full.eps[-1] * 0.9)
            return lo, hi
        lo = 4 * self.delta
        hi = min(max(0.55 * self.g_tilde, lo * 10.0**1.5 * 1.02), self.grid_full.eps[-1] * 0.9)
        return lo, hi

    def content_table(self, methods=CONTENT_METHODS) -> dict[str, object]:
        """One row per method; refusals become rows with the failure reason."""
        rows = {}
        for m in methods:
            try:
                rows[m] = self.content(m)
            except PreconditionError as exc:
                rows[m] = {"refused": str(exc)}
        return rows


def _crop(grid: Grid, margin: int) -> Grid:
    idx = np.argwhere(grid.occupancy)
    lo = np.maximum(idx.min(axis=0) - margin, 0)
    hi = np.minimum(idx.max(axis=0) + margin + 1, grid.extents)
    sel = tuple(slice(lo[ax], hi[ax]) for ax in range(grid.dim))
    return Grid(grid.origin + lo * grid.spacing, grid.spacing, grid.occupancy[sel])


_BUNDLES: dict = {}


def get_bundle(preset: str | Preset, delta: float | None = None, **kw) -> SceneBundle:
    p = get_preset(preset) if isinstance(preset, str) else preset
    scene = p.scene
    if delta is not None and delta != scene.delta:
        scene = Scene(scene.ifs, scene.region, delta, scene.f_bbox, scene.eps_per_decade, scene.name)
    key = (p.name, scene.delta, tuple(sorted(kw.items())))
    if key not in _BUNDLES:
        _BUNDLES[key] = SceneBundle(scene, **kw)
    return _BUNDLES[key]
