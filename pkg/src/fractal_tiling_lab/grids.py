"""Rasterized sets and exact Euclidean distance fields.

Everything downstream (parallel volumes, tube functions, curvature
extraction) measures against these grids, so the distance transform must
be exact per cell center: thresholding at eps feeds eps -> 0 limits and
cannot tolerate chamfer bias. Cells are occupied iff their center lies in
the region (open-set semantics).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from scipy import ndimage

from .errors import ConfigError, ResolutionError

MAX_CELLS = 1 << 27  # ~134M cells; rasterize refuses beyond this


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid:
    """Uniform binary raster. Axis order is (x,) in 1d and (x, y) in 2d."""

    origin: np.ndarray
    spacing: float
    occupancy: np.ndarray

    def __post_init__(self):
        origin = np.atleast_1d(np.asarray(self.origin, dtype=float))
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != origin.shape[0]:
            raise ConfigError("occupancy rank must match origin dimension")
        if self.spacing <= 0:
            raise ConfigError("spacing must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "occupancy", occ)

    @property
    def dim(self) -> int:
        return self.occupancy.ndim

    @property
    def extents(self) -> tuple[int, ...]:
        return self.occupancy.shape

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def count(self) -> int:
        return int(self.occupancy.sum())

    def area(self) -> float:
        """Lebesgue estimate of the occupied region."""
        return self.count() * self.cell_volume

    def centers(self, axis: int) -> np.ndarray:
        n = self.extents[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.spacing

    def indices_of(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.dim == 1 and p.ndim == 1:
            p = p[:, None]
        return np.floor((p - self.origin) / self.spacing).astype(np.int64)

    def lookup(self, points: np.ndarray, default: bool = False) -> np.ndarray:
        """Occupancy at the cells containing the given points (default outside)."""
        idx = self.indices_of(points)
        ok = np.ones(idx.shape[0], dtype=bool)
        for ax in range(self.dim):
            ok &= (idx[:, ax] >= 0) & (idx[:, ax] < self.extents[ax])
        out = np.full(idx.shape[0], default, dtype=bool)
        if ok.any():
            sel = tuple(idx[ok, ax] for ax in range(self.dim))
            out[ok] = self.occupancy[sel]
        return out

    def with_occupancy(self, occ: np.ndarray) -> "Grid":
        return Grid(self.origin, self.spacing, occ)

    def embed_into(self, origin: np.ndarray, extents: tuple[int, ...]) -> np.ndarray:
        """Occupancy re-indexed onto a larger lattice-aligned grid."""
        off = (self.origin - np.atleast_1d(origin)) / self.spacing
        off_i = np.round(off).astype(int)
        if np.any(np.abs(off - off_i) > 1e-6):
            raise ConfigError("grids are not lattice-aligned")
        out = np.zeros(extents, dtype=bool)
        sel = tuple(
            slice(off_i[ax], off_i[ax] + self.extents[ax]) for ax in range(self.dim)
        )
        out[sel] = self.occupancy
        return out

    def boundary_cells(self) -> np.ndarray:
        """Occupied cells 4-adjacent to an unoccupied (or outside) cell."""
        occ = self.occupancy
        padded = np.pad(occ, 1, constant_values=False)
        inner_all = np.ones_like(occ)
        for ax in range(self.dim):
            lo = [slice(1, -1)] * self.dim
            hi = [slice(1, -1)] * self.dim
            lo[ax] = slice(0, -2)
            hi[ax] = slice(2, None)
            inner_all &= padded[tuple(lo)] & padded[tuple(hi)]
        return occ & ~inner_all

    def boundary_cell_count(self) -> int:
        return int(self.boundary_cells().sum())

    def to_pgm(self, path) -> None:
        """Binary PGM (P5), occupied = white. 1d grids export as a 1-row image."""
        occ = self.occupancy
        img = (occ[None, :] if self.dim == 1 else occ.T[::-1])  # y up
        data = np.where(img, 255, 0).astype(np.uint8)
        with open(path, "wb") as fh:
            fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
            fh.write(data.tobytes())

    def to_csv(self, path) -> None:
        idx = np.argwhere(self.occupancy)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"i{ax}" for ax in range(self.dim)) + "\n")
            for row in idx:
                fh.write(",".join(str(int(v)) for v in row) + "\n")


def grid_from_bbox(bbox, delta: float, cap: int = MAX_CELLS) -> Grid:
    """Empty grid covering bbox = (lo, hi) with uniform spacing delta."""
    lo = np.atleast_1d(np.asarray(bbox[0], dtype=float))
    hi = np.atleast_1d(np.asarray(bbox[1], dtype=float))
    n = np.maximum(1, np.round((hi - lo) / delta).astype(int))
    if int(np.prod(n)) > cap:
        raise ResolutionError(
            f"grid of {int(np.prod(n))} cells exceeds the cap of {cap}"
        )
    return Grid(lo, delta, np.zeros(tuple(n), dtype=bool))


def aligned(a: Grid, b: Grid) -> bool:
    return (
        a.spacing == b.spacing
        and a.extents == b.extents
        and np.allclose(a.origin, b.origin)
    )


# ---------------------------------------------------------------------------
# regions


class Region:
    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError


@dataclass(frozen=True)
class IntervalUnion(Region):
    """Union of open intervals on the line."""

    intervals: tuple[tuple[float, float], ...]

    def contains(self, points):
        x = np.asarray(points, dtype=float).reshape(-1)
        out = np.zeros(x.shape[0], dtype=bool)
        for a, b in self.intervals:
            out |= (x > a) & (x < b)
        return out

    def bbox(self):
        a = min(iv[0] for iv in self.intervals)
        b = max(iv[1] for iv in self.intervals)
        return np.array([a]), np.array([b])


@dataclass(frozen=True)
class ConvexPolygon(Region):
    """Open convex polygon, vertices in counterclockwise order."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ConfigError("polygon needs >= 3 planar vertices")
        # enforce ccw orientation
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", v)

    def contains(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        v = self.vertices
        out = np.ones(p.shape[0], dtype=bool)
        for i in range(v.shape[0]):
            a, b = v[i], v[(i + 1) % v.shape[0]]
            edge = b - a
            out &= (edge[0] * (p[:, 1] - a[1]) - edge[1] * (p[:, 0] - a[0])) > 0
        return out

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(frozen=True)
class PolygonUnion(Region):
    polygons: tuple[ConvexPolygon, ...]

    def contains(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.zeros(p.shape[0], dtype=bool)
        for poly in self.polygons:
            out |= poly.contains(p)
        return out

    def bbox(self):
        los, his = zip(*(poly.bbox() for poly in self.polygons))
        return np.min(los, axis=0), np.max(his, axis=0)


@dataclass(frozen=True)
class HalfspaceIntersection(Region):
    """Open set {x : A x < b}."""

    normals: np.ndarray
    offsets: np.ndarray

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        return np.all(p @ np.asarray(self.normals, float).T < np.asarray(self.offsets, float), axis=1)

    def bbox(self):
        raise ConfigError("half-space intersections need an explicit raster bbox")


@dataclass(frozen=True)
class GridRegion(Region):
    grid: Grid

    def contains(self, points):
        return self.grid.lookup(points)

    def bbox(self):
        lo = self.grid.origin
        hi = lo + np.array(self.grid.extents) * self.grid.spacing
        return lo, hi


def rasterize(region: Region, bbox, delta: float, cap: int = MAX_CELLS) -> Grid:
    """Center-in-region raster of an open set on the given bbox."""
    g = grid_from_bbox(bbox, delta, cap)
    if g.dim == 1:
        pts = g.centers(0)
        occ = region.contains(pts)
    else:
        X, Y = np.meshgrid(g.centers(0), g.centers(1), indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        occ = region.contains(pts).reshape(g.extents)
    return g.with_occupancy(occ.reshape(g.extents))


# ---------------------------------------------------------------------------
# distance fields


@dataclass(frozen=True)
class DistanceField:
    """Per-cell Euclidean distance to the nearest occupied cell center."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def extents(self) -> tuple[int, ...]:
        return self.values.shape

    def centers(self, axis: int) -> np.ndarray:
        n = self.extents[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.spacing

    def sample_at(self, points: np.ndarray, outside=np.inf) -> np.ndarray:
        """Nearest-cell lookup of the field at arbitrary points."""
        p = np.asarray(points, dtype=float)
        if self.dim == 1 and p.ndim == 1:
            p = p[:, None]
        idx = np.floor((p - self.origin) / self.spacing).astype(np.int64)
        ok = np.ones(idx.shape[0], dtype=bool)
        for ax in range(self.dim):
            ok &= (idx[:, ax] >= 0) & (idx[:, ax] < self.extents[ax])
        out = np.full(idx.shape[0], outside, dtype=float)
        if ok.any():
            sel = tuple(idx[ok, ax] for ax in range(self.dim))
            out[ok] = self.values[sel]
        return out

    def sorted_values(self, mask: np.ndarray | None = None) -> np.ndarray:
        vals = self.values if mask is None else self.values[mask]
        return np.sort(vals, axis=None)

    def to_raw(self, path) -> None:
        """float32 raw dump next to a JSON header describing the geometry."""
        arr = self.values.astype(np.float32)
        path = Path(path)
        arr.tofile(path)
        header = {
            "dtype": "float32",
            "shape": list(arr.shape),
            "origin": [float(v) for v in self.origin],
            "spacing": self.spacing,
            "order": "C",
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(header, sort_keys=True), encoding="utf-8"
        )


def distance_transform(grid: Grid) -> DistanceField:
    """Exact EDT: distance from every cell center to the nearest occupied one.

    Matches the all-pairs brute force exactly (integer-squared arithmetic
    inside scipy's exact transform).
    """
    if not grid.occupancy.any():
        raise ResolutionError("distance transform of an empty grid")
    vals = ndimage.distance_transform_edt(~grid.occupancy) * grid.spacing
    # float32 storage: ~1e-7 relative, far below the half-cell tolerances,
    # and it halves the footprint of the large padded fields
    return DistanceField(grid.origin, grid.spacing, vals.astype(np.float32))


def inner_distance(grid: Grid) -> DistanceField:
    """Distance to the complement (distance-to-boundary proxy inside the set).

    Values are positive on occupied cells and 0 on the complement; cells on
    the raster border count the outside as complement.
    """
    occ = np.pad(grid.occupancy, 1, constant_values=False)
    vals = ndimage.distance_transform_edt(occ) * grid.spacing
    inner = vals[tuple(slice(1, -1) for _ in range(grid.dim))]
    return DistanceField(grid.origin, grid.spacing, inner.astype(np.float32))


def parallel_volume(f: DistanceField, eps: float) -> float:
    """Lebesgue volume of the eps-parallel set, by cell counting."""
    if eps < 0:
        raise ConfigError("eps must be >= 0")
    return float(np.count_nonzero(f.values <= eps)) * f.spacing**f.dim


def inner_parallel_volume(region: Grid, eps: float) -> float:
    """Volume of the inner eps-collar {x in U : d(x, U^c) <= eps}."""
    if eps < 0:
        raise ConfigError("eps must be >= 0")
    inner = inner_distance(region)
    vals = inner.values[region.occupancy]
    return float(np.count_nonzero((vals > 0) & (vals <= eps))) * region.cell_volume


def inradius(region: Grid) -> float:
    """Largest distance-to-complement over the region's cells."""
    if not region.occupancy.any():
        raise ResolutionError("inradius of an empty region")
    return float(inner_distance(region).values.max())
