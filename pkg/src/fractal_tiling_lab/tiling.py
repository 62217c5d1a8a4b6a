"""Self-similar tilings of a feasible open set.

Given an IFS and a feasible open set O, the generator is G = O minus the
union of the closed images S_i(cl O); the tiles are the images S_sigma(G)
over all finite words. Rasters resolve tiles down to a few cells and merge
everything smaller into a residual mask (those tiles are entirely within
any sampled eps of their own boundary, so cell counting stays exact for
eps at or above the resolution floor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, FtlError, ResolutionError
from .grids import DistanceField, Grid, Region, distance_transform, grid_from_bbox, inradius, rasterize
from .ifs import IFS, Similarity, Word, words_up_to_ratio


@dataclass
class TilingData:
    ifs: IFS
    O: Grid
    K_closure: Grid
    G: Grid
    Gamma: Grid
    g: float
    tile_words: list[Word]
    tile_union: Grid
    residual: Grid
    g_tilde: float | None = None

    @property
    def delta(self) -> float:
        return self.O.spacing

    def manifest(self) -> dict:
        """JSON-ready summary: resolved words with ratios, g, g~, masses."""
        return {
            "delta": self.delta,
            "g": self.g,
            "g_tilde": self.g_tilde,
            "lambda_O": self.O.area(),
            "lambda_G": self.G.area(),
            "lambda_Gamma": self.Gamma.area(),
            "residual_mass": self.residual.area(),
            "words": [
                {"word": str(w), "ratio": w.ratio(self.ifs)} for w in self.tile_words
            ],
        }


def _map_cells(sim: Similarity, source: Grid, target: Grid, dilate: bool = False) -> np.ndarray:
    """Occupancy of S(source-region) on the target grid, by inverse sampling.

    A target cell is marked iff S^{-1}(center) lies in an occupied source
    cell. With dilate=True the result grows by one cell (closure emulation,
    one-sided bias into the subtracted set).
    """
    inv = sim.inverse()
    if target.dim == 1:
        pts = target.centers(0)
        occ = source.lookup(inv(pts))
    else:
        X, Y = np.meshgrid(target.centers(0), target.centers(1), indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        occ = source.lookup(inv(pts)).reshape(target.extents)
    occ = occ.reshape(target.extents)
    if dilate:
        occ = ndimage.binary_dilation(occ, structure=np.ones((3,) * target.dim, bool))
    return occ


def set_map_raster(ifs: IFS, O: Grid, dilate: bool = False) -> np.ndarray:
    """Raster of Phi(O) = union of S_i(O) on O's own grid."""
    out = np.zeros(O.extents, dtype=bool)
    for m in ifs.maps:
        out |= _map_cells(m, O, O, dilate=dilate)
    return out


def _rasterize_tile(word: Word, ifs: IFS, G: Grid, target_occ: np.ndarray, target: Grid) -> None:
    """Mark the cells of S_sigma(G) inside target_occ (in place); word nonempty."""
    sim = word.map(ifs)
    inv = sim.inverse()
    # local bbox: image of G's bbox corners under the similarity
    lo = G.origin
    hi = G.origin + np.array(G.extents) * G.spacing
    if target.dim == 1:
        corners = np.array([lo[0], hi[0]])
        img = np.sort(np.atleast_1d(sim(corners)))
        i0 = max(0, int(np.floor((img[0] - target.origin[0]) / target.spacing)) - 1)
        i1 = min(target.extents[0], int(np.ceil((img[-1] - target.origin[0]) / target.spacing)) + 1)
        if i1 <= i0:
            return
        pts = target.origin[0] + (np.arange(i0, i1) + 0.5) * target.spacing
        target_occ[i0:i1] |= G.lookup(inv(pts))
        return
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    img = sim(corners)
    lo_i = np.floor((img.min(axis=0) - target.origin) / target.spacing).astype(int) - 1
    hi_i = np.ceil((img.max(axis=0) - target.origin) / target.spacing).astype(int) + 1
    lo_i = np.maximum(lo_i, 0)
    hi_i = np.minimum(hi_i, target.extents)
    if np.any(hi_i <= lo_i):
        return
    xs = target.origin[0] + (np.arange(lo_i[0], hi_i[0]) + 0.5) * target.spacing
    ys = target.origin[1] + (np.arange(lo_i[1], hi_i[1]) + 0.5) * target.spacing
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    hit = G.lookup(inv(pts)).reshape(X.shape)
    target_occ[lo_i[0]:hi_i[0], lo_i[1]:hi_i[1]] |= hit


def build_tiling(
    ifs: IFS,
    O_region: Region | Grid,
    delta: float,
    depth: int | None = None,
    bbox=None,
    resolve_cells: float = 4.0,
) -> TilingData:
    """Construct the tiling of a feasible open set at resolution delta.

    Tiles are resolved for every word with r_sigma * diam(O) > resolve_cells
    * delta; deeper (sub-cell) tiles land in the residual mask. An empty
    generator raster signals a full-dimensional attractor, for which no
    tiling exists.
    """
    if isinstance(O_region, Grid):
        O = O_region
    else:
        if bbox is None:
            lo, hi = O_region.bbox()
            pad = 2 * delta
            bbox = (np.atleast_1d(lo) - pad, np.atleast_1d(hi) + pad)
        O = rasterize(O_region, bbox, delta)
    if not O.occupancy.any():
        raise ConfigError("feasible set rasterized to nothing; check the region/bbox")

    phi_open = set_map_raster(ifs, O, dilate=False)
    phi_closed = ndimage.binary_dilation(phi_open, structure=np.ones((3,) * O.dim, bool))
    G = O.with_occupancy(O.occupancy & ~phi_closed)
    Gamma = O.with_occupancy(O.occupancy & ~phi_open)
    if not G.occupancy.any():
        raise FtlError(
            "empty generator: the attractor is full-dimensional (sum r_i^d = 1), "
            "no tiling exists"
        )
    K_closure = O.with_occupancy(
        ndimage.binary_dilation(O.occupancy, structure=np.ones((3,) * O.dim, bool))
    )

    lo, hi = O.origin, O.origin + np.array(O.extents) * O.spacing
    diam_O = float(np.linalg.norm(hi - lo))
    if depth is not None:
        words = words_up_to_ratio(ifs, 0.0, max_len=depth, truncate=True)
    else:
        r_min = resolve_cells * delta / diam_O
        words = words_up_to_ratio(ifs, r_min)

    tile_occ = np.zeros(O.extents, dtype=bool)
    for w in words:
        if len(w) == 0:
            tile_occ |= G.occupancy
        else:
            _rasterize_tile(w, ifs, G, tile_occ, O)
    tile_occ &= O.occupancy
    tile_union = O.with_occupancy(tile_occ)
    residual = O.with_occupancy(O.occupancy & ~tile_occ)

    return TilingData(
        ifs=ifs,
        O=O,
        K_closure=K_closure,
        G=G,
        Gamma=Gamma,
        g=inradius(G),
        tile_words=words,
        tile_union=tile_union,
        residual=residual,
    )


def attractor_raster(
    ifs: IFS, bbox, delta: float, x0: np.ndarray | None = None, stop_cells: float = 0.5
) -> Grid:
    """Raster of the attractor: cells hit by the word orbit of a seed point.

    Breadth-first over code space with per-cell deduplication (points landing
    in an already-claimed cell are snapped to its center before expanding, so
    memory stays proportional to the occupied cell count and the accumulated
    snapping error is below ~2 cells in Hausdorff distance). Branches stop
    once r_sigma * diam(bbox) <= stop_cells * delta.
    """
    g = grid_from_bbox(bbox, delta)
    lo = g.origin
    hi = g.origin + np.array(g.extents) * g.spacing
    # Phi(bbox) in bbox guarantees containment for any seed; rotated or
    # reflected maps can fail it even when bbox contains the attractor, in
    # which case every orbit point is checked instead (the orbit lies in F).
    corners = _box_corners(lo, hi)
    invariant = True
    for m in ifs.maps:
        img = np.atleast_2d(m(corners) if g.dim > 1 else m(corners).reshape(-1, 1))
        if (img < lo - 1e-9).any() or (img > hi + 1e-9).any():
            invariant = False

    diam = float(np.linalg.norm(hi - lo))
    thresh = stop_cells * delta / diam
    if x0 is None:
        x0 = ifs.maps[0].fixed_point()
    pts = np.atleast_2d(np.asarray(x0, dtype=float).reshape(1, -1))
    rs = np.ones(1)
    occ = np.zeros(g.extents, dtype=bool)

    def snap_dedupe(p, r):
        if not invariant:
            if (p < lo - 0.25 * delta).any() or (p > hi + 0.25 * delta).any():
                raise ResolutionError(
                    "bbox does not contain the attractor (orbit point escaped)"
                )
        idx = np.floor((p - lo) / delta).astype(np.int64)
        for ax in range(g.dim):
            np.clip(idx[:, ax], 0, g.extents[ax] - 1, out=idx[:, ax])
        key = idx[:, 0] if g.dim == 1 else idx[:, 0] * g.extents[1] + idx[:, 1]
        order = np.argsort(key, kind="stable")
        first = np.ones(order.size, dtype=bool)
        first[1:] = key[order][1:] != key[order][:-1]
        keep = order[first]
        centers = lo + (idx[keep] + 0.5) * delta
        return centers, r[keep]

    while True:
        active = rs > thresh
        if not active.any():
            break
        done_p, done_r = pts[~active], rs[~active]
        stacks_p = [done_p]
        stacks_r = [done_r]
        for m in ifs.maps:
            img = m(pts[active]) if g.dim > 1 else m(pts[active].ravel()).reshape(-1, 1)
            stacks_p.append(np.atleast_2d(img))
            stacks_r.append(m.ratio * rs[active])
        pts = np.concatenate(stacks_p, axis=0)
        rs = np.concatenate(stacks_r)
        pts, rs = snap_dedupe(pts, rs)

    idx = np.floor((pts - lo) / delta).astype(np.int64)
    sel = tuple(idx[:, ax] for ax in range(g.dim))
    occ[sel] = True
    return g.with_occupancy(occ)


def _box_corners(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if lo.shape[0] == 1:
        return np.array([lo, hi]).reshape(-1, 1)
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])


def relative_inradius(F_field: DistanceField, O: Grid) -> float:
    """sup of d(x, F) over the cells of O (the deepest point of O in F's field)."""
    if not O.occupancy.any():
        raise ResolutionError("relative inradius of an empty region")
    if O.dim == 1:
        pts = O.centers(0)[O.occupancy]
    else:
        ii, jj = np.nonzero(O.occupancy)
        pts = np.column_stack([
            O.origin[0] + (ii + 0.5) * O.spacing,
            O.origin[1] + (jj + 0.5) * O.spacing,
        ])
    vals = F_field.sample_at(pts, outside=np.nan)
    if np.isnan(vals).any():
        raise ResolutionError("O leaves the attractor's distance field")
    return float(vals.max())


@dataclass
class CentralOpenSet:
    grid: Grid
    neighbor_count: int
    degenerate: bool
    neighbor_cap: int


def central_open_set(
    ifs: IFS,
    bbox,
    delta: float,
    neighbor_cap: int = 4,
    F: Grid | None = None,
    strict_margin_cells: float = 1.0,
) -> CentralOpenSet:
    """Points strictly closer to the attractor than to every neighbor copy.

    Neighbor maps h = S_sigma^{-1} S_omega (first letters distinct) are
    enumerated with both word lengths capped at neighbor_cap, pruned to maps
    whose image of the attractor bbox meets the working bbox, and deduped.
    The result is resolution-faithful only: cells are kept when
    d(center, F) < d(center, H) - strict_margin_cells * delta.
    """
    if F is None:
        F = attractor_raster(ifs, bbox, delta)
    F_field = distance_transform(F)
    g = grid_from_bbox(bbox, delta)
    lo, hi = g.origin, g.origin + np.array(g.extents) * g.spacing

    # F's own bounding box (occupied extent), for pruning
    occ_idx = np.argwhere(F.occupancy)
    f_lo = F.origin + occ_idx.min(axis=0) * F.spacing
    f_hi = F.origin + (occ_idx.max(axis=0) + 1) * F.spacing
    f_corners = _box_corners(f_lo, f_hi)

    def image_meets_bbox(sim_inv_pair):
        inv_s, s_w = sim_inv_pair
        img = inv_s(np.atleast_2d(s_w(f_corners)))
        img = np.atleast_2d(img)
        if img.shape[1] != g.dim:
            img = img.reshape(-1, g.dim)
        pad = 0.5 * float(np.linalg.norm(f_hi - f_lo))
        return not ((img.max(axis=0) < lo - pad).any() or (img.min(axis=0) > hi + pad).any())

    # enumerate word pairs level-synchronously with dedupe on the composed map
    neighbors: list[tuple] = []
    seen: set = set()
    level = [(ifs.maps[i], ifs.maps[j]) for i in range(ifs.n) for j in range(ifs.n) if i != j]
    for _ in range(neighbor_cap):
        keep = []
        for s_sig, s_om in level:
            inv = s_sig.inverse()
            if not image_meets_bbox((inv, s_om)):
                continue
            key = _map_key(inv, s_om)
            if key not in seen:
                seen.add(key)
                neighbors.append((s_sig, s_om))
            keep.append((s_sig, s_om))
        nxt = []
        for s_sig, s_om in keep:
            for a in ifs.maps:
                for b in ifs.maps:
                    nxt.append((s_sig.compose(a), s_om.compose(b)))
        level = nxt

    if not neighbors:
        return CentralOpenSet(g.with_occupancy(np.ones(g.extents, bool)), 0, True, neighbor_cap)

    if g.dim == 1:
        centers = g.centers(0).reshape(-1, 1)
    else:
        X, Y = np.meshgrid(g.centers(0), g.centers(1), indexing="ij")
        centers = np.column_stack([X.ravel(), Y.ravel()])
    d_f = F_field.sample_at(centers)

    # d(x, h(F)) = (r_omega / r_sigma) * d(h^{-1} x, F) through the attractor
    # field; where h^{-1} x leaves the field, fall back to the distance to
    # F's bounding box (an underestimate, so V_c only shrinks)
    d_h = np.full(centers.shape[0], np.inf)
    for s_sig, s_om in neighbors:
        ratio_h = s_om.ratio / s_sig.ratio
        pre = np.atleast_2d(s_om.inverse()(np.atleast_2d(s_sig(centers))))
        pre = pre.reshape(-1, g.dim)
        val = F_field.sample_at(pre, outside=np.nan)
        nan = np.isnan(val)
        if nan.any():
            box_d = np.zeros(int(nan.sum()))
            q = pre[nan]
            for ax in range(g.dim):
                box_d += np.maximum(np.maximum(f_lo[ax] - q[:, ax], q[:, ax] - f_hi[ax]), 0.0) ** 2
            val[nan] = np.sqrt(box_d)
        d_h = np.minimum(d_h, ratio_h * val)

    occ = (d_f < d_h - strict_margin_cells * delta).reshape(g.extents)
    return CentralOpenSet(g.with_occupancy(occ), len(neighbors), False, neighbor_cap)


def _map_key(inv, s_om) -> tuple:
    m = np.round(inv.matrix @ (s_om.ratio * s_om.orthogonal_part), 9)
    t = np.round(inv(s_om.translation), 9)
    return (tuple(m.ravel()), tuple(np.atleast_1d(t).ravel()))
