"""Numerical checks for the structural hypotheses behind each formula.

Every verdict is resolution-qualified: a raster can falsify or support a
set-theoretic condition at spacing delta, never prove it. Fail verdicts
always carry a witness (a cell, an eps interval, or a measured defect);
seam tolerances scale with measured boundary-cell counts rather than fixed
constants. The metric projection is never evaluated pointwise: the
projection condition is tested through its parallel-set identity
lambda_d((F_eps \\ (S_i F)_eps) ^ S_i O) = 0, which is robust on rasters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .grids import DistanceField, Grid
from .ifs import IFS
from .levelsets import LevelSetExtractor, contour_components
from .tiling import _map_cells

CHECK_NAMES = ("osc", "strong", "compatible", "projection", "boundary_null")


@dataclass
class CheckReport:
    name: str
    verdict: str  # pass | fail | inconclusive
    resolution: float
    witness: dict | None = None
    details: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.name not in CHECK_NAMES:
            raise ConfigError(f"unknown check name {self.name!r}")
        if self.verdict not in ("pass", "fail", "inconclusive"):
            raise ConfigError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "fail" and self.witness is None:
            raise ConfigError("fail verdicts must carry a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "resolution": self.resolution,
            "witness": self.witness,
            "details": self.details,
        }


def _erode(occ: np.ndarray, iterations: int = 1) -> np.ndarray:
    return ndimage.binary_erosion(
        occ, structure=ndimage.generate_binary_structure(occ.ndim, 1),
        iterations=iterations, border_value=0,
    )


def _cell_point(grid: Grid, idx) -> list[float]:
    return [float(grid.origin[ax] + (idx[ax] + 0.5) * grid.spacing) for ax in range(grid.dim)]


def check_osc(ifs: IFS, O: Grid) -> CheckReport:
    """Open set condition: S_i O inside O, images pairwise disjoint.

    Containment and overlaps are judged up to a one-cell seam; overlap that
    survives a one-cell erosion is a hard fail, seam-only contact is
    inconclusive.
    """
    delta = O.spacing
    images = [_map_cells(m, O, O) for m in ifs.maps]
    for i, img in enumerate(images):
        outside = img & ~O.occupancy
        if outside.any():
            hard = outside & ~_dilate_edge(O.occupancy)
            idx = np.argwhere(hard if hard.any() else outside)[0]
            if hard.any():
                return CheckReport(
                    "osc", "fail", delta,
                    {"map": i, "cell": _cell_point(O, idx), "reason": "S_i O leaves O"},
                )
    seam_only = False
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            overlap = images[i] & images[j]
            if not overlap.any():
                continue
            hard = _erode(images[i]) & _erode(images[j])
            if hard.any():
                idx = np.argwhere(hard)[0]
                return CheckReport(
                    "osc", "fail", delta,
                    {"maps": [i, j], "cell": _cell_point(O, idx),
                     "overlap_cells": int(overlap.sum()), "reason": "interior overlap"},
                )
            seam_only = True
    if seam_only:
        return CheckReport("osc", "inconclusive", delta, None, {"note": "seam-layer contact only"})
    return CheckReport("osc", "pass", delta)


def _dilate_edge(occ: np.ndarray) -> np.ndarray:
    """Cells of occ at least 2 cells away from its complement."""
    return _erode(occ, iterations=2)


def check_strong(O: Grid, F_field: DistanceField, interior_cells: int = 4) -> CheckReport:
    """Strong feasibility: the open set actually meets the attractor.

    The interior margin must exceed the attractor raster's snapping slop
    (about two cells), otherwise boundary contact is indistinguishable from
    a genuine interior intersection.
    """
    delta = O.spacing
    interior = _erode(O.occupancy, iterations=interior_cells)
    if not interior.any():
        return CheckReport(
            "strong", "fail", delta,
            {"reason": "no interior cells at this resolution"},
        )
    pts = _cell_points(O, interior)
    dists = F_field.sample_at(pts)
    best = int(np.argmin(dists))
    if dists[best] <= delta:
        return CheckReport(
            "strong", "pass", delta,
            details={"witness_point": [float(v) for v in np.atleast_1d(pts[best])]},
        )
    return CheckReport(
        "strong", "fail", delta,
        {"min_distance_to_F": float(dists[best]),
         "at": [float(v) for v in np.atleast_1d(pts[best])],
         "reason": "no interior cell within one cell of F"},
    )


def _cell_points(grid: Grid, occ: np.ndarray) -> np.ndarray:
    if grid.dim == 1:
        return grid.centers(0)[occ].reshape(-1, 1)
    ii, jj = np.nonzero(occ)
    return np.column_stack([
        grid.origin[0] + (ii + 0.5) * grid.spacing,
        grid.origin[1] + (jj + 0.5) * grid.spacing,
    ])


def check_compatibility(G: Grid, F_field: DistanceField, tol_cells: int = 2) -> CheckReport:
    """Compatibility: the generator boundary lies on the attractor."""
    delta = G.spacing
    boundary = G.boundary_cells()
    if not boundary.any():
        return CheckReport("compatible", "inconclusive", delta, None,
                           {"note": "generator has no boundary cells"})
    pts = _cell_points(G, boundary)
    dists = F_field.sample_at(pts)
    worst = int(np.argmax(dists))
    if dists[worst] <= tol_cells * delta:
        return CheckReport("compatible", "pass", delta,
                           details={"max_boundary_distance": float(dists[worst])})
    return CheckReport(
        "compatible", "fail", delta,
        {"max_boundary_distance": float(dists[worst]),
         "at": [float(v) for v in np.atleast_1d(pts[worst])],
         "tolerance": tol_cells * delta,
         "reason": "generator boundary leaves the attractor"},
    )


def check_projection(
    ifs: IFS, O: Grid, F_field: DistanceField, g_tilde: float,
    eps_samples: np.ndarray | None = None, seam_factor: float = 4.0,
) -> CheckReport:
    """Projection condition, tested through the parallel-set identity.

    For each map the defect volume lambda((F_eps \\ (S_i F)_eps) ^ S_i O)
    must stay at seam scale for all sampled eps <= r_i g~; a genuine failure
    produces a defect bounded below on an eps interval, which is returned as
    the witness.
    """
    delta = O.spacing
    d = O.dim
    worst = None
    for i, m in enumerate(ifs.maps):
        img = _map_cells(m, O, O)
        if not img.any():
            continue
        pts = _cell_points(O, img)
        d_F = F_field.sample_at(pts)
        d_SiF = m.ratio * F_field.sample_at(m.inverse()(pts))
        top = m.ratio * g_tilde
        if eps_samples is None:
            lo = 4 * delta
            if top <= lo * 1.05:
                continue
            eps_i = np.geomspace(lo, top, 24)
        else:
            eps_i = np.asarray(eps_samples, dtype=float)
            eps_i = eps_i[eps_i <= top]
        fail_eps = []
        for e in eps_i:
            defect = float(np.count_nonzero((d_F <= e) & (d_SiF > e))) * delta**d
            # the half-cell noise floor scales with the eps-interface inside
            # S_i O, not with its perimeter: compare against the collar-end
            # cell count at this eps
            interface = int(np.count_nonzero(np.abs(d_F - e) <= delta * math.sqrt(d)))
            tol = seam_factor * delta * max(interface, 4) * delta ** (d - 1)
            if defect > tol:
                fail_eps.append((float(e), defect, tol))
        if fail_eps:
            peak = max(f[1] for f in fail_eps)
            cand = {
                "map": i,
                "eps_interval": [fail_eps[0][0], fail_eps[-1][0]],
                "max_defect": peak,
                "tolerance": max(f[2] for f in fail_eps),
            }
            if worst is None or peak > worst["max_defect"]:
                worst = cand
    if worst is not None:
        return CheckReport("projection", "fail", delta, worst)
    return CheckReport("projection", "pass", delta)


def check_boundary_null(
    O: Grid, F_field: DistanceField, k: int, eps_samples: np.ndarray,
    collar_cells: int = 2,
) -> CheckReport:
    """Curvature mass of bd F_eps inside a thin collar of bd O stays at seam scale.

    Transversal crossings contribute one collar width each; a tangency
    contributes a full stretch of boundary and fails. d=1 boundaries are
    finite point sets, so the check passes trivially.
    """
    delta = O.spacing
    if O.dim == 1:
        return CheckReport("boundary_null", "pass", delta, None, {"note": "finite bd O in d=1"})
    edge = O.boundary_cells() | (_dilate_occ(O.occupancy) & ~O.occupancy)
    collar = _dilate_occ(edge, iterations=collar_cells)
    collar = O.with_occupancy(collar).embed_into(F_field.origin, F_field.extents)
    ex = LevelSetExtractor(F_field)
    worst = None
    for e in np.asarray(eps_samples, dtype=float):
        length, _, abs_turn = ex.measure(float(e), collar)
        cells = ex.segment_cells(float(e), collar)
        ncomp = contour_components(cells)
        if k == O.dim - 1:
            mass = 0.5 * length
            tol = 12.0 * delta * max(1, ncomp)
        else:
            mass = abs_turn / (2 * math.pi)
            tol = 0.25 * max(1, ncomp) + 0.5
        if mass > tol:
            cand = {"eps": float(e), "mass": mass, "tolerance": tol, "components": ncomp}
            if worst is None or mass / cand["tolerance"] > worst["mass"] / worst["tolerance"]:
                worst = cand
    if worst is not None:
        return CheckReport("boundary_null", "fail", delta, worst, {"k": k})
    return CheckReport("boundary_null", "pass", delta, None, {"k": k})


def check_boundary_null_volume(G_coarse: Grid, G_fine: Grid) -> CheckReport:
    """Volume version: the generator-boundary collar area must shrink ~linearly in delta."""
    a_c = float(G_coarse.boundary_cells().sum()) * G_coarse.cell_volume
    a_f = float(G_fine.boundary_cells().sum()) * G_fine.cell_volume
    delta = G_fine.spacing
    if a_f == 0 and a_c == 0:
        return CheckReport("boundary_null", "pass", delta, None, {"note": "no boundary cells"})
    ratio = a_c / max(a_f, 1e-300)
    if 1.5 <= ratio <= 3.0 * (G_coarse.spacing / G_fine.spacing):
        return CheckReport("boundary_null", "pass", delta, None,
                           {"collar_area_ratio": ratio})
    if ratio > 1.2:
        return CheckReport("boundary_null", "inconclusive", delta, None,
                           {"collar_area_ratio": ratio})
    return CheckReport(
        "boundary_null", "fail", delta,
        {"collar_area_ratio": ratio, "reason": "boundary collar does not vanish with delta"},
    )


def _dilate_occ(occ: np.ndarray, iterations: int = 1) -> np.ndarray:
    return ndimage.binary_dilation(
        occ, structure=np.ones((3,) * occ.ndim, bool), iterations=iterations
    )
