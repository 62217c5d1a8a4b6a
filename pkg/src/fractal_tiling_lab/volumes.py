"""Sampled scalar functions of the parallel radius eps.

All samplers share one recipe: sort the relevant distance values once, then
answer every threshold with a binary search. Each sample carries a
resolution tolerance, delta times the interface measure at that threshold
(the cells whose half-cell uncertainty can flip the count), which consumers
must fold into their error estimates.

The renewal differences (h, phi, the Gatzouras difference) evaluate
f(eps / r_i) through the scaling identities; on lattice-aligned geometric
grids the lookup is an exact index shift, otherwise a monotone interpolant
is used and the samples are flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError
from .grids import DistanceField, Grid, inner_distance
from .ifs import IFS

VOLUME_KINDS = ("V_G", "V_T", "F_eps_on_A", "F_eps", "h", "phi", "R_d", "surface")


@dataclass
class VolumeSamples:
    eps: np.ndarray
    values: np.ndarray
    kind: str
    delta: float
    region_tag: str = ""
    tolerance: np.ndarray | None = None
    interpolated: bool = False
    # right-limit increments at indicator-gate radii: value just above eps[i]
    # is values[i] + upper_jumps[i] (renewal differences are discontinuous
    # exactly at r_i * cutoff and quadratures must not interpolate across)
    upper_jumps: np.ndarray | None = None

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.eps.ndim != 1 or self.eps.shape != self.values.shape:
            raise ConfigError("eps and values must be equal-length 1d arrays")
        if np.any(np.diff(self.eps) <= 0) or np.any(self.eps <= 0):
            raise ConfigError("eps grid must be strictly increasing and positive")
        if self.kind not in VOLUME_KINDS:
            raise ConfigError(f"unknown sample kind {self.kind!r}")
        if self.tolerance is None:
            self.tolerance = np.zeros_like(self.values)

    def value_at(self, eps: float) -> float:
        i = int(np.argmin(np.abs(self.eps - eps)))
        return float(self.values[i])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("eps,value,kind,delta,region_tag\n")
            for e, v in zip(self.eps, self.values):
                fh.write(f"{e!r},{v!r},{self.kind},{self.delta!r},{self.region_tag}\n")


@dataclass(frozen=True)
class EpsGrid:
    """Geometric eps grid, optionally aligned to a lattice base.

    With alignment, each ratio r of the IFS satisfies -ln r = k * base for an
    integer k, and the grid step is base/m, so eps/r lives exactly k*m slots
    up the grid.
    """

    eps: np.ndarray
    log_step: float
    lattice_base: float | None = None

    def shift_for_ratio(self, r: float) -> int | None:
        """Index shift s with eps[i]/r = eps[i+s], or None if off-grid."""
        s = -math.log(r) / self.log_step
        s_round = round(s)
        if abs(s - s_round) < 1e-9:
            return int(s_round)
        return None


def make_eps_grid(
    delta: float,
    top: float,
    points_per_decade: int = 64,
    lattice_base: float | None = None,
    low: float | None = None,
) -> EpsGrid:
    """Geometric grid from max(low, 4*delta) up to top (top included exactly)."""
    lo = max(low if low is not None else 0.0, 4.0 * delta)
    if top <= lo:
        raise ConfigError(f"eps grid is empty: top {top:g} <= floor {lo:g}")
    step = math.log(10.0) / points_per_decade
    if lattice_base is not None:
        m = max(1, round(lattice_base / step))
        step = lattice_base / m
    n = int(math.floor(math.log(top / lo) / step))
    eps = top * np.exp(-step * np.arange(n, -1, -1))
    return EpsGrid(eps=eps, log_step=step, lattice_base=lattice_base)


def _counts(sorted_vals: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_vals, eps, side="right")


def _interface_tolerance(sorted_vals: np.ndarray, eps: np.ndarray, delta: float, dim: int) -> np.ndarray:
    """delta^dim * (# cells within one cell diagonal of each threshold)."""
    w = 0.75 * delta * math.sqrt(dim)
    hi = np.searchsorted(sorted_vals, eps + w, side="right")
    lo = np.searchsorted(sorted_vals, eps - w, side="left")
    return (hi - lo) * delta**dim


def sample_inner_volume(
    U: Grid, grid: EpsGrid, kind: str = "V_G", region_tag: str = "",
    extra_area: float = 0.0,
) -> VolumeSamples:
    """V(U, eps): volume of the inner eps-collar of U on the eps grid.

    extra_area is added to every sample; tilings pass the residual-mask area
    here (sub-cell tiles sit entirely within any sampled eps of their own
    boundary).
    """
    if not U.occupancy.any():
        raise ConfigError("inner volume of an empty region")
    inner = inner_distance(U)
    vals = np.sort(inner.values[U.occupancy], axis=None)
    d = U.dim
    values = _counts(vals, grid.eps) * U.cell_volume + extra_area
    tol = _interface_tolerance(vals, grid.eps, U.spacing, d)
    return VolumeSamples(grid.eps, values, kind, U.spacing, region_tag, tol)


def sample_restricted_volume(
    F_field: DistanceField, A: Grid, grid: EpsGrid, region_tag: str = "",
    kind: str = "F_eps_on_A",
) -> VolumeSamples:
    """lambda_d(F_eps intersect A) from the attractor's distance field."""
    if A.dim == 1:
        pts = A.centers(0)[A.occupancy].reshape(-1, 1)
    else:
        ii, jj = np.nonzero(A.occupancy)
        pts = np.column_stack([
            A.origin[0] + (ii + 0.5) * A.spacing,
            A.origin[1] + (jj + 0.5) * A.spacing,
        ])
    vals = np.sort(F_field.sample_at(pts))
    values = _counts(vals, grid.eps) * A.cell_volume
    tol = _interface_tolerance(vals, grid.eps, A.spacing, A.dim)
    return VolumeSamples(grid.eps, values, kind, A.spacing, region_tag, tol)


def sample_parallel_volume(
    F_field: DistanceField, grid: EpsGrid, region_tag: str = "F"
) -> VolumeSamples:
    """lambda_d(F_eps) over the whole field (bbox must fully contain F_top)."""
    d = F_field.dim
    f = F_field.values
    ring = f[[0, -1]] if d == 1 else np.concatenate([f[0], f[-1], f[:, 0], f[:, -1]])
    if ring.min() <= grid.eps[-1]:
        raise ConfigError("parallel set reaches the bbox at the top eps; enlarge the padding")
    vals = np.sort(f, axis=None)
    values = _counts(vals, grid.eps) * F_field.spacing**d
    tol = _interface_tolerance(vals, grid.eps, F_field.spacing, d)
    return VolumeSamples(grid.eps, values, "F_eps", F_field.spacing, region_tag, tol)


def _lookup_scaled(samples: VolumeSamples, grid: EpsGrid, r: float) -> tuple[np.ndarray, np.ndarray, bool]:
    """(f(eps/r), tolerance(eps/r), interpolated?) for every grid point.

    Thresholds above the sampled top reuse the top sample (all sampled
    functions are constant beyond their saturation radius by construction;
    callers gate with indicators before that matters).
    """
    shift = grid.shift_for_ratio(r)
    n = samples.eps.size
    if shift is not None:
        idx = np.arange(n) + shift
        idx = np.minimum(idx, n - 1)
        return samples.values[idx], samples.tolerance[idx], False
    target = np.minimum(samples.eps / r, samples.eps[-1])
    interp = PchipInterpolator(samples.eps, samples.values, extrapolate=False)
    tol_interp = PchipInterpolator(samples.eps, samples.tolerance, extrapolate=False)
    return interp(target), tol_interp(target), True


def renewal_difference(
    samples: VolumeSamples,
    ifs: IFS,
    cutoff: float,
    grid: EpsGrid,
    weight_exponent: int | float,
    kind: str,
) -> VolumeSamples:
    """f(eps) - sum_i 1{eps <= r_i * cutoff} r_i^w f(eps / r_i).

    The common shape of the tube-function difference (w = d, cutoff = g),
    the restricted-volume difference (w = d, cutoff = g_tilde) and the
    Gatzouras difference (w = d, cutoff = a).
    """
    if samples.eps.shape != grid.eps.shape or not np.allclose(samples.eps, grid.eps):
        raise ConfigError("samples must live on the provided eps grid")
    values = samples.values.copy()
    tol = samples.tolerance.copy()
    jumps = np.zeros_like(values)
    interpolated = False
    for m in ifs.maps:
        scaled, scaled_tol, interp = _lookup_scaled(samples, grid, m.ratio)
        interpolated |= interp
        gate = grid.eps <= m.ratio * cutoff + 1e-12 * cutoff
        w = m.ratio**weight_exponent
        values = values - gate * w * scaled
        tol = tol + gate * w * scaled_tol
        # the subtracted term switches off just above its gate radius; record
        # the jump when that radius sits on the grid
        if gate.any():
            last = int(np.nonzero(gate)[0][-1])
            if abs(grid.eps[last] - m.ratio * cutoff) <= 1e-9 * cutoff:
                jumps[last] += w * scaled[last]
    return VolumeSamples(
        grid.eps, values, kind, samples.delta, samples.region_tag, tol,
        interpolated, upper_jumps=jumps,
    )


def h_function(V_T: VolumeSamples, ifs: IFS, g: float, grid: EpsGrid) -> VolumeSamples:
    """Tube-function renewal difference of the tiling's union set."""
    return renewal_difference(V_T, ifs, g, grid, ifs.ambient_dim, "h")


def phi_function(F_on_O: VolumeSamples, ifs: IFS, g_tilde: float, grid: EpsGrid) -> VolumeSamples:
    """Renewal difference of lambda_d(F_eps intersect O), cutoff at g_tilde."""
    return renewal_difference(F_on_O, ifs, g_tilde, grid, ifs.ambient_dim, "phi")


def gatzouras_rd(F_vols: VolumeSamples, ifs: IFS, grid: EpsGrid, a: float = 1.0) -> VolumeSamples:
    """lambda_d(F_eps) - sum_i 1{eps <= r_i a} lambda_d((S_i F)_eps), via scaling."""
    d = ifs.ambient_dim
    if np.sum(ifs.ratios**d) >= 1.0 - 1e-12:
        raise ConfigError("full-dimensional attractor: the content difference is degenerate")
    return renewal_difference(F_vols, ifs, a, grid, d, "R_d")
