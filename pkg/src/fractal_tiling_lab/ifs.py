"""Iterated function systems of contracting similarities.

Similarity dimension, the renewal normalizer eta, lattice detection and
code-space word enumeration. Ambient dimension d is 1 or 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .errors import ConfigError, FtlError

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Similarity:
    """Contracting similarity x -> ratio * Q x + t with Q orthogonal."""

    ratio: float
    orthogonal_part: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.orthogonal_part, dtype=float))
        t = np.atleast_1d(np.asarray(self.translation, dtype=float))
        if not (0.0 < self.ratio < 1.0):
            raise ConfigError(f"similarity ratio must lie in (0,1), got {self.ratio}")
        if q.shape[0] != q.shape[1] or q.shape[0] != t.shape[0]:
            raise ConfigError("orthogonal part and translation dimensions differ")
        if not np.allclose(q.T @ q, np.eye(q.shape[0]), atol=ORTHO_TOL, rtol=0.0):
            raise ConfigError("orthogonal part is not orthogonal within 1e-12")
        object.__setattr__(self, "orthogonal_part", q)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self) -> int:
        return self.translation.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Apply to points of shape (..., d) or scalars in d=1."""
        p = np.asarray(points, dtype=float)
        if self.dim == 1 and p.ndim <= 1:
            return self.ratio * self.orthogonal_part[0, 0] * p + self.translation[0]
        return self.ratio * (p @ self.orthogonal_part.T) + self.translation

    def inverse(self) -> "AffineMap":
        qinv = self.orthogonal_part.T
        return AffineMap(qinv / self.ratio, -(qinv @ self.translation) / self.ratio)

    def compose(self, other: "Similarity") -> "Similarity":
        """self after other composed as self(other(x))."""
        return Similarity(
            self.ratio * other.ratio,
            self.orthogonal_part @ other.orthogonal_part,
            self(other.translation),
        )

    def fixed_point(self) -> np.ndarray:
        a = np.eye(self.dim) - self.ratio * self.orthogonal_part
        return np.linalg.solve(a, self.translation)


@dataclass(frozen=True)
class AffineMap:
    """Plain affine map x -> A x + b (used for similarity inverses)."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.offset.shape[0] == 1 and p.ndim <= 1:
            return self.matrix[0, 0] * p + self.offset[0]
        return p @ self.matrix.T + self.offset


@dataclass(frozen=True)
class IFS:
    maps: tuple[Similarity, ...]
    ambient_dim: int

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise ConfigError("an IFS needs at least two maps")
        if any(m.dim != self.ambient_dim for m in maps):
            raise ConfigError("all maps must share the ambient dimension")
        if self.ambient_dim not in (1, 2):
            raise ConfigError("ambient dimension must be 1 or 2")
        object.__setattr__(self, "maps", maps)

    @property
    def n(self) -> int:
        return len(self.maps)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    def set_map(self, points: np.ndarray) -> np.ndarray:
        """Apply Phi(A) = union of S_i(A) to a point cloud, stacking images."""
        return np.concatenate([np.atleast_1d(m(points)) for m in self.maps], axis=0)


@dataclass(frozen=True)
class Word:
    """Finite word over the alphabet {0, .., N-1} addressing a cylinder."""

    letters: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def extend(self, letter: int) -> "Word":
        return Word(self.letters + (letter,))

    def ratio(self, ifs: IFS) -> float:
        r = 1.0
        for a in self.letters:
            r *= ifs.maps[a].ratio
        return r

    def map(self, ifs: IFS) -> Similarity | None:
        """Composed similarity S_sigma, None for the empty word."""
        m = None
        for a in self.letters:
            m = ifs.maps[a] if m is None else m.compose(ifs.maps[a])
        return m

    def __str__(self) -> str:
        return "".join(str(a + 1) for a in self.letters) or "<empty>"


@dataclass(frozen=True)
class DimensionData:
    D: float
    eta: float
    lattice: bool
    lattice_base: float | None = None
    note: str = ""


def similarity_dimension(ifs: IFS, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Unique root of sum(r_i^s) = 1, by bisection plus a Newton polish.

    The map s -> sum r_i^s is strictly decreasing, so the bracket
    [0, 2d] is safe for contracting maps; non-convergence signals
    malformed ratios.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    r = ifs.ratios
    lo, hi = 0.0, 2.0 * ifs.ambient_dim

    def f(s):
        return np.sum(r**s) - 1.0

    if f(lo) <= 0:
        raise FtlError("dimension bracket failed at s=0 (need N >= 2 contracting maps)")
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise FtlError("dimension solver failed to bracket the root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < max(tol, 1e-15):
            break
    s = 0.5 * (lo + hi)
    # Newton polish: f'(s) = sum r^s ln r
    for _ in range(8):
        fs = f(s)
        dfs = float(np.sum(r**s * np.log(r)))
        if dfs == 0.0:
            break
        step = fs / dfs
        s -= step
        if abs(step) < tol / 4:
            break
    if abs(f(s)) > max(tol, 64 * np.finfo(float).eps):
        raise FtlError(f"dimension solver residual {f(s):.3e} exceeds tol {tol:.3e}")
    return float(s)


def eta(ifs: IFS, D: float) -> float:
    """Renewal normalizer sum r_i^D |ln r_i| (> 0)."""
    r = ifs.ratios
    return float(np.sum(r**D * np.abs(np.log(r))))


def is_lattice(
    ifs: IFS, tol: float = 1e-9, q_max: int = 10**6
) -> tuple[bool, float | None]:
    """Detect whether {-ln r_i} generate a discrete subgroup of R.

    Tests each ln(r_i)/ln(r_1) for a rational p/q with q <= q_max via
    continued fractions at tolerance tol. Floating ratios cannot prove
    irrationality, so a False verdict means "no rational relation found
    at this precision". When True, also returns the group generator h.
    """
    if not (0 < tol <= 1e-6):
        raise ConfigError("tol must lie in (0, 1e-6]")
    logs = -np.log(ifs.ratios)
    base_log = logs[0]
    fracs: list[Fraction] = []
    for x in logs / base_log:
        frac = _rational_approx(float(x), tol, q_max)
        if frac is None:
            return False, None
        fracs.append(frac)
    # -ln r_i = (p_i / q_i) * base_log; the group generator is
    # base_log * gcd({p_i * L / q_i}) / L with L = lcm(q_i).
    lcm = 1
    for fr in fracs:
        lcm = lcm * fr.denominator // math.gcd(lcm, fr.denominator)
    mults = [fr.numerator * (lcm // fr.denominator) for fr in fracs]
    g = 0
    for m in mults:
        g = math.gcd(g, m)
    return True, float(base_log * g / lcm)


def _rational_approx(x: float, tol: float, q_max: int) -> Fraction | None:
    """Continued-fraction convergent p/q with q <= q_max, or None.

    Acceptance is denominator-weighted (error <= tol * |x| / q): a float that
    genuinely equals p/q matches to machine precision at any q, while an
    irrational's convergents only reach ~1/q^2, which fails for small tol.
    """
    if x <= 0:
        return None

    def good(p, q):
        return q <= q_max and abs(x - p / q) <= tol * max(1.0, abs(x)) / q

    a = x
    p_prev, q_prev, p, q = 1, 0, int(math.floor(a)), 1
    for _ in range(64):
        if good(p, q):
            return Fraction(p, q)
        frac = a - math.floor(a)
        if frac < 1e-15:
            break
        a = 1.0 / frac
        ai = int(math.floor(a))
        p_prev, q_prev, p, q = p, q, ai * p + p_prev, ai * q + q_prev
        if q > q_max:
            return None
    return Fraction(p, q) if good(p, q) else None


def dimension_data(ifs: IFS, tol: float = 1e-12) -> DimensionData:
    D = similarity_dimension(ifs, tol)
    latt, base = is_lattice(ifs)
    note = (
        f"lattice (base {base:.6g})"
        if latt
        else "nonlattice at float precision (no rational relation with q <= 1e6)"
    )
    return DimensionData(D=D, eta=eta(ifs, D), lattice=latt, lattice_base=base, note=note)


def enumerate_words(
    ifs: IFS, stop: Callable[[Word], bool], max_len: int = 64
) -> Iterator[Word]:
    """Depth-first stream of prefix-minimal words satisfying stop.

    A word is emitted exactly when stop holds for it and for none of its
    proper prefixes (children of emitted words are never visited), so the
    emitted cylinders partition code space. Raises when a branch exceeds
    max_len, which signals a predicate that never becomes true.
    """
    stack = [Word()]
    while stack:
        w = stack.pop()
        if stop(w):
            yield w
            continue
        if len(w) >= max_len:
            raise FtlError(
                f"word enumeration exceeded max length {max_len}: stop predicate "
                "never satisfied on some branch"
            )
        for a in reversed(range(ifs.n)):
            stack.append(w.extend(a))


def words_up_to_ratio(
    ifs: IFS, r_min: float, max_len: int = 64, truncate: bool = False
) -> list[Word]:
    """All words (tree nodes, including the empty word) with r_sigma > r_min.

    With truncate=True, words at max_len become leaves instead of raising;
    use that for explicit depth caps.
    """
    out = []
    stack = [Word()]
    while stack:
        w = stack.pop()
        if w.ratio(ifs) <= r_min:
            continue
        out.append(w)
        if len(w) >= max_len:
            if truncate:
                continue
            raise FtlError("word tree exceeded max length")
        for a in range(ifs.n):
            stack.append(w.extend(a))
    return out


def rotation(angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def load_ifs(source) -> IFS:
    """Build an IFS from a JSON document (path, JSON text, or dict).

    Schema: {"dim": d, "maps": [{"ratio": r, "matrix": [[..]] | "angle": deg
    [, "reflect": true], "translation": [..]}, ...]}. "angle"/"reflect" are
    d=2 conveniences; omitted matrix means identity.
    """
    if isinstance(source, (str, bytes)):
        text = str(source)
        if "{" not in text:
            with open(text, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = json.loads(text)
    else:
        doc = source
    try:
        d = int(doc["dim"])
        maps = []
        for m in doc["maps"]:
            if "matrix" in m:
                q = np.asarray(m["matrix"], dtype=float)
            elif "angle" in m:
                if d != 2:
                    raise ConfigError("angle rotations are only defined for dim 2")
                q = rotation(float(m["angle"]))
                if m.get("reflect"):
                    q = q @ np.diag([1.0, -1.0])
            else:
                q = np.eye(d)
            t = np.atleast_1d(np.asarray(m["translation"], dtype=float))
            maps.append(Similarity(float(m["ratio"]), q, t))
        return IFS(tuple(maps), d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed IFS description: {exc}") from exc
