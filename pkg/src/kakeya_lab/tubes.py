"""Geometry of delta-tubes: membership, measure, translate disjointness and union measure.

A tube is the image of ``[0, length] x B(0, delta)`` under a rigid motion, stored as
an origin (image of the axis start) and a unit direction.  Its translate over the
window ``(a, b)`` is the image of ``[a, b] x B(0, delta)`` along the same axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import ConstraintViolation, InvalidArgument, ResolutionTooCoarse
from .report import SAMPLED, BoundReport

TAU_GEOM = 1e-9
DEFAULT_WINDOW = (2.0, 3.0)


def unit_ball_volume(m: int) -> float:
    """Lebesgue measure of the unit ball of R^m (m = 0 gives 1)."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


@dataclass(frozen=True)
class Tube:
    d: int
    origin: tuple
    direction: tuple
    delta: float
    window: tuple = DEFAULT_WINDOW
    length: float = 1.0

    @property
    def measure(self) -> float:
        return self.length * unit_ball_volume(self.d - 1) * self.delta ** (self.d - 1)

    @property
    def perimeter(self) -> float:
        """Boundary length in the plane (d = 2 only)."""
        return 2.0 * self.length + 4.0 * self.delta

    def corners(self) -> np.ndarray:
        """The four rectangle corners (d = 2), in boundary order."""
        if self.d != 2:
            raise InvalidArgument("corners are defined for d = 2 only")
        o = np.asarray(self.origin)
        v = np.asarray(self.direction)
        n = np.array([-v[1], v[0]]) * self.delta
        p1 = o + self.length * v
        return np.array([o + n, p1 + n, p1 - n, o - n])

    def contains(self, pts) -> np.ndarray:
        """Interior membership of points of shape (..., d)."""
        pts = np.asarray(pts, dtype=float)
        rel = pts - np.asarray(self.origin)
        v = np.asarray(self.direction)
        s = rel @ v
        perp = rel - s[..., None] * v
        return (s > 0) & (s < self.length) & (np.linalg.norm(perp, axis=-1) < self.delta)


def make_tube(d: int, origin: Sequence[float], direction: Sequence[float], delta: float,
              window: Sequence[float] = DEFAULT_WINDOW, length: float = 1.0) -> Tube:
    if int(d) != d or d < 2:
        raise InvalidArgument("dimension must be an integer >= 2")
    origin = np.asarray(origin, dtype=float).reshape(-1)
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if origin.size != d or direction.size != d:
        raise InvalidArgument("origin and direction must have d coordinates")
    if not (np.all(np.isfinite(origin)) and np.all(np.isfinite(direction))):
        raise InvalidArgument("origin and direction must be finite")
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise InvalidArgument("direction must be nonzero")
    if not (0.0 < delta < 1.0):
        raise InvalidArgument("delta must lie in (0, 1)")
    a, b = (float(w) for w in window)
    if not a < b:
        raise InvalidArgument("window requires a < b")
    if not length > 0:
        raise InvalidArgument("length must be positive")
    return Tube(int(d), tuple(origin.tolist()), tuple((direction / norm).tolist()), float(delta),
                (a, b), float(length))


def translate_tube(t: Tube) -> Tube:
    """The tube occupying the image of ``[a, b] x B(0, delta)`` along the axis of ``t``."""
    a, b = t.window
    o = np.asarray(t.origin) + a * np.asarray(t.direction)
    return Tube(t.d, tuple(o.tolist()), t.direction, t.delta, t.window, (b - a))


def _segment_distance(p0, p1, q0, q1) -> float:
    """Distance between segments [p0,p1] and [q0,q1] in R^d."""
    u, v, w = p1 - p0, q1 - q0, p0 - q0
    a, b, c, d, e = u @ u, u @ v, v @ v, u @ w, v @ w
    den = a * c - b * b
    s = 0.0 if den < 1e-15 else np.clip((b * e - c * d) / den, 0.0, 1.0)
    t = np.clip((b * s + e) / c, 0.0, 1.0)
    s = np.clip((b * t - d) / a, 0.0, 1.0)
    return float(np.linalg.norm(w + s * u - t * v))


def overlap_depth(t1: Tube, t2: Tube) -> float:
    """Separating-axis penetration depth of two planar tubes (<= 0 means disjoint)."""
    from ._pykernels import _penetration

    return float(_penetration(t1.corners()[None], t2.corners()[None])[0])


def tubes_disjoint(t1: Tube, t2: Tube, tol: float = TAU_GEOM, samples: int = 20000,
                   seed: int = 0) -> bool:
    """Whether the interiors of two tubes are disjoint.

    Exact separating-axis test in the plane; in higher dimension a segment-distance
    test decides the clear cases and the rest is decided by sampling points of ``t1``.
    """
    if t1.d != t2.d:
        raise InvalidArgument("tubes live in different dimensions")
    if t1.d == 2:
        quads = np.ascontiguousarray(np.stack([t1.corners(), t2.corners()]))
        return not bool(_kernels.sat_one(quads, 0, tol)[1])
    o1, v1 = np.asarray(t1.origin), np.asarray(t1.direction)
    o2, v2 = np.asarray(t2.origin), np.asarray(t2.direction)
    dist = _segment_distance(o1, o1 + t1.length * v1, o2, o2 + t2.length * v2)
    if dist >= t1.delta + t2.delta - tol:
        return True
    pts = sample_tube(t1, samples, np.random.default_rng(seed))
    return not bool(np.any(t2.contains(pts)))


def sample_tube(t: Tube, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random points in a tube of any dimension."""
    v = np.asarray(t.direction)
    basis = np.linalg.svd(v[None, :])[2][1:]  # orthonormal complement of v
    m = t.d - 1
    g = rng.standard_normal((n, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = t.delta * rng.random(n) ** (1.0 / m)
    s = t.length * rng.random(n)
    return np.asarray(t.origin) + s[:, None] * v + (g * rad[:, None]) @ basis


@dataclass(frozen=True)
class TubeFamily:
    tubes: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.tubes) == 0:
            raise InvalidArgument("a tube family must be non-empty")
        t0 = self.tubes[0]
        for t in self.tubes:
            if (t.d, t.delta, t.window, t.length) != (t0.d, t0.delta, t0.window, t0.length):
                raise InvalidArgument("tubes must share d, delta, window and length")

    def __len__(self):
        return len(self.tubes)

    @property
    def d(self) -> int:
        return self.tubes[0].d

    @property
    def delta(self) -> float:
        return self.tubes[0].delta

    @property
    def window(self) -> tuple:
        return self.tubes[0].window

    @property
    def total_measure(self) -> float:
        return sum(t.measure for t in self.tubes)

    def origins(self) -> np.ndarray:
        return np.array([t.origin for t in self.tubes])

    def directions(self) -> np.ndarray:
        return np.array([t.direction for t in self.tubes])

    def translates(self) -> "TubeFamily":
        return TubeFamily(tuple(translate_tube(t) for t in self.tubes), dict(self.meta))

    def quads(self, translated: bool = False) -> np.ndarray:
        tubes = self.translates().tubes if translated else self.tubes
        return np.ascontiguousarray(np.stack([t.corners() for t in tubes]))

    def transformed(self, rotation, shift) -> "TubeFamily":
        """Apply the rigid motion x -> rotation @ x + shift to every tube."""
        rot = np.asarray(rotation, dtype=float)
        sh = np.asarray(shift, dtype=float)
        tubes = []
        for t in self.tubes:
            o = rot @ np.asarray(t.origin) + sh
            v = rot @ np.asarray(t.direction)
            tubes.append(Tube(t.d, tuple(o.tolist()), tuple((v / np.linalg.norm(v)).tolist()),
                              t.delta, t.window, t.length))
        return TubeFamily(tuple(tubes), dict(self.meta))

    def diameter(self, include_translates: bool = True) -> float:
        pts = [self.quads().reshape(-1, 2)]
        if include_translates:
            pts.append(self.quads(translated=True).reshape(-1, 2))
        p = np.concatenate(pts)
        return float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))

    def to_dict(self) -> dict:
        meta = {"name": self.meta.get("name", ""), "seed": self.meta.get("seed"),
                "params": self.meta.get("params", {})}
        out = {
            "d": self.d,
            "delta": self.delta,
            "window": list(self.window),
            "tubes": [{"origin": list(t.origin), "direction": list(t.direction)} for t in self.tubes],
            "meta": meta,
        }
        if self.tubes[0].length != 1.0:
            out["length"] = self.tubes[0].length
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TubeFamily":
        d = int(data["d"])
        window = tuple(float(w) for w in data["window"])
        length = float(data.get("length", 1.0))
        tubes = tuple(
            # Stored directions are already unit; keep them bit-exact.
            Tube(d, tuple(float(x) for x in t["origin"]), tuple(float(x) for x in t["direction"]),
                 float(data["delta"]), window, length)
            for t in data["tubes"]
        )
        for t in tubes:
            if abs(np.linalg.norm(t.direction) - 1.0) > 1e-12:
                raise InvalidArgument("serialized directions must be unit vectors")
            if not 0 < t.delta < 1:
                raise InvalidArgument("delta must lie in (0, 1)")
        meta = dict(data.get("meta", {}))
        return cls(tubes, meta)


def make_family(tubes: Iterable[Tube], name: str = "", seed=None, params=None) -> TubeFamily:
    return TubeFamily(tuple(tubes), {"name": name, "seed": seed, "params": dict(params or {})})


@dataclass(frozen=True)
class RasterGrid:
    """A cell grid over a planar box; cell (i, j) has center (x0+(j+.5)h, y0+(i+.5)h)."""

    x0: float
    y0: float
    h: float
    nrows: int
    ncols: int

    @classmethod
    def covering(cls, quads: np.ndarray, h: float) -> "RasterGrid":
        if not h > 0:
            raise InvalidArgument("resolution must be positive")
        # Snap the box to the lattice h*Z^2 so that results do not depend on the
        # extent of the family, only on the cell lattice.
        lo = (np.floor(quads.reshape(-1, 2).min(axis=0) / h) - 1) * h
        hi = quads.reshape(-1, 2).max(axis=0) + h
        ncols, nrows = (np.ceil((hi - lo) / h).astype(int) + 1).tolist()
        return cls(float(lo[0]), float(lo[1]), float(h), nrows, ncols)

    def intervals(self, quads: np.ndarray):
        rows, lo, hi = _kernels.raster_intervals(np.ascontiguousarray(quads, dtype=np.float64),
                                                 self.y0, self.x0, self.h, self.nrows, self.ncols)
        order = np.lexsort((lo, rows))
        return rows[order], lo[order], hi[order]

    def covered_cells(self, quads: np.ndarray) -> int:
        return _kernels.merged_cell_count(*self.intervals(quads))

    def occupancy(self, quads: np.ndarray) -> np.ndarray:
        """Boolean occupancy bitmask (only for modest grids)."""
        mask = np.zeros((self.nrows, self.ncols), dtype=bool)
        for r, a, b in zip(*self.intervals(quads)):
            mask[r, a:b + 1] = True
        return mask


def default_resolution(delta: float) -> float:
    """Grid spacing used when none is given: delta / 8."""
    return delta / 8.0


def _check_h(delta: float, h) -> float:
    h = default_resolution(delta) if h is None else float(h)
    if not h > 0:
        raise InvalidArgument("resolution must be positive")
    if h >= delta / 4.0:
        raise ResolutionTooCoarse(f"grid spacing {h} must be below delta/4 = {delta / 4}")
    return h


def raster_union_area(quads: np.ndarray, h: float) -> float:
    quads = np.ascontiguousarray(quads, dtype=np.float64)
    grid = RasterGrid.covering(quads, h)
    return grid.covered_cells(quads) * h * h


def union_measure(family: TubeFamily, h: float | None = None, samples: int = 400000,
                  seed: int = 0) -> tuple:
    """Measure of the union of the tubes with an error bound.

    In the plane: cell-center rasterization with spacing ``h`` (default delta/8) and
    error bound ``h * total perimeter``.  For d > 2: Monte Carlo over the bounding
    box with bound three standard errors.
    """
    if family.d == 2:
        h = _check_h(family.delta, h)
        value = raster_union_area(family.quads(), h)
        err = h * sum(t.perimeter for t in family.tubes)
        return value, err
    return _union_measure_mc(family, samples, seed)


def _union_measure_mc(family: TubeFamily, samples: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    lo = np.min([np.minimum(t.origin, np.add(t.origin, np.multiply(t.length, t.direction)))
                 for t in family.tubes], axis=0) - family.delta
    hi = np.max([np.maximum(t.origin, np.add(t.origin, np.multiply(t.length, t.direction)))
                 for t in family.tubes], axis=0) + family.delta
    vol = float(np.prod(hi - lo))
    pts = lo + (hi - lo) * rng.random((samples, family.d))
    inside = np.zeros(samples, dtype=bool)
    for t in family.tubes:
        inside |= t.contains(pts)
    frac = inside.mean()
    se = vol * math.sqrt(max(frac * (1 - frac), 1.0 / samples) / samples)
    return vol * frac, 3.0 * se


def translate_overlaps(family: TubeFamily, tol: float = TAU_GEOM) -> np.ndarray:
    """Index pairs (i < j) whose translates overlap; empty means the certificate passes."""
    if family.d == 2:
        return _kernels.sat_pairs(family.quads(translated=True), tol)
    tr = family.translates().tubes
    bad = [(i, j) for i in range(len(tr)) for j in range(i + 1, len(tr))
           if not tubes_disjoint(tr[i], tr[j], tol)]
    return np.array(bad, dtype=np.int64).reshape(-1, 2)


def compression_ratio(family: TubeFamily, h: float | None = None,
                      enforce_disjoint: bool = True) -> BoundReport:
    """The union-to-sum ratio of the tubes, with the translate-disjointness certificate."""
    bad = translate_overlaps(family)
    if enforce_disjoint and len(bad):
        raise ConstraintViolation(f"{len(bad)} pairs of translates overlap", bad.tolist())
    union, err = union_measure(family, h)
    total = family.total_measure
    flags = [] if family.d == 2 else [SAMPLED]
    h_used = _check_h(family.delta, h) if family.d == 2 else None
    return BoundReport(
        name="compression_ratio",
        value=union / total,
        params={"n_tubes": len(family), "delta": family.delta, "window": list(family.window),
                "h": h_used, "family": family.meta.get("name", "")},
        provenance=["union-to-sum ratio of the tubes", "separating-axis certificate on translates"],
        error_estimate=err / total,
        flags=flags,
        data={"union": union, "sum": total, "certificate": not len(bad),
              "offending_pairs": bad.tolist()},
    )


def _clip(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of a polygon by a convex polygon (both CCW or both CW)."""
    orient = np.sign(_signed_area(clipper))
    out = list(subject)
    m = len(clipper)
    for e in range(m):
        a, b = clipper[e], clipper[(e + 1) % m]
        inp, out = out, []
        if not inp:
            break

        def side(p):
            return orient * ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))

        for i in range(len(inp)):
            p, q = inp[i], inp[(i + 1) % len(inp)]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if sp * sq < 0:
                out.append(p + (q - p) * (sp / (sp - sq)))
    return np.array(out).reshape(-1, 2)


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def intersection_area(q1: np.ndarray, q2: np.ndarray) -> float:
    """Exact area of the intersection of two convex quads."""
    poly = _clip(np.asarray(q1, dtype=float), np.asarray(q2, dtype=float))
    return abs(_signed_area(poly)) if len(poly) >= 3 else 0.0


def translate_overlap_areas(family: TubeFamily) -> tuple:
    """Pairs (i < j) of overlapping translates and their exact intersection areas."""
    quads = family.quads(translated=True)
    pairs = _kernels.sat_pairs(quads, 0.0)
    areas = np.array([intersection_area(quads[i], quads[j]) for i, j in pairs])
    return pairs, areas


def relaxed_score(family: TubeFamily, h: float | None = None) -> BoundReport:
    """Union ratio times the normalized pairwise self-intersection of the translates."""
    if family.d != 2:
        raise InvalidArgument("relaxed_score is implemented for d = 2")
    union, err = union_measure(family, h)
    total = family.total_measure
    pairs, areas = translate_overlap_areas(family)
    diag = sum(t.measure for t in family.translates().tubes)
    overlap_sum = diag + 2.0 * float(areas.sum())
    factor = overlap_sum / total
    ratio = union / total
    return BoundReport(
        name="relaxed_score",
        value=ratio * factor,
        params={"n_tubes": len(family), "delta": family.delta, "h": _check_h(family.delta, h)},
        provenance=["union-to-sum ratio of the tubes",
                    "pairwise translate intersections by polygon clipping"],
        error_estimate=err / total * factor,
        data={"union_ratio": ratio, "overlap_factor": factor, "n_overlapping_pairs": len(pairs)},
    )
