"""Tube families with small union-to-sum ratio and disjoint translates.

The Perron-tree layout: a triangle with apex ``(1/2, 1)`` and base ``[0, 1]`` is cut
into slivers; siblings are slid together stage by stage so that the outer edges of
each merged pair meet at a prescribed height.  One tube is inscribed along the axis
of each sliver, pointing from the base toward the apex.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConstructionFailed, InvalidArgument
from .report import FIT_SKIPPED
from .tubes import (
    DEFAULT_WINDOW,
    TAU_GEOM,
    RasterGrid,
    TubeFamily,
    _check_h,
    compression_ratio,
    make_family,
    make_tube,
    translate_overlaps,
    translate_tube,
)

APEX = 0.5
K_RANGE = (2, 14)
SECTOR = (-math.atan(0.5), math.atan(0.5))  # angles from vertical spanned by the tree


def height_schedule(k: int) -> list:
    """Meeting heights (as ratios) for the k merge stages; late stages merge lower."""
    return [1.0 - 1.0 / (k - s + 2) for s in range(k)]


def perron_offsets(bounds: np.ndarray, alphas) -> np.ndarray:
    """Horizontal offsets of the slivers whose base boundaries are ``bounds``.

    Stage s pairs consecutive blocks (an unpaired last block is carried over) and
    slides the right block left until the outer edges of the pair meet at the
    current heart height times ``alphas[s]``.
    """
    m = len(bounds) - 1
    off = np.zeros(m)
    blocks = [(i, i + 1) for i in range(m)]
    height = 1.0
    for a in alphas:
        if len(blocks) == 1:
            break
        height *= a
        merged = []
        for b in range(0, len(blocks) - 1, 2):
            (l0, l1), (r0, r1) = blocks[b], blocks[b + 1]
            # left edge of the left block: x = bounds[l0] + off[l0] + y (apex - bounds[l0])
            # right edge of the right block, shifted by -s, must meet it at y = height.
            s = (bounds[r1] + off[r1 - 1] - bounds[l0] - off[l0]
                 - height * (bounds[r1] - bounds[l0]))
            off[r0:r1] -= s
            merged.append((l0, r1))
        if len(blocks) % 2:
            merged.append(blocks[-1])
        blocks = merged
    return off


def _tubes_from_layout(axis_base, off, delta, window, name, params):
    tubes = []
    for x, o in zip(axis_base, off):
        tubes.append(make_tube(2, (x + o, 0.0), (APEX - x, 1.0), delta, window))
    return make_family(tubes, name=name, params=params)


def _repair(family: TubeFamily, bad: np.ndarray, budget: float) -> TubeFamily:
    """Slide offending tubes along their own axes (by at most ``budget``) until the
    translates separate."""
    tubes = list(family.tubes)
    delta = family.delta
    steps = [s * delta for s in (1, -1, 2, -2, 3, -3, 4, -4) if abs(s * delta) <= budget + 1e-15]
    for i in sorted({int(i) for pair in bad for i in pair}):
        fam = TubeFamily(tuple(tubes), family.meta)
        quads = fam.quads(translated=True)
        if not _kernels.sat_one(quads, i, TAU_GEOM).any():
            continue
        t = tubes[i]
        for s in steps:
            o = np.asarray(t.origin) + s * np.asarray(t.direction)
            cand = make_tube(2, o, t.direction, delta, t.window)
            quads[i] = translate_tube(cand).corners()
            if not _kernels.sat_one(np.ascontiguousarray(quads), i, TAU_GEOM).any():
                tubes[i] = cand
                break
    return TubeFamily(tuple(tubes), family.meta)


def keich_family(k: int, window=DEFAULT_WINDOW) -> TubeFamily:
    """2^k tubes of width delta = kappa 2^-k on a Perron-tree layout.

    ``kappa = min(1, a - 1) / 4`` where ``(a, b)`` is the translate window, so that
    translates start clear of the region where the axes cross.
    """
    if int(k) != k or not K_RANGE[0] <= k <= K_RANGE[1]:
        raise InvalidArgument(f"k must be an integer in [{K_RANGE[0]}, {K_RANGE[1]}]")
    k = int(k)
    a, b = (float(w) for w in window)
    if not a < b:
        raise InvalidArgument("window requires a < b")
    kappa = 0.25 * min(1.0, a - 1.0)
    if kappa <= 0:
        raise ConstructionFailed("translate window must start beyond the tube (a > 1)",
                                 {"window": [a, b]})
    m = 2 ** k
    bounds = np.arange(m + 1) / m
    alphas = height_schedule(k)
    off = perron_offsets(bounds, alphas)
    delta = kappa / m
    params = {"k": k, "kappa": kappa, "window": [a, b]}
    fam = _tubes_from_layout((bounds[:-1] + bounds[1:]) / 2, off, delta, (a, b), "keich", params)
    bad = translate_overlaps(fam)
    if len(bad):
        fam = _repair(fam, bad, 4 * delta)
        still = translate_overlaps(fam)
        if len(still):
            raise ConstructionFailed(
                f"{len(still)} translate pairs still overlap after repair",
                {"pairs": still[:20].tolist(), "initial_failures": len(bad)},
            )
        fam.meta["params"]["repaired_pairs"] = len(bad)
    return fam


def separated_directions(delta: float, sector=SECTOR) -> np.ndarray:
    """Greedy maximal delta-separated set of angles in the sector (spacing exactly delta)."""
    lo, hi = sector
    step = delta * (1 + 1e-12)
    count = int(math.floor((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def separated_direction_family(delta: float) -> TubeFamily:
    """One tube of width delta per direction of a maximal delta-separated set.

    Positions come from the Perron-tree layout over the slivers whose axes carry
    these directions.  No translate-disjointness is imposed.
    """
    if not (2.0 ** -14 < delta <= 0.25):
        raise InvalidArgument("delta must lie in (2^-14, 1/4]")
    theta = separated_directions(delta)
    axis_base = APEX - np.tan(theta)
    # Sliver boundaries halfway between consecutive axes, closed off by the sector edges.
    gaps = np.diff(axis_base)
    bounds = np.concatenate([[axis_base[0] - gaps[0] / 2 if len(gaps) else 0.0],
                             (axis_base[:-1] + axis_base[1:]) / 2,
                             [axis_base[-1] + gaps[-1] / 2 if len(gaps) else 1.0]])
    stages = max(1, int(math.ceil(math.log2(len(theta))))) if len(theta) > 1 else 1
    off = perron_offsets(bounds, height_schedule(stages))
    fam = _tubes_from_layout(axis_base, off, delta, DEFAULT_WINDOW, "separated",
                             {"delta": delta, "n_directions": len(theta)})
    fam.meta["params"]["total_measure"] = fam.total_measure
    fam.meta["params"]["total_measure_ok"] = bool(0.5 <= fam.total_measure <= 4.0)
    return fam


def _parallel_start(n: int, delta: float, window) -> TubeFamily:
    return make_family(
        [make_tube(2, (3.0 * delta * i, 0.0), (0.0, 1.0), delta, window) for i in range(n)],
        name="optimized")


def optimize_family(n: int, delta: float, seed: int, iters: int, t0: float = 0.02,
                    h: float | None = None, window=DEFAULT_WINDOW,
                    start: TubeFamily | None = None) -> TubeFamily:
    """Simulated annealing on origins and directions, minimizing the union-to-sum
    ratio while keeping every iterate's translates pairwise disjoint.

    Cooling ``T_i = t0 * 0.999^i``; a proposal jitters one tube's origin (sigma =
    delta) or its direction angle (sigma = delta radians).  The best iterate is
    returned, so the result never scores worse than the start.
    """
    if n < 2 or iters < 1:
        raise InvalidArgument("need n >= 2 and iters >= 1")
    fam = start if start is not None else _parallel_start(n, delta, window)
    h = _check_h(delta, h)
    a = fam.window[0]
    origins = fam.origins().copy()
    angles = np.arctan2(fam.directions()[:, 0], fam.directions()[:, 1])

    def quads_of(orig, ang):
        v = np.stack([np.sin(ang), np.cos(ang)], axis=1)
        nrm = np.stack([-v[:, 1], v[:, 0]], axis=1) * delta
        p1 = orig + v
        body = np.stack([orig + nrm, p1 + nrm, p1 - nrm, orig - nrm], axis=1)
        length = fam.window[1] - a
        t0_ = orig + a * v
        t1_ = t0_ + length * v
        trans = np.stack([t0_ + nrm, t1_ + nrm, t1_ - nrm, t0_ - nrm], axis=1)
        return np.ascontiguousarray(body), np.ascontiguousarray(trans)

    total = n * 2.0 * delta

    def score(body):
        grid = RasterGrid.covering(body, h)
        return grid.covered_cells(body) * h * h / total

    body, trans = quads_of(origins, angles)
    if len(_kernels.sat_pairs(trans, TAU_GEOM)):
        raise ConstructionFailed("initial family violates translate disjointness")
    rng = np.random.default_rng(seed)
    cur = score(body)
    best, best_o, best_a = cur, origins.copy(), angles.copy()
    temp = t0
    accepted = 0
    for _ in range(iters):
        i = int(rng.integers(n))
        o2, a2 = origins.copy(), angles.copy()
        if rng.random() < 0.5:
            o2[i] += rng.normal(0.0, delta, 2)
        else:
            a2[i] += rng.normal(0.0, delta)
        nb, nt = quads_of(o2, a2)
        if not _kernels.sat_one(nt, i, TAU_GEOM).any():
            new = score(nb)
            if new <= cur or rng.random() < math.exp(-(new - cur) / temp):
                origins, angles, cur = o2, a2, new
                accepted += 1
                if cur < best:
                    best, best_o, best_a = cur, origins.copy(), angles.copy()
        temp *= 0.999
    tubes = [make_tube(2, o, (math.sin(t), math.cos(t)), delta, fam.window)
             for o, t in zip(best_o, best_a)]
    return make_family(tubes, name="optimized", seed=seed,
                       params={"n": n, "delta": delta, "iters": iters, "t0": t0, "h": h,
                               "score": best, "accepted": accepted})


@dataclass
class FCurve:
    """Measured union-to-sum ratios at delta ~ 2^-k with a fit eps ~ C / (k ln 2)."""

    points: list  # dicts with k, delta, epsilon, err, certificate
    mode: str
    C: float | None = None
    form: str = "C/|log delta|"
    residuals: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def ks(self):
        return [p["k"] for p in self.points]

    @property
    def epsilons(self):
        return [p["epsilon"] for p in self.points]

    @property
    def deltas(self):
        return [p["delta"] for p in self.points]

    def max_residual(self, k_min: int = 6) -> float:
        vals = [abs(r) for p, r in zip(self.points, self.residuals) if p["k"] >= k_min]
        return max(vals) if vals else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "delta", "epsilon", "err", "certificate"])
        for p in self.points:
            w.writerow([p["k"], repr(float(p["delta"])), repr(float(p["epsilon"])),
                        repr(float(p["err"])), str(bool(p["certificate"])).lower()])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"mode": self.mode, "points": self.points, "C": self.C, "form": self.form,
                "residuals": self.residuals, "flags": self.flags}


def fit_log_model(ks, eps):
    """Least squares through the origin of eps against 1/(k ln 2)."""
    x = 1.0 / (np.asarray(ks, dtype=float) * math.log(2.0))
    y = np.asarray(eps, dtype=float)
    c = float(x @ y / (x @ x))
    return c, ((y - c * x) / (c * x)).tolist()


def _curve_point(k: int, mode: str, h_factor: float, seed: int, iters: int) -> dict:
    if mode == "keich":
        fam = keich_family(k)
    elif mode == "separated":
        fam = separated_direction_family(2.0 ** -k)
    elif mode == "optimized":
        fam = optimize_family(2 ** k, 0.25 * 2.0 ** -k, seed, iters)
    else:
        raise InvalidArgument(f"unknown mode {mode!r}")
    rep = compression_ratio(fam, h=fam.delta * h_factor, enforce_disjoint=(mode != "separated"))
    return {"k": k, "delta": fam.delta, "epsilon": rep.value, "err": rep.error_estimate,
            "certificate": bool(rep.data["certificate"])}


def f_curve(ks, mode: str = "keich", h_factor: float = 0.125, seed: int = 0,
            iters: int = 2000) -> FCurve:
    """Measure eps(2^-k) for each k and fit eps ~ C / (k ln 2)."""
    ks = [int(k) for k in ks]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise InvalidArgument("ks must be non-empty and strictly increasing")
    if not 0 < h_factor < 0.25:
        raise InvalidArgument("h_factor must lie in (0, 1/4)")
    workers = min(_kernels.worker_count(), len(ks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            points = list(ex.map(lambda k: _curve_point(k, mode, h_factor, seed, iters), ks))
    else:
        points = [_curve_point(k, mode, h_factor, seed, iters) for k in ks]
    curve = FCurve(points, mode)
    if len(ks) < 2:
        curve.flags.append(FIT_SKIPPED)
        curve.residuals = [0.0] * len(ks)
    else:
        curve.C, curve.residuals = fit_log_model(ks, curve.epsilons)
    return curve
