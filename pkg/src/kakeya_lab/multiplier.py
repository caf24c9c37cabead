"""Directional and radial Fourier multipliers in the plane, tube test functions, the
pairing they produce and lower bounds for the square-function constant.

Fourier convention: f^(xi) = integral f(x) exp(-2 pi i <x, xi>) dx, frequencies in cycles.

Tube frames: a tube with origin o, direction v and half-width delta has coordinates
sigma = <x - o, v> in [0, 1] and tau = <x - o, v_perp> with |tau| <= delta; its translate
is sigma in [a, b].  Test functions are

    f_j = delta^(-1/p) f(sigma) rho(tau / delta),   g_j = delta^(-1/q) g(sigma) rho(tau / delta)

with f supported in (0, 1), g in (a, b) and rho in (-1, 1), ||rho||_2 = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (AccuracyFailure, ConstraintViolation, DomainTooSmall, InvalidArgument,
                     ResolutionTooCoarse)
from .filterbank import SampledFunction
from .report import BoundReport
from .tubes import TubeFamily, compression_ratio, relaxed_score, translate_overlap_areas, unit_ball_volume


# ---------------------------------------------------------------- profiles

def bump(t, a: float, b: float):
    """exp(-1/(t-a) - 1/(b-t)) on (a, b), zero elsewhere, scaled to peak 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > a) & (t < b)
    s = t[inside]
    c = 0.5 * (a + b)
    peak = -2.0 / (c - a)
    out[inside] = np.exp(-1.0 / (s - a) - 1.0 / (b - s) - peak)
    return out


def _lp_norm(fun, a, b, p, n=20001):
    x = np.linspace(a, b, n)
    v = np.abs(fun(x))
    if p == math.inf:
        return float(v.max())
    return float(np.trapezoid(v ** p, x) ** (1.0 / p))


@dataclass(frozen=True)
class TestProfiles:
    """The one-dimensional profiles f on (0, 1), g on (a, b) and rho on (-1, 1)."""

    window: tuple = (2.0, 3.0)
    rho_scale: float = field(default=0.0)

    def __post_init__(self):
        a, b = self.window
        if not 1.0 < a < b:
            raise InvalidArgument("window must satisfy 1 < a < b")
        if self.rho_scale == 0.0:
            object.__setattr__(self, "rho_scale", 1.0 / _lp_norm(lambda y: bump(y, -1, 1), -1, 1, 2))

    def f(self, t):
        return bump(t, 0.0, 1.0)

    def g(self, t):
        a, b = self.window
        return bump(t, a, b)

    def rho(self, y):
        return self.rho_scale * bump(y, -1.0, 1.0)

    def norm(self, which: str, p: float) -> float:
        a, b = self.window
        if which == "f":
            return _lp_norm(self.f, 0.0, 1.0, p)
        if which == "g":
            return _lp_norm(self.g, a, b, p)
        if which == "rho":
            return _lp_norm(self.rho, -1.0, 1.0, p)
        raise InvalidArgument(which)

    def fourier(self, which: str, xi, nodes: int = 400):
        """Fourier transform of f, g or rho by Gauss-Legendre quadrature on the support."""
        a, b = {"f": (0.0, 1.0), "g": self.window, "rho": (-1.0, 1.0)}[which]
        fun = {"f": self.f, "g": self.g, "rho": self.rho}[which]
        z, w = np.polynomial.legendre.leggauss(nodes)
        t = 0.5 * (b - a) * z + 0.5 * (a + b)
        w = 0.5 * (b - a) * w * fun(t)
        xi = np.asarray(xi, dtype=float)
        return np.exp(-2j * np.pi * np.multiply.outer(xi, t)) @ w

    def h_hat(self, xi):
        """Fourier transform of h = f * g^*, i.e. f^ conj(g^)."""
        return self.fourier("f", xi) * np.conj(self.fourier("g", xi))


# ------------------------------------------------------------ radial profiles

def ball_profile(t):
    return (np.asarray(t, dtype=float) <= 1.0).astype(float)


def step_profile(t):
    return (np.asarray(t, dtype=float) >= 1.0).astype(float)


def unit_profile(t):
    return np.ones_like(np.asarray(t, dtype=float))


def sampled_profile(s: SampledFunction):
    """Piecewise-linear profile through the samples, constant beyond them."""
    x, v = s.x, np.real(s.values)

    def m(t):
        return np.interp(np.asarray(t, dtype=float), x, v)
    return m


def parse_profile(text: str):
    if text == "ball":
        return ball_profile
    if text == "step":
        return step_profile
    if text in ("one", "unit"):
        return unit_profile
    if text.startswith("file:"):
        with open(text[5:]) as fh:
            return sampled_profile(SampledFunction.from_csv(fh.read()))
    raise InvalidArgument(f"unknown profile {text!r}")


# ------------------------------------------------------------ world grid

@dataclass(frozen=True)
class GridField2D:
    """Samples on an n x n periodic grid of side ``extent`` centred at ``center``;
    values[iy, ix] sits at center - extent/2 + (i + 1/2) h."""

    extent: float
    values: np.ndarray
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values)
        n = v.shape[0]
        if v.ndim != 2 or v.shape[1] != n or n & (n - 1):
            raise InvalidArgument("values must be square with a power-of-two side")
        if not self.extent > 0:
            raise InvalidArgument("extent must be positive")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, extent, n, center=(0.0, 0.0)):
        return cls(extent, np.zeros((n, n), dtype=complex), tuple(center))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return self.extent / self.n

    def axes(self):
        c = np.arange(self.n) * self.h - 0.5 * self.extent + 0.5 * self.h
        return c + self.center[0], c + self.center[1]

    def freqs(self):
        k = np.fft.fftfreq(self.n, self.h)
        return np.meshgrid(k, k, indexing="xy")

    def with_values(self, values) -> "GridField2D":
        return GridField2D(self.extent, values, self.center)

    def same_grid(self, other: "GridField2D") -> bool:
        return self.n == other.n and self.extent == other.extent and self.center == other.center

    def norm(self, p: float = 2.0) -> float:
        a = np.abs(self.values)
        if p == math.inf:
            return float(a.max())
        return float((np.sum(a ** p) * self.h ** 2) ** (1.0 / p))

    def inner(self, other: "GridField2D") -> complex:
        return complex(np.sum(self.values * np.conj(other.values)) * self.h ** 2)

    def spectral_norm(self) -> float:
        """L2 norm computed on the frequency side (Parseval check)."""
        F = np.fft.fft2(self.values)
        return float(math.sqrt(np.sum(np.abs(F) ** 2) / self.n ** 2) * self.h)


@dataclass(frozen=True)
class DirectionalSymbol:
    """m(<xi, u>) ("directional") or m(|u + xi / r|) ("scaled_radial")."""

    direction: tuple
    r: float
    profile: object
    mode: str = "scaled_radial"

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float)
        if u.shape != (2,) or abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise InvalidArgument("direction must be a unit vector in the plane")
        if self.mode not in ("directional", "scaled_radial"):
            raise InvalidArgument("mode must be 'directional' or 'scaled_radial'")
        if not self.r > 0:
            raise InvalidArgument("r must be positive")

    def __call__(self, kx, ky):
        u = self.direction
        if self.mode == "directional":
            return self.profile(kx * u[0] + ky * u[1])
        return self.profile(np.hypot(u[0] + kx / self.r, u[1] + ky / self.r))


def apply_multiplier(f: GridField2D, sym) -> GridField2D:
    """inverse FFT of symbol * FFT(f).  ``sym`` is a DirectionalSymbol, a radial
    profile m (used as m(|xi|)) or an array of symbol samples."""
    kx, ky = f.freqs()
    if isinstance(sym, DirectionalSymbol):
        s = sym(kx, ky)
    elif callable(sym):
        s = sym(np.hypot(kx, ky))
    else:
        s = np.asarray(sym)
    s = np.asarray(s)
    if s.shape != f.values.shape:
        s = np.broadcast_to(s, f.values.shape)
    if not np.all(np.isfinite(s)):
        raise InvalidArgument("symbol has non-finite samples")
    return f.with_values(np.fft.ifft2(s * np.fft.fft2(f.values)))


def square_function(fields) -> GridField2D:
    """Pointwise (sum_j |F_j|^2)^(1/2)."""
    fields = list(fields)
    if not fields:
        raise InvalidArgument("need at least one field")
    first = fields[0]
    acc = np.zeros(first.values.shape)
    for fl in fields:
        if not first.same_grid(fl):
            raise InvalidArgument("fields live on different grids")
        acc += np.abs(fl.values) ** 2
    return first.with_values(np.sqrt(acc))


@dataclass(frozen=True)
class TestFunctionPair:
    f: GridField2D
    g: GridField2D
    index: int
    direction: tuple


def _conj_exp(p):
    return p / (p - 1.0)


def _frame_coords(x, y, origin, direction):
    dx, dy = x - origin[0], y - origin[1]
    return dx * direction[0] + dy * direction[1], -dx * direction[1] + dy * direction[0]


def build_test_functions(family: TubeFamily, p: float, profiles: TestProfiles | None = None,
                         n: int = 512, extent: float | None = None, center=None,
                         margin: float = 0.5) -> list:
    """Sample f_j and g_j for every tube on a common world grid."""
    if family.d != 2:
        raise InvalidArgument("test functions are built in the plane")
    if not p > 1:
        raise InvalidArgument("p must exceed 1")
    profiles = profiles or TestProfiles(tuple(family.window))
    q = _conj_exp(p)
    delta = family.delta
    pts = np.concatenate([family.quads(False).reshape(-1, 2), family.quads(True).reshape(-1, 2)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if center is None:
        center = tuple(0.5 * (lo + hi))
    if extent is None:
        extent = 8.0 * family.diameter()
    if np.any(np.abs(np.concatenate([lo, hi]) - np.tile(center, 2)) > 0.5 * extent - margin):
        raise DomainTooSmall("family does not fit inside the grid with the requested margin")
    grid = GridField2D.zeros(extent, n, center)
    if grid.h > delta / 2:
        raise ResolutionTooCoarse(f"grid spacing {grid.h:.3g} does not resolve delta = {delta:.3g}")
    xs, ys = grid.axes()
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    out = []
    for j, t in enumerate(family.tubes):
        s, tau = _frame_coords(X, Y, t.origin, t.direction)
        r = profiles.rho(tau / delta)
        fj = delta ** (-1.0 / p) * profiles.f(s) * r
        gj = delta ** (-1.0 / q) * profiles.g(s) * r
        out.append(TestFunctionPair(grid.with_values(fj.astype(complex)),
                                    grid.with_values(gj.astype(complex)), j, tuple(t.direction)))
    return out


def tube_symbols(family: TubeFamily, profile, r: float) -> list:
    return [DirectionalSymbol(tuple(t.direction), r, profile) for t in family.tubes]


def kakeya_pairing(pairs, syms) -> tuple:
    """(per_j, mean, spread) with per_j = integral of (T_j f_j) conj(g_j)."""
    if len(pairs) != len(syms):
        raise InvalidArgument("one symbol per pair is required")
    per = [apply_multiplier(pr.f, s).inner(pr.g) for pr, s in zip(pairs, syms)]
    mean = complex(np.mean(per)) if per else 0j
    spread = float(max(abs(v - mean) for v in per)) if per else 0.0
    return per, mean, spread


def limit_pairing(profile, r: float, profiles: TestProfiles, width: float = 60.0,
                  n: int = 24001) -> complex:
    """integral of m(exp(x / r)) h^(x) dx, the value the pairing approaches as r delta^2 grows."""
    x = np.linspace(-width, width, n)
    return complex(np.trapezoid(profile(np.exp(x / r)) * profiles.h_hat(x), x))


# ------------------------------------------------------------ frame route

@dataclass(frozen=True)
class FrameTable:
    """A function of (sigma, tau / delta) sampled on a periodic grid."""

    values: np.ndarray  # shape (ns, nt)
    s0: float
    ds: float
    t0: float
    dt: float

    def sums(self, pts, family, scale=1.0, box=None):
        """sum over tubes of |scale * table|^2 at world points, and the covering count
        for the frame box ``box = (s_lo, s_hi, t_lo, t_hi)``."""
        box = box or (0.0, 1.0, -1.0, 1.0)
        tab = np.ascontiguousarray(self.values * scale, dtype=np.complex128)
        return _kernels.frame_sums(np.ascontiguousarray(pts, dtype=np.float64),
                                   np.ascontiguousarray(family.origins(), dtype=np.float64),
                                   np.ascontiguousarray(family.directions(), dtype=np.float64),
                                   float(family.delta), tab, self.s0, self.ds, self.t0, self.dt,
                                   *map(float, box))


def frame_tables(profiles: TestProfiles, profile, r: float, delta: float, n: int = 2048,
                 t_half: float = 64.0, s_period: float = 128.0) -> tuple:
    """Frame-coordinate tables of f(sigma) rho(t), g(sigma) rho(t) and of the multiplier
    output, whose symbol is m(sqrt((1 + xi/r)^2 + (eta / (r delta))^2)).

    The boxes are periodic; large periods keep the slowly decaying tails of sharp
    symbols from wrapping onto the translates.
    """
    a, b = profiles.window
    s_lo = 0.5 * b - 0.5 * s_period
    ds = s_period / n
    dt = 2.0 * t_half / n
    s = s_lo + ds * np.arange(n)
    t = -t_half + dt * np.arange(n)
    F0 = np.multiply.outer(profiles.f(s), profiles.rho(t))
    G0 = np.multiply.outer(profiles.g(s), profiles.rho(t))
    xi = np.fft.fftfreq(n, ds)
    eta = np.fft.fftfreq(n, dt)
    sym = profile(np.sqrt(np.add.outer((1.0 + xi / r) ** 2, (eta / (r * delta)) ** 2)))
    if not np.all(np.isfinite(sym)):
        raise InvalidArgument("symbol has non-finite samples")
    TF = np.fft.ifft2(sym * np.fft.fft2(F0))
    mk = lambda v: FrameTable(v, s_lo, ds, -t_half, dt)
    return mk(F0.astype(complex)), mk(G0.astype(complex)), mk(TF), ds * dt


def pairing_reference(profile, r: float, delta: float, profiles: TestProfiles,
                      xi_max: float = 80.0, eta_max: float = 12.0, n_eta: int = 8001,
                      panels: int = 16, nodes: int = 48) -> complex:
    """The pairing as the frequency integral of m(...) h^(xi) |rho^(eta)|^2 (no
    spatial periodization); used as a reference for the table value.

    Each half-line in xi is integrated in s = sqrt(|xi|) with Gauss-Legendre panels,
    which absorbs the square-root behaviour of sharp symbols at xi = 0.
    """
    eta = np.linspace(-eta_max, eta_max, n_eta)
    rr = np.abs(profiles.fourier("rho", eta)) ** 2
    e2 = (eta / (r * delta)) ** 2
    z, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, math.sqrt(xi_max), panels + 1)
    sn = np.concatenate([0.5 * (b - a) * z + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    sw = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    total = 0j
    for sign in (-1.0, 1.0):
        xi = sign * sn * sn
        sym = profile(np.sqrt(np.add.outer((1.0 + xi / r) ** 2, e2)))
        inner = np.trapezoid(sym * rr[None, :], eta, axis=1)
        total += np.sum(inner * profiles.h_hat(xi) * 2.0 * sn * sw)
    return complex(total)


def _box_nodes(family: TubeFamily, s_range, ns: int, nt: int):
    """Midpoint nodes of every tube's frame box s in s_range, |t| <= 1, in world
    coordinates; returns points (N * ns * nt, 2), frame (s, t) of one box, cell area."""
    s_lo, s_hi = s_range
    ds = (s_hi - s_lo) / ns
    dt = 2.0 / nt
    s = s_lo + ds * (np.arange(ns) + 0.5)
    t = -1.0 + dt * (np.arange(nt) + 0.5)
    S, T = np.meshgrid(s, t, indexing="ij")
    S, T = S.ravel(), T.ravel()
    o = family.origins()
    v = family.directions()
    w = np.stack([-v[:, 1], v[:, 0]], axis=1)
    delta = family.delta
    pts = (o[:, None, :] + S[None, :, None] * v[:, None, :]
           + (delta * T)[None, :, None] * w[:, None, :]).reshape(-1, 2)
    return pts, S, T, ds * dt * delta


def _weighted_norm(own_sq, total_sq, weight, p):
    """integral of (sum_i |F_i|^2)^(p/2) via the partition |F_j|^2 / sum_i |F_i|^2."""
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(total_sq > 0, own_sq * total_sq ** (p / 2.0 - 1.0), 0.0)
    return float(vals.sum() * weight) ** (1.0 / p)


def certify_lower_bound(family: TubeFamily, profile, p: float, r: float, n: int = 2048,
                        profiles: TestProfiles | None = None, quad=(128, 32),
                        t_half: float = 64.0, s_period: float = 128.0) -> BoundReport:
    """Lower bounds for the square-function constant S of the directional family.

    Chain (each step reported with its slack):
      LHS = |sum_j integral T_j f_j conj(g_j)|
          <= integral sqTF sqG                          (Cauchy-Schwarz)
          <= ||sqTF||_{p, union of translates} ||sqG||_q (Hoelder)
          =  S_direct ||sqF||_p ||sqG||_q
          <= S_direct N (c eps)^(1/p-1/2) ||f||_2 ||g||_q ||rho||_q.
    S >= S_direct >= S_chain = LHS / (N (c eps)^(1/p-1/2) ||f||_2 ||g||_q ||rho||_q).
    """
    if family.d != 2:
        raise InvalidArgument("certification is implemented in the plane")
    if not 1 < p < 2:
        raise InvalidArgument("p must lie in (1, 2); use the conjugate exponent otherwise")
    if not r >= 1:
        raise InvalidArgument("r must be >= 1")
    if any(abs(t.length - 1.0) > 1e-12 for t in family.tubes):
        raise InvalidArgument("certification expects unit-length tubes")
    try:
        comp = compression_ratio(family)
    except ConstraintViolation as exc:
        raise ConstraintViolation("translate disjointness certificate failed; refusing to certify",
                                  exc.pairs) from exc
    profiles = profiles or TestProfiles(tuple(family.window))
    a, b = profiles.window
    q = _conj_exp(p)
    N = len(family)
    delta = family.delta
    c = unit_ball_volume(1)
    eps = comp.value
    eps_up = eps + comp.error_estimate

    F0, G0, TF, cell = frame_tables(profiles, profile, r, delta, n, t_half, s_period)
    per = complex(np.sum(TF.values * np.conj(G0.values)) * cell)
    lhs = abs(N * per)

    ns, nt = quad
    # tubes: ||sqF||_p
    pts, S, T, w = _box_nodes(family, (0.0, 1.0), ns, nt)
    own = np.tile((delta ** (-1.0 / p) * profiles.f(S) * profiles.rho(T)) ** 2, N)
    tot, _ = F0.sums(pts, family, delta ** (-1.0 / p))
    sqF_p = _weighted_norm(own, tot, w, p)
    # translates: sqTF and g (disjoint, so sqG = |g_j| there)
    pts, S, T, w = _box_nodes(family, (a, b), int(ns * (b - a)), nt)
    gabs = np.tile(delta ** (-1.0 / q) * np.abs(profiles.g(S) * profiles.rho(T)), N)
    tf2, _ = TF.sums(pts, family, delta ** (-1.0 / p))
    cs = float(np.sum(np.sqrt(tf2) * gabs) * w)
    sqTF_p = float(np.sum(tf2 ** (p / 2.0)) * w) ** (1.0 / p)
    sqG_q = float(np.sum(gabs ** q) * w) ** (1.0 / q)
    holder = sqTF_p * sqG_q
    S_direct = sqTF_p / sqF_p
    f2, gq, rq = profiles.norm("f", 2), profiles.norm("g", q), profiles.norm("rho", q)
    kakeya = N * (c * eps_up) ** (1.0 / p - 0.5) * f2 * gq * rq
    S_pair = lhs / (sqF_p * sqG_q)
    S_chain = lhs / (N * (c * eps) ** (1.0 / p - 0.5) * f2 * gq * rq)
    steps = {
        "cauchy_schwarz": (cs - lhs) / max(cs, 1e-300),
        "hoelder": (holder - cs) / max(holder, 1e-300),
        "kakeya": (kakeya - sqF_p * sqG_q) / kakeya,
    }
    limit = limit_pairing(profile, r, profiles)
    reference = pairing_reference(profile, r, delta, profiles)
    return BoundReport(
        name="certify_lower_bound",
        value=S_chain,
        params={"p": p, "r": r, "n": n, "n_tubes": N, "delta": delta, "window": [a, b],
                "quad": list(quad), "t_half": t_half, "s_period": s_period,
                "family": family.meta.get("name", ""), "family_params": family.meta.get("params", {})},
        provenance=["pairing of the tube test functions",
                    "Cauchy-Schwarz over the tubes", "Hoelder on the union of translates",
                    "square-function constant", "union-to-sum ratio of the tubes",
                    "square-function constant bounded by the multiplier norm (analytic, not computed)"],
        error_estimate=float(abs(S_chain) * comp.error_estimate / max(eps, 1e-300) * abs(1 / p - 0.5)),
        data={"lhs": lhs, "per_j": per, "per_spread": 0.0, "per_reference": reference, "limit_pairing": limit,
              "limit_deviation": abs(per - limit), "r_delta2": r * delta * delta,
              "cs_integral": cs, "hoelder_bound": holder, "sqTF_p": sqTF_p, "sqF_p": sqF_p,
              "sqG_q": sqG_q, "kakeya_bound": kakeya, "epsilon": eps, "epsilon_upper": eps_up,
              "c": c, "f_2": f2, "g_q": gq, "rho_q": rq,
              "S_direct": S_direct, "S_pair": S_pair, "S_chain": S_chain, "slacks": steps},
    )


def pairing_world_grid(family: TubeFamily, profile, p: float, r: float, n: int = 512,
                       extent: float | None = None) -> dict:
    """Per-tube pairings on a world grid (small families and small r only)."""
    pairs = build_test_functions(family, p, n=n, extent=extent)
    per, mean, spread = kakeya_pairing(pairs, tube_symbols(family, profile, r))
    return {"per_j": per, "mean": mean, "spread": spread}


# ------------------------------------------------------- change of variable

def helper_inequalities(F: SampledFunction) -> dict:
    """||xF||_1 vs (1/2)||x^2 F'||_1 and ||F||_1 vs ||x F'||_1."""
    x, v, h = F.x, F.values, F.spacing
    dF = np.gradient(v, h)
    l1 = lambda a: float(np.sum(np.abs(a)) * h)
    return {"xF": l1(x * v), "half_x2dF": 0.5 * l1(x * x * dF),
            "F": l1(v), "xdF": l1(x * dF)}


def _cov_integrals(F: SampledFunction, G: SampledFunction, m, r1: float, r2: float):
    x, y = F.x, G.x
    wx = F.values * F.spacing
    wy = G.values * G.spacing
    # (1 + x/r1)^2 - 1 + y^2/r2^2 kept small-argument accurate
    inner = np.add.outer(2 * x / r1 + (x / r1) ** 2, (y / r2) ** 2)
    arg = np.exp(0.5 * np.log1p(inner))
    Ia = (m(arg) * wy[None, :]).sum(axis=1)
    Ib = m(np.exp(x / r1)) * wy.sum()
    return Ia, Ib, wx


def change_of_variable_check(F: SampledFunction, G: SampledFunction, m, r1: float, r2: float,
                             rtol: float = 1e-2) -> BoundReport:
    """|A - B| against ||(1+y^2) G||_1 (r1/r2^2 ||F'||_1 + ||x^2 F'||_1 / r1).

    A = double integral of F(x) G(y) m(sqrt((1 + x/r1)^2 + y^2/r2^2)),
    B = (integral F(x) m(exp(x/r1))) (integral G).  Quadrature is repeated on every
    other sample; disagreement above ``rtol`` of the budget raises AccuracyFailure.
    """
    if not r1 >= r2 >= 1:
        raise InvalidArgument("need r1 >= r2 >= 1")
    Ia, Ib, wx = _cov_integrals(F, G, m, r1, r2)
    A = complex(np.sum(wx * Ia))
    B = complex(np.sum(wx * Ib))
    diff = abs(np.sum(wx * (Ia - Ib)))
    x, y = F.x, G.x
    dF = np.gradient(F.values, F.spacing)
    budget = (float(np.sum(np.abs((1 + y * y) * G.values)) * G.spacing)
              * (r1 / r2 ** 2 * float(np.sum(np.abs(dF)) * F.spacing)
                 + float(np.sum(np.abs(x * x * dF)) * F.spacing) / r1))
    Fc = SampledFunction(F.start, 2 * F.spacing, F.values[::2])
    Gc = SampledFunction(G.start, 2 * G.spacing, G.values[::2])
    Ia2, Ib2, wx2 = _cov_integrals(Fc, Gc, m, r1, r2)
    coarse = abs(np.sum(wx2 * (Ia2 - Ib2)))
    qerr = abs(coarse - diff)
    if budget > 0 and qerr > rtol * budget:
        raise AccuracyFailure(f"quadrature disagreement {qerr:.3e} exceeds {rtol} of the budget")
    ratio = diff / budget if budget > 0 else 0.0
    return BoundReport(name="change_of_variable_check", value=float(ratio),
                       params={"r1": r1, "r2": r2},
                       provenance=["change of variables to logarithmic radius"],
                       error_estimate=float(qerr / budget) if budget > 0 else 0.0,
                       data={"A": A, "B": B, "abs_diff": float(diff), "budget": budget,
                             **helper_inequalities(F)})


# ------------------------------------------------------------ relaxed gain

def relaxed_gain_check(family: TubeFamily, p: float, profiles: TestProfiles | None = None,
                       quad=(128, 32), n: int = 1024) -> BoundReport:
    """||sqF||_p ||sqG||_q against N eps^(1/p - 1/2) with eps the relaxed score; the
    translates may overlap.  Reports the smallest admissible constant."""
    if family.d != 2:
        raise InvalidArgument("relaxed check is implemented in the plane")
    if not 4.0 / 3.0 - 1e-12 <= p <= 2.0:
        raise InvalidArgument("p must lie in [4/3, 2]")
    profiles = profiles or TestProfiles(tuple(family.window))
    a, b = profiles.window
    q = _conj_exp(p)
    N = len(family)
    delta = family.delta
    c = unit_ball_volume(1)
    score = relaxed_score(family)
    eps = score.value
    F0, G0, _, _ = frame_tables(profiles, unit_profile, 1.0, delta, n, t_half=4.0, s_period=16.0)
    ns, nt = quad
    pts, S, T, w = _box_nodes(family, (0.0, 1.0), ns, nt)
    own = np.tile((delta ** (-1.0 / p) * profiles.f(S) * profiles.rho(T)) ** 2, N)
    tot, _ = F0.sums(pts, family, delta ** (-1.0 / p))
    sqF_p = _weighted_norm(own, tot, w, p)
    pts, S, T, w = _box_nodes(family, (a, b), int(ns * (b - a)), nt)
    own = np.tile((delta ** (-1.0 / q) * profiles.g(S) * profiles.rho(T)) ** 2, N)
    tot, _ = G0.sums(pts, family, delta ** (-1.0 / q))
    sqG_q = _weighted_norm(own, tot, w, q)
    lhs = sqF_p * sqG_q
    gain = eps ** (1.0 / p - 0.5)
    C = lhs / (N * gain)
    f2, r2n = profiles.norm("f", 2), profiles.norm("rho", 2)
    data = {"lhs": lhs, "sqF_p": sqF_p, "sqG_q": sqG_q, "epsilon": eps, "C": C,
            "C_p2": f2 * profiles.norm("g", 2) * r2n * r2n}
    if p < 2:
        e = 2 * p / (3 * p - 4) if p > 4 / 3 + 1e-12 else math.inf
        e2 = 2 * q / (3 * p - 4) if p > 4 / 3 + 1e-12 else math.inf
        data["C_interpolated"] = (c ** (2 / p - 1) * f2 * profiles.norm("g", e) * r2n
                                  * profiles.norm("rho", e2))
    if abs(p - 4.0 / 3.0) < 1e-12:
        union = score.data["union_ratio"] * family.total_measure
        _, areas = translate_overlap_areas(family)
        nbar_sq = float(sum(t.measure for t in family.translates().tubes) + 2 * areas.sum())
        ginf, rinf = profiles.norm("g", math.inf), profiles.norm("rho", math.inf)
        route = (union ** 0.25 * math.sqrt(N) * delta ** -0.25 * f2 * r2n
                 * ginf * rinf * delta ** -0.25 * nbar_sq ** 0.25)
        data.update(counting_route=route, nbar_l2_sq=nbar_sq,
                    counting_route_bound=math.sqrt(c) * N * eps ** 0.25 * f2 * ginf * r2n * rinf)
    return BoundReport(name="relaxed_gain_check", value=C,
                       params={"p": p, "n_tubes": N, "delta": delta, "window": [a, b]},
                       provenance=["union-to-sum ratio times translate self-overlap",
                                   "Hoelder on the union of tubes"],
                       error_estimate=score.error_estimate / max(eps, 1e-300) * abs(1 / p - 0.5) * C,
                       data=data)
