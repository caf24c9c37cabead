"""Evaluators for the explicit bounds: infimum bound, dyadic-piece bounds, moduli of
continuity and integrability of the compression functional."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument
from .report import (CONVERGES, DEGENERATE, DIVERGES, EXTRAPOLATED, INFINITE,
                     BoundReport)

GRID_POINTS = 2048
GRID_LO = 1e-8
SIMPSON_TOL = 1e-10


@dataclass(frozen=True)
class FModel:
    """A model of delta -> f_d(delta) with values in (0, 1].

    ``log_power``: min(1, |log delta|^-a); ``power``: delta^e; ``tabulated``: log-log
    interpolation of measured points, extended below the smallest measured delta by
    the fit C / |log delta| and held constant above the largest.
    """

    form: str
    param: float = 1.0
    deltas: tuple = ()
    values: tuple = ()
    C: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.form not in ("log_power", "power", "tabulated"):
            raise InvalidArgument(f"unknown model form {self.form!r}")
        if self.form != "tabulated" and not self.param > 0:
            raise InvalidArgument("model parameter must be positive")
        if self.form == "tabulated":
            if len(self.deltas) < 1 or len(self.deltas) != len(self.values):
                raise InvalidArgument("tabulated model needs matching deltas and values")

    @classmethod
    def log_power(cls, a: float) -> "FModel":
        return cls("log_power", float(a))

    @classmethod
    def power(cls, e: float) -> "FModel":
        return cls("power", float(e))

    @classmethod
    def tabulated(cls, deltas, values) -> "FModel":
        d = np.asarray(deltas, dtype=float)
        v = np.asarray(values, dtype=float)
        if np.any(d <= 0) or np.any(d >= 1) or np.any(v <= 0):
            raise InvalidArgument("tabulated points need 0 < delta < 1 and positive values")
        order = np.argsort(d)
        d, v = d[order], v[order]
        x = 1.0 / np.abs(np.log(d))
        C = float(x @ v / (x @ x))
        return cls("tabulated", 1.0, tuple(d), tuple(v), C)

    @classmethod
    def from_curve(cls, curve) -> "FModel":
        return cls.tabulated(curve.deltas, curve.epsilons)

    @classmethod
    def parse(cls, text: str) -> "FModel":
        """``log:A``, ``power:E``; tabulated curves are loaded by the caller."""
        kind, _, arg = text.partition(":")
        if kind in ("log", "log_power"):
            return cls.log_power(float(arg or 1))
        if kind in ("power", "pow"):
            return cls.power(float(arg or 1))
        raise InvalidArgument(f"cannot parse model {text!r}")

    @property
    def delta_min(self) -> float:
        return self.deltas[0] if self.form == "tabulated" else 0.0

    def log_value(self, logd):
        """log f(delta) as a function of log delta (vectorized)."""
        logd = np.asarray(logd, dtype=float)
        if self.form == "power":
            return self.param * logd
        if self.form == "log_power":
            with np.errstate(divide="ignore"):
                return np.minimum(0.0, -self.param * np.log(np.abs(logd)))
        ld = np.log(np.asarray(self.deltas))
        lv = np.log(np.asarray(self.values))
        inside = np.interp(logd, ld, lv) if ld.size > 1 else np.full(logd.shape, lv[0])
        with np.errstate(divide="ignore"):
            tail = np.minimum(0.0, math.log(self.C) - np.log(np.abs(logd)))
        return np.where(logd < ld[0], tail, inside)

    def __call__(self, delta):
        return np.exp(self.log_value(np.log(np.asarray(delta, dtype=float))))

    def to_dict(self) -> dict:
        out = {"form": self.form, "param": self.param}
        if self.form == "tabulated":
            out.update(deltas=list(self.deltas), values=list(self.values), C=self.C)
        return out


def _q(p: float) -> float:
    if not (p > 1 and p < math.inf):
        raise InvalidArgument("p must lie in (1, inf)")
    return abs(1.0 / p - 0.5)


def _grid_inf(fun, lo: float, hi: float, points: int = GRID_POINTS):
    """Minimize fun(log delta) on a log-spaced grid over [lo, hi], then refine once
    around the argmin; the lower end is pushed down while the argmin sits on it."""
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(60):
        g = np.linspace(llo, lhi, points)
        vals = fun(g)
        i = int(np.nanargmin(vals))
        if i > 0 or llo < -700:
            break
        llo -= (lhi - llo)
    a, b = g[max(i - 1, 0)], g[min(i + 1, points - 1)]
    fine = np.linspace(a, b, points)
    fv = fun(fine)
    j = int(np.nanargmin(fv))
    if fv[j] <= vals[i]:
        return float(fv[j]), float(math.exp(fine[j])), float(llo)
    return float(vals[i]), float(math.exp(g[i])), float(llo)


class InfimumResult(NamedTuple):
    closed_form: float
    grid_min: float
    argmin: float
    at_prescribed: float


def infimum_bound(alpha: float, beta: float, A: float, points: int = 10_000) -> InfimumResult:
    """inf_delta delta^alpha + 1/(A delta^beta) against its upper bound 2 A^(-alpha/(alpha+beta)).

    The grid covers log delta from well below the balancing point up to 0 and contains
    the balancing point itself.
    """
    if not (alpha > 0 and beta > 0):
        raise InvalidArgument("alpha and beta must be positive")
    if not A >= 1:
        raise InvalidArgument("A must be >= 1")
    lA = math.log(A)
    star = -lA / (alpha + beta)

    def fun(l):
        return np.exp(alpha * l) + np.exp(-lA - beta * l)

    lo = min(math.log(GRID_LO), star - 20.0)
    grid = np.append(np.linspace(lo, 0.0, points), star)
    vals = fun(grid)
    i = int(np.argmin(vals))
    closed = 2.0 * math.exp(-alpha * lA / (alpha + beta))
    return InfimumResult(closed, float(vals[i]), float(math.exp(grid[i])), float(fun(np.array([star]))[0]))


def infimum_bound_log(alpha: float, beta: float, A: float) -> tuple:
    """inf over 0 < delta < 1 of |log delta|^-alpha + 1/(A delta^beta).

    Evaluated at delta = min(A^(-1/beta) log(1+A)^(alpha/beta), 1/2) and on a grid;
    returns the smaller value and its delta.
    """
    if not (alpha > 0 and beta > 0):
        raise InvalidArgument("alpha and beta must be positive")
    if not A >= 1:
        raise InvalidArgument("A must be >= 1")
    lA = math.log(A)

    def fun(l):
        with np.errstate(over="ignore", divide="ignore"):
            return np.abs(l) ** -alpha + np.exp(-lA - beta * l)

    lp = min(-lA / beta + alpha / beta * math.log(math.log1p(A)), math.log(0.5))
    vp = float(fun(np.array([lp]))[0])
    # grid in t = log(1/delta), log-spaced, covering both competing terms
    t = np.geomspace(1e-6, max(50.0, 10.0 * (lA + 1.0) / beta), 20_000)
    vals = fun(-t)
    i = int(np.argmin(vals))
    if vals[i] < vp:
        return float(vals[i]), float(math.exp(-t[i]))
    return vp, float(math.exp(lp))


def _inf_report(name, fd, p, n, norm, C_d, second, provenance, extra=None, flags=None):
    q = _q(p)
    flags = list(flags or [])

    def fun(l):
        return np.exp(q * fd.log_value(l)) + second(l)

    if p == 2:
        flags.append(DEGENERATE)
    val, arg, llo = _grid_inf(fun, GRID_LO, 1.0)
    if fd.form == "tabulated" and arg < fd.delta_min:
        flags.append(EXTRAPOLATED)
    data = {"argmin": arg, "grid_lo": math.exp(llo), "infimum": val}
    data.update(extra or {})
    return BoundReport(name=name, value=C_d * norm * val,
                       params={"fd": fd.to_dict(), "p": p, "n": n, "norm": norm, "C_d": C_d},
                       provenance=provenance, flags=flags, data=data)


def wn_bound_euclidean(fd: FModel, p: float, n: int, norm_T: float = 1.0,
                       C_d: float = 1.0) -> BoundReport:
    """C_d ||T|| inf_delta f(delta)^|1/p-1/2| + 1/(2^n delta^2)."""
    if n < 0:
        raise InvalidArgument("n must be >= 0")
    q = _q(p)
    extra = {}
    if fd.form == "log_power" and fd.param == 1 and n >= 1:
        extra["simplified"] = float(n ** -q)
    return _inf_report("wn_bound_euclidean", fd, p, n, norm_T, C_d,
                       lambda l: np.exp(-n * math.log(2) - 2 * l),
                       ["dyadic piece bounded by tube compression plus scale term",
                        "infimum over the tube width"], extra)


def wn_bound_spherical(fd: FModel, p: float, n: int, theta: float, norm_MS: float = 1.0,
                       C_d: float = 1.0) -> BoundReport:
    """C_d ||m||_MS inf_delta f(delta)^|1/p-1/2| + (delta^2 2^n sin theta)^(-1/3)."""
    if n < 0:
        raise InvalidArgument("n must be >= 0")
    s = math.sin(theta)
    if not (0 < theta < math.pi) or s <= 0:
        raise InvalidArgument("theta must lie strictly between 0 and pi")
    q = _q(p)
    ls = math.log(s)
    extra = {"simplified": float(max(1.0, n + math.log(abs(s))) ** -q), "clamped": n + ls <= 1}
    return _inf_report("wn_bound_spherical", fd, p, n, norm_MS, C_d,
                       lambda l: np.exp(-(2 * l + n * math.log(2) + ls) / 3.0),
                       ["dyadic piece on the sphere bounded by tube compression plus angular term",
                        "infimum over the tube width"], extra)


def _simpson(f, a, b, tol, depth=50):
    """Adaptive Simpson; returns (value, error estimate)."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol, depth)]
    total = err = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = f(0.5 * (a + m)), f(0.5 * (m + b))
        left = (m - a) * (fa + 4 * lm + fm) / 6.0
        right = (b - m) * (fm + 4 * rm + fb) / 6.0
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * tol:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            stack.append((a, m, fa, lm, fm, left, tol / 2, depth - 1))
            stack.append((m, b, fm, rm, fb, right, tol / 2, depth - 1))
    return total, err


def _convergence(fd: FModel, q: float):
    """(converges, decisive exponent) for the integral of f^q / delta at 0."""
    if fd.form == "power":
        return True, q * fd.param
    # log_power and the C/|log delta| tail of tabulated models
    a = fd.param if fd.form == "log_power" else 1.0
    return a * q > 1, a * q


def log_integral(fd: FModel, q: float, u: float, tol: float = SIMPSON_TOL):
    """Integral over (0, u) of f(delta)^q / delta.

    Returns (value, error, flags).  With t = log(1/delta) and t = t0 e^v the integrand
    decays exponentially in v for convergent model forms; beyond v = V the tail of the
    model form is added in closed form.
    """
    if not 0 < u < 1:
        raise InvalidArgument("upper limit must lie in (0, 1)")
    ok, expo = _convergence(fd, q)
    flags = []
    if fd.form == "tabulated":
        # measured range only; the model tail is reported separately
        t_hi = -math.log(fd.delta_min)
        t0 = -math.log(u)
        flags.append(EXTRAPOLATED)
        if t0 >= t_hi:
            return 0.0, 0.0, flags
        g = lambda t: math.exp(q * float(fd.log_value(-t)))
        val, err = _simpson(g, t0, t_hi, tol)
        return val, err, flags
    if not ok:
        return math.inf, 0.0, [INFINITE]
    t0 = -math.log(u)
    body = 0.0
    if fd.form == "log_power" and t0 < 1.0:
        body = 1.0 - t0  # f = 1 on (1/e, u)
        t0 = 1.0
    V = 40.0 if fd.form == "log_power" else 8.0
    g = lambda v: t0 * math.exp(v) * math.exp(q * float(fd.log_value(-t0 * math.exp(v))))
    val, err = _simpson(g, 0.0, V, tol)
    T = t0 * math.exp(V)
    if fd.form == "log_power":
        tail = T ** (1.0 - expo) / (expo - 1.0)
    else:
        tail = math.exp(-expo * T) / expo
    return body + val + tail, err, flags


def modulus_bound_euclidean(fd: FModel, p: float, gap: float, norm_T: float = 1.0) -> BoundReport:
    """||T|| (integral_0^{gap^(1/4)} f^q / delta + gap^(1/4))."""
    if not 0 < gap < 1:
        raise InvalidArgument("gap must lie in (0, 1)")
    if p == 2:
        raise InvalidArgument("p = 2 gives no modulus")
    q = _q(p)
    u = gap ** 0.25
    val, err, flags = log_integral(fd, q, u)
    value = math.inf if math.isinf(val) else norm_T * (val + u)
    return BoundReport(name="modulus_bound_euclidean", value=value,
                       params={"fd": fd.to_dict(), "p": p, "gap": gap, "norm": norm_T},
                       provenance=["dyadic pieces summed against the compression functional",
                                   "log-scale integral of the compression functional"],
                       error_estimate=norm_T * err, flags=flags,
                       data={"integral": val, "upper_limit": u})


def modulus_bound_spherical(fd: FModel, p: float, s: float, t: float) -> BoundReport:
    """integral_0^{|s-t|^(1/3)} f^q / delta + |s-t|^(1/9) (|sin s|^-1/3 + |sin t|^-1/3)."""
    if s == t:
        raise InvalidArgument("s and t must differ")
    if math.sin(s) == 0 or math.sin(t) == 0:
        raise InvalidArgument("sin s and sin t must be nonzero")
    if p == 2:
        raise InvalidArgument("p = 2 gives no modulus")
    q = _q(p)
    gap = abs(s - t)
    u = gap ** (1.0 / 3.0)
    if u >= 1:
        raise InvalidArgument("|s - t| must be below 1")
    val, err, flags = log_integral(fd, q, u)
    ang = gap ** (1.0 / 9.0) * (abs(math.sin(s)) ** (-1 / 3) + abs(math.sin(t)) ** (-1 / 3))
    value = math.inf if math.isinf(val) else val + ang
    return BoundReport(name="modulus_bound_spherical", value=value,
                       params={"fd": fd.to_dict(), "p": p, "s": s, "t": t},
                       provenance=["spherical dyadic pieces summed against the compression functional",
                                   "log-scale integral of the compression functional"],
                       error_estimate=err, flags=flags,
                       data={"integral": val, "angular_term": ang, "upper_limit": u})


def integrability_test(fd: FModel, p: float, weight: str = "none") -> BoundReport:
    """Convergence at 0 of the integral of f^q w / delta, w = 1 or log|log delta|.

    log_power(a) converges iff a q > 1 under either weight; power always converges.
    Tabulated curves use the C/|log delta| tail fitted to the measured points.
    """
    if weight not in ("none", "loglog"):
        raise InvalidArgument("weight must be 'none' or 'loglog'")
    if p == 2:
        raise InvalidArgument("p = 2: the exponent vanishes and the integral diverges trivially")
    q = _q(p)
    ok, expo = _convergence(fd, q)
    flags = [CONVERGES if ok else DIVERGES]
    data = {"exponent": expo, "rule": "power" if fd.form == "power" else "a q > 1"}
    if fd.form == "tabulated":
        flags.append(EXTRAPOLATED)
        data["fitted_C"] = fd.C
        data["measured_delta_min"] = fd.delta_min
    return BoundReport(name="integrability_test", value=expo,
                       params={"fd": fd.to_dict(), "p": p, "weight": weight},
                       provenance=["integrability of the compression functional on a log scale"],
                       flags=flags, data=data)


def lp_coefficient_bounds(fd: FModel, p: float, n_max: int) -> np.ndarray:
    """c_n = inf_delta f(delta)^q + 1/(2^n delta^2) for n = 0..n_max."""
    q = _q(p)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        out[n], _, _ = _grid_inf(lambda l: np.exp(q * fd.log_value(l)) + np.exp(-n * math.log(2) - 2 * l),
                                 GRID_LO, 1.0, points=512)
    return out


def holder_modulus_bound(fd: FModel, p: float, gap: float, norm_T: float = 1.0,
                         coeffs: np.ndarray | None = None) -> BoundReport:
    """sum_n c_n min(2, 2^n gap): modulus of continuity assembled from the dyadic bounds
    |W_n * phi| <= c_n and |(W_n * phi)'| <= 2^n c_n."""
    if not 0 < gap < 1:
        raise InvalidArgument("gap must lie in (0, 1)")
    if coeffs is None:
        coeffs = lp_coefficient_bounds(fd, p, 64 + int(4 * math.log2(1.0 / gap)))
    n = np.arange(coeffs.size)
    terms = coeffs * np.minimum(2.0, 2.0 ** n * gap)
    # levels beyond the table: geometric continuation with the last observed ratio
    ratio = coeffs[-1] / coeffs[-2] if coeffs.size > 1 and coeffs[-2] > 0 else 0.0
    tail = 2.0 * coeffs[-1] * ratio / (1.0 - ratio) if ratio < 1 else math.inf
    return BoundReport(name="holder_modulus_bound", value=norm_T * float(terms.sum() + tail),
                       params={"fd": fd.to_dict(), "p": p, "gap": gap, "norm": norm_T},
                       provenance=["dyadic piece bounds", "Bernstein bound on dyadic derivatives"],
                       error_estimate=norm_T * float(abs(tail) * 1e-3),
                       data={"levels": int(coeffs.size), "tail": float(tail)})


def holder_exponent_fit(fd: FModel, p: float, gaps=None) -> dict:
    """Log-log slope of holder_modulus_bound over the gaps, next to the exponent
    eps|p-2| / (4p + eps|p-2|) expected for fd = power(eps)."""
    gaps = np.geomspace(1e-6, 1e-2, 17) if gaps is None else np.asarray(gaps, dtype=float)
    coeffs = lp_coefficient_bounds(fd, p, 64 + int(4 * math.log2(1.0 / gaps.min())))
    vals = np.array([holder_modulus_bound(fd, p, g, coeffs=coeffs).value for g in gaps])
    slope = float(np.polyfit(np.log(gaps), np.log(vals), 1)[0])
    out = {"slope": slope, "gaps": gaps.tolist(), "values": vals.tolist()}
    if fd.form == "power":
        e = fd.param
        out["expected"] = e * abs(p - 2) / (4 * p + e * abs(p - 2))
    return out
