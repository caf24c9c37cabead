"""Littlewood-Paley windows, dyadic pieces, Zygmund moduli and maximal functions.

Windows: ``chi`` is a C^inf step equal to 1 on [0, 1] and 0 on [2, inf) built from
``exp(-1/x)``.  With ``w0(x) = chi(|x|)`` and ``w(t) = chi(t) - chi(2t)`` the sum
``w0 + sum_{n=1}^N w(|x|/2^n)`` telescopes to ``chi(|x|/2^N)``, which is 1 on
``|x| <= 2^N``.  Frequencies are in cycles per unit (transform kernel e^{-2 pi i x xi}).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BandExceeded, ConstructionFailed, InvalidArgument
from .report import CONSISTENT_B0, INCONSISTENT, BoundReport

PARTITION_TOL = 1e-10


@dataclass(frozen=True)
class SampledFunction:
    """Samples ``values[i]`` of a function at ``start + i * spacing``."""

    start: float
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidArgument("values must be a non-empty 1-D array")
        if not self.spacing > 0:
            raise InvalidArgument("spacing must be positive")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, fn, start: float, spacing: float, n: int) -> "SampledFunction":
        x = start + spacing * np.arange(n)
        return cls(float(start), float(spacing), np.asarray(fn(x)))

    @property
    def x(self) -> np.ndarray:
        return self.start + self.spacing * np.arange(self.values.size)

    def __len__(self):
        return self.values.size

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or not np.any(self.values.imag)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.start, self.spacing, values)

    def primitive(self) -> "SampledFunction":
        """Cumulative trapezoid integral starting at 0 at the left end."""
        v = self.values
        c = np.concatenate([[0.0], np.cumsum((v[1:] + v[:-1]) * 0.5 * self.spacing)])
        return self.with_values(c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        real = self.is_real
        w.writerow(["x", "re"] if real else ["x", "re", "im"])
        for x, v in zip(self.x, self.values):
            row = [repr(float(x)), repr(float(np.real(v)))]
            if not real:
                row.append(repr(float(np.imag(v))))
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, rtol: float = 1e-6) -> "SampledFunction":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise InvalidArgument("empty CSV")
        x = np.array([float(r["x"]) for r in rows])
        re = np.array([float(r["re"]) for r in rows])
        vals = re
        if "im" in rows[0] and rows[0]["im"] not in (None, ""):
            vals = re + 1j * np.array([float(r["im"]) for r in rows])
        if x.size > 1:
            h = (x[-1] - x[0]) / (x.size - 1)
            if np.max(np.abs(np.diff(x) - h)) > rtol * abs(h):
                raise InvalidArgument("CSV samples must be uniformly spaced")
        else:
            h = 1.0
        return cls(float(x[0]), float(h), vals)


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C^inf step: 0 for x <= 0, 1 for x >= 1."""
    a = _psi(x)
    return a / (a + _psi(1.0 - np.asarray(x, dtype=float)))


def chi(t):
    """1 on |t| <= 1, 0 on |t| >= 2."""
    return 1.0 - smooth_step(np.abs(t) - 1.0)


def w0(x):
    return chi(x)


def w(t):
    """Dyadic window supported in 1/2 <= |t| <= 2."""
    t = np.abs(t)
    return chi(t) - chi(2.0 * t)


def window(n: int, x):
    """w_n(x) = w(|x| / 2^n) for n >= 1 and w_0 for n = 0."""
    return w0(x) if n == 0 else w(np.abs(x) / 2.0 ** n)


@dataclass(frozen=True)
class FilterBank:
    """Windows w_0..w_N and their samples on a frequency grid."""

    N: int
    freqs: np.ndarray
    multipliers: np.ndarray  # shape (N + 1, len(freqs))
    residual: float

    def windows(self, x) -> np.ndarray:
        return np.stack([window(n, x) for n in range(self.N + 1)])

    def partition_residual(self, x) -> float:
        """sup over the given |x| <= 2^N of |sum_n w_n(x) - 1|."""
        x = np.asarray(x, dtype=float)
        x = x[np.abs(x) <= 2.0 ** self.N]
        if x.size == 0:
            return 0.0
        return float(np.max(np.abs(self.windows(x).sum(axis=0) - 1.0)))


def build_filterbank(N: int, grid: SampledFunction | None = None,
                     freqs: np.ndarray | None = None) -> FilterBank:
    """Windows for levels 0..N sampled on the frequency grid of ``grid`` (its FFT
    frequencies) or on ``freqs``; default: a dense grid over ``|x| <= 2^(N+1)``."""
    if int(N) != N or N < 1:
        raise InvalidArgument("N must be an integer >= 1")
    N = int(N)
    if freqs is None:
        if grid is not None:
            freqs = np.fft.fftfreq(len(grid), grid.spacing)
        else:
            freqs = np.linspace(-(2.0 ** (N + 1)), 2.0 ** (N + 1), 2 ** 14 + 1)
    freqs = np.asarray(freqs, dtype=float)
    mult = np.stack([window(n, freqs) for n in range(N + 1)])
    band = np.abs(freqs) <= 2.0 ** N
    residual = float(np.max(np.abs(mult[:, band].sum(axis=0) - 1.0))) if band.any() else 0.0
    if residual > PARTITION_TOL:
        raise ConstructionFailed(f"partition residual {residual:.3e} exceeds tolerance")
    return FilterBank(N, freqs, mult, residual)


def _check_band(f: SampledFunction, N: int):
    nyq = 0.5 / f.spacing
    if 2.0 ** N > nyq:
        raise BandExceeded(f"level frequency 2^{N} exceeds the Nyquist frequency {nyq}")


def _padded_spectrum(f: SampledFunction, periodic: bool, pad: int):
    n = len(f)
    m = n if periodic else 1 << int(math.ceil(math.log2(max(pad * n, 2))))
    buf = np.zeros(m, dtype=np.result_type(f.values.dtype, np.float64))
    buf[:n] = f.values
    return np.fft.fft(buf), m


def lp_coefficients(f: SampledFunction, bank: FilterBank | int, periodic: bool = False,
                    pad: int = 4) -> list:
    """The pieces W_n * f, n = 0..N, on the grid of ``f``.

    Non-periodic input is zero-padded to ``pad`` times its length (next power of 2)
    before the spectral multiplication.
    """
    N = bank if isinstance(bank, int) else bank.N
    _check_band(f, N)
    spec, m = _padded_spectrum(f, periodic, pad)
    xi = np.fft.fftfreq(m, f.spacing)
    out = []
    real = f.is_real
    for n in range(N + 1):
        piece = np.fft.ifft(spec * window(n, xi))[: len(f)]
        out.append(f.with_values(piece.real if real else piece))
    return out


def lp_sup_norms(f: SampledFunction, bank: FilterBank | int, periodic: bool = False,
                 pad: int = 4, oversample: int = 8) -> np.ndarray:
    """sup-norms of W_n * f for n = 0..N.

    Each piece is band-limited to |xi| <= 2^(n+1); it is resampled exactly (up to
    the periodization) on a grid with ``oversample`` points per half period of the
    top frequency, so high levels cost one large FFT in total.
    """
    N = bank if isinstance(bank, int) else bank.N
    _check_band(f, N)
    spec, m = _padded_spectrum(f, periodic, pad)
    period = m * f.spacing
    k = np.fft.fftfreq(m, 1.0 / m).astype(np.int64)  # integer frequencies
    norms = np.zeros(N + 1)
    for n in range(N + 1):
        kmax = min(int(math.floor(2.0 ** (n + 1) * period)), m // 2 - 1)
        size = min(m, 1 << int(math.ceil(math.log2(max(2 * kmax * oversample, 16)))))
        sel = np.abs(k) <= kmax
        small = np.zeros(size, dtype=complex)
        small[k[sel] % size] = spec[sel] * window(n, k[sel] / period)
        vals = np.fft.ifft(small) * (size / m)
        norms[n] = _refined_max(np.abs(vals.real if f.is_real else vals))
    return norms


def _refined_max(a: np.ndarray) -> float:
    """Largest sample of the periodic array ``a``, raised to the vertex of the parabola
    through each local maximum and its two neighbours."""
    ym, yp = np.roll(a, 1), np.roll(a, -1)
    curv = ym - 2.0 * a + yp
    peak = (a >= ym) & (a >= yp) & (curv < 0)
    top = float(a.max(initial=0.0))
    if peak.any():
        d = (yp - ym)[peak]
        top = max(top, float(np.max(a[peak] - d * d / (8.0 * curv[peak]))))
    return top


def zygmund_modulus(F: SampledFunction, h: float) -> float:
    """sup_x |F(x+h) + F(x-h) - 2F(x)| / h over grid points x with x +- h in range."""
    if h < 2 * F.spacing:
        raise InvalidArgument("h must be at least twice the grid spacing")
    x = F.x
    inner = (x - h >= x[0]) & (x + h <= x[-1])
    if not inner.any():
        raise InvalidArgument("h too large for the sampled range")
    xs = x[inner]
    k = h / F.spacing
    if abs(k - round(k)) < 1e-9 * k:
        k = int(round(k))
        v = F.values
        diff = v[2 * k:] + v[:-2 * k] - 2.0 * v[k:-k]
        return float(np.max(np.abs(diff)) / h)

    def at(t):
        v = F.values
        if np.iscomplexobj(v):
            return np.interp(t, x, v.real) + 1j * np.interp(t, x, v.imag)
        return np.interp(t, x, v)

    diff = at(xs + h) + at(xs - h) - 2.0 * F.values[inner]
    return float(np.max(np.abs(diff)) / h)


def modulus_from_lp(sup_norms, h: float, C: float) -> float:
    """sum_n min(4/h, h C^2 4^n) * sup_norms[n], an upper bound for the Zygmund quotient."""
    s = np.asarray(sup_norms, dtype=float)
    if not (h > 0 and C > 0) or not np.all(np.isfinite(s)):
        raise InvalidArgument("need finite sup-norms and h, C > 0")
    n = np.arange(s.size)
    return float(np.sum(np.minimum(4.0 / h, h * C * C * 4.0 ** n) * s))


def _loglog_slope(n, s):
    good = s > 0
    if good.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(n[good]), np.log(s[good]), 1)[0])


def classify_b0(f: SampledFunction, bank: FilterBank | int, periodic: bool = False,
                n_min: int = 4, floor_fraction: float = 0.5, pad: int = 4) -> BoundReport:
    """Trend statistics of sup_n ||W_n * f|| and of the Zygmund quotients of the
    primitive; flags CONSISTENT_B0 when both sequences decay, INCONSISTENT when the
    sup-norms stay above ``floor_fraction`` of their maximum."""
    N = bank if isinstance(bank, int) else bank.N
    norms = lp_sup_norms(f, N, periodic=periodic, pad=pad)
    lo = min(n_min, N // 2)
    n = np.arange(lo, N + 1)
    tail = norms[lo:]
    lin_slope = float(np.polyfit(n, tail, 1)[0]) if n.size > 1 else 0.0
    ll_slope = _loglog_slope(n.astype(float), tail) if lo > 0 else float("nan")
    floor_ratio = float(tail.min() / tail.max()) if tail.max() > 0 else 0.0
    F = f.primitive()
    span = F.spacing * (len(F) - 1)
    hs = [2.0 ** -j for j in range(2, 60) if 2 * F.spacing <= 2.0 ** -j <= span / 4]
    zq = np.array([zygmund_modulus(F, h) for h in hs]) if hs else np.zeros(0)
    z_slope = _loglog_slope(np.array(hs), zq) if len(hs) > 1 else float("nan")
    bounded_below = floor_ratio >= floor_fraction and not lin_slope < -0.01 * tail.max()
    flag = INCONSISTENT if bounded_below else CONSISTENT_B0
    return BoundReport(
        name="classify_b0",
        value=floor_ratio,
        params={"N": N, "n_min": lo, "floor_fraction": floor_fraction, "periodic": periodic},
        provenance=["dyadic sup-norm trend", "Zygmund quotient of the primitive"],
        flags=[flag],
        data={"sup_norms": norms.tolist(), "linear_slope": lin_slope,
              "loglog_slope": ll_slope, "floor_ratio": floor_ratio,
              "zygmund_h": hs, "zygmund_quotients": zq.tolist(),
              "zygmund_loglog_slope": z_slope},
    )


def maximal_function(f: SampledFunction) -> SampledFunction:
    """Discrete Hardy-Littlewood maximal function over dyadic radii (zero extension).

    Radii are 2^j grid cells; with radius 0 included, Mf >= f pointwise.
    """
    v = np.asarray(f.values)
    if np.iscomplexobj(v):
        if np.any(v.imag):
            raise InvalidArgument("maximal_function needs a real input")
        v = v.real
    if np.any(v < 0):
        raise InvalidArgument("maximal_function needs a nonnegative input")
    n = v.size
    radii = np.array([0] + [1 << j for j in range(int(math.log2(max(n, 1))) + 1)], dtype=np.int64)
    return f.with_values(_kernels.maximal_dyadic(np.ascontiguousarray(v, dtype=np.float64), radii))


def derivative(f: SampledFunction, periodic: bool = False, pad: int = 4) -> SampledFunction:
    """Spectral derivative."""
    spec, m = _padded_spectrum(f, periodic, pad)
    xi = np.fft.fftfreq(m, f.spacing)
    d = np.fft.ifft(spec * 2j * np.pi * xi)[: len(f)]
    return f.with_values(d.real if f.is_real else d)


def envelope_check(F: SampledFunction, bank: FilterBank | int, G, levels=None,
                   periodic: bool = False) -> BoundReport:
    """Smallest C with |W_n*F| <= C G(2^n, x) and |(W_n*F)'| <= 2^n C G(2^n, x).

    ``G(r, x)`` returns positive envelope values on the grid.
    """
    N = bank if isinstance(bank, int) else bank.N
    pieces = lp_coefficients(F, N, periodic=periodic)
    levels = range(N + 1) if levels is None else levels
    per_level, per_level_d = {}, {}
    for n in levels:
        g = np.asarray(G(2.0 ** n, F.x), dtype=float)
        if np.any(g <= 0):
            raise InvalidArgument("envelopes must be positive")
        piece = pieces[n]
        dpiece = derivative(piece, periodic=periodic)
        per_level[n] = float(np.max(np.abs(piece.values) / g))
        per_level_d[n] = float(np.max(np.abs(dpiece.values) / (2.0 ** n * g)))
    C = max(max(per_level.values()), max(per_level_d.values()))
    return BoundReport(
        name="envelope_check",
        value=C,
        params={"N": N, "levels": list(levels)},
        provenance=["dyadic piece against envelope", "derivative of dyadic piece against envelope"],
        data={"C_values": per_level, "C_derivative": per_level_d},
    )


def bernstein_ratios(f: SampledFunction, bank: FilterBank | int, levels,
                     periodic: bool = False) -> dict:
    """||(W_n*f)'||_inf / (2^n ||W_n*f||_inf) for each requested level."""
    N = bank if isinstance(bank, int) else bank.N
    pieces = lp_coefficients(f, N, periodic=periodic)
    out = {}
    for n in levels:
        p = pieces[n]
        s = np.max(np.abs(p.values))
        if s > 0:
            out[n] = float(np.max(np.abs(derivative(p, periodic=periodic).values)) / (2.0 ** n * s))
    return out
