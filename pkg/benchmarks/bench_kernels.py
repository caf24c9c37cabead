"""Time the compiled kernels against the numpy fallback on realistic inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Every kernel is run through both backends on the same arguments; outputs are
compared before any timing is reported.
"""
import argparse
import time

import numpy as np

from kakeya_lab import _pykernels
from kakeya_lab.besicovitch import keich_family
from kakeya_lab.tubes import RasterGrid

try:
    from kakeya_lab import _ckernels
except ImportError:
    _ckernels = None


def cases():
    fam = keich_family(8)
    quads = np.ascontiguousarray(fam.quads(), dtype=np.float64)
    h = fam.delta / 8
    g = RasterGrid.covering(quads, h)
    rows, lo, hi = _pykernels.raster_intervals(quads, g.y0, g.x0, h, g.nrows, g.ncols)
    order = np.lexsort((lo, rows))
    merged = (rows[order], lo[order], hi[order])
    tr = np.ascontiguousarray(fam.quads(True), dtype=np.float64)

    rng = np.random.default_rng(0)
    values = np.ascontiguousarray(rng.random(1 << 16))
    radii = np.ascontiguousarray(2 ** np.arange(16), dtype=np.int64)

    small = keich_family(5)
    table = np.ascontiguousarray(rng.standard_normal((256, 64)) + 0j)
    pts = np.ascontiguousarray(rng.uniform(-1, 3, (20000, 2)))
    frame = (pts, np.ascontiguousarray(small.origins()), np.ascontiguousarray(small.directions()),
             float(small.delta), table, -1.0, 4 / 256, -2.0, 4 / 64, 0.0, 1.0, -1.0, 1.0)
    return {
        "raster_intervals (k=8, h=delta/8)": ("raster_intervals", (quads, g.y0, g.x0, h, g.nrows, g.ncols)),
        "merged_cell_count": ("merged_cell_count", merged),
        "sat_pairs (translates, k=8)": ("sat_pairs", (tr, 0.0)),
        "maximal_dyadic (2^16 samples)": ("maximal_dyadic", (values, radii)),
        "frame_sums (32 tubes, 2e4 points)": ("frame_sums", frame),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if np.isscalar(a) or np.ndim(a) == 0:
        return np.isclose(a, b, rtol=1e-12)
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def best_of(fun, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fun(*args)
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")
    print(f"{'kernel':38s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for label, (name, kargs) in cases().items():
        tp, op = best_of(getattr(_pykernels, name), kargs, args.repeat)
        tc, oc = best_of(getattr(_ckernels, name), kargs, args.repeat)
        if name == "raster_intervals":
            # row order may differ between backends
            key = lambda o: np.lexsort((o[1], o[0]))
            op = tuple(np.asarray(x)[key(op)] for x in op)
            oc = tuple(np.asarray(x)[key(oc)] for x in oc)
        if name == "sat_pairs":
            op = np.asarray(sorted(map(tuple, np.asarray(op).tolist())))
            oc = np.asarray(sorted(map(tuple, np.asarray(oc).tolist())))
        status = "" if _same(op, oc) else "  MISMATCH"
        print(f"{label:38s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}x{status}")


if __name__ == "__main__":
    main()
