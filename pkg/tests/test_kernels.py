"""The compiled kernels and the numpy fallback must agree exactly."""
import numpy as np
import pytest

from kakeya_lab import _kernels, _pykernels
from kakeya_lab.besicovitch import keich_family
from kakeya_lab.tubes import RasterGrid

try:
    from kakeya_lab import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def random_quads(rng, n, delta=0.05):
    ang = rng.uniform(0, np.pi, n)
    v = np.stack([np.cos(ang), np.sin(ang)], 1)
    nrm = np.stack([-v[:, 1], v[:, 0]], 1) * delta
    o = rng.uniform(-0.5, 0.5, (n, 2))
    p1 = o + v
    return np.ascontiguousarray(np.stack([o + nrm, p1 + nrm, p1 - nrm, o - nrm], 1))


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


@needs_c
def test_raster_and_merge_agree(rng):
    q = random_quads(rng, 30)
    grid = RasterGrid.covering(q, 0.01)
    args = (q, grid.y0, grid.x0, grid.h, grid.nrows, grid.ncols)
    a = _pykernels.raster_intervals(*args)
    b = _ckernels.raster_intervals(*args)
    ka, kb = np.lexsort((a[1], a[0])), np.lexsort((b[1], b[0]))
    a = [np.asarray(x)[ka] for x in a]
    b = [np.asarray(x)[kb] for x in b]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    # merging expects intervals sorted by (row, lo)
    assert _pykernels.merged_cell_count(*a) == _ckernels.merged_cell_count(*b)
    mask = grid.occupancy(q)
    assert _ckernels.merged_cell_count(*b) == int(mask.sum())


@needs_c
def test_sat_agree(rng):
    q = random_quads(rng, 40, 0.02)
    pa = _pykernels.sat_pairs(q, 1e-9)
    pc = _ckernels.sat_pairs(q, 1e-9)
    assert sorted(map(tuple, np.asarray(pa).tolist())) == sorted(map(tuple, np.asarray(pc).tolist()))
    for i in (0, 7, 39):
        a = _pykernels.sat_one(q, i, 1e-9)
        c = _ckernels.sat_one(q, i, 1e-9)
        assert bool(a[1]) == bool(c[1])


@needs_c
def test_keich_sat_agree():
    q = keich_family(6).quads(translated=True)
    assert len(_pykernels.sat_pairs(q, 1e-9)) == len(_ckernels.sat_pairs(q, 1e-9)) == 0


@needs_c
def test_maximal_agree(rng):
    v = np.abs(rng.standard_normal(1000))
    radii = np.array([0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512], dtype=np.int64)
    np.testing.assert_allclose(_pykernels.maximal_dyadic(v, radii), _ckernels.maximal_dyadic(v, radii),
                               rtol=1e-12, atol=1e-12)


@needs_c
def test_frame_sums_agree(rng):
    fam = keich_family(4)
    table = rng.standard_normal((64, 32)) + 1j * rng.standard_normal((64, 32))
    pts = np.ascontiguousarray(rng.uniform(-1, 3, (500, 2)))
    args = (pts, np.ascontiguousarray(fam.origins()), np.ascontiguousarray(fam.directions()),
            fam.delta, table, -1.0, 0.1, -2.0, 0.125, -1.0, 5.0, -2.0, 2.0)
    sa, ca = _pykernels.frame_sums(*args)
    sc, cc = _ckernels.frame_sums(*args)
    np.testing.assert_allclose(sa, sc, rtol=1e-12, atol=1e-14)
    np.testing.assert_array_equal(ca, cc)
