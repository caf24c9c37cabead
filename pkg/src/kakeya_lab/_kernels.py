"""Select the compiled kernels when available, else the numpy fallback.

Set ``KAKEYA_LAB_PURE=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("KAKEYA_LAB_PURE") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

raster_intervals = _impl.raster_intervals
merged_cell_count = _impl.merged_cell_count
sat_pairs = _impl.sat_pairs
sat_one = _impl.sat_one
maximal_dyadic = _impl.maximal_dyadic
frame_sums = _impl.frame_sums


def worker_count() -> int:
    """Worker cap from ``KAKEYA_LAB_THREADS`` (default 1); never affects results."""
    try:
        return max(1, int(os.environ.get("KAKEYA_LAB_THREADS", "1")))
    except ValueError:
        return 1
