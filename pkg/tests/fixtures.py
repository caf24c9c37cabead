"""Shared fixture data."""
from kakeya_lab.bounds import FModel

# union-to-sum ratios of keich_family(k), k = 4..9, delta = 2^-(k+2)
KEICH_DELTAS = [2.0 ** -(k + 2) for k in range(4, 10)]
KEICH_EPS = [0.4316, 0.3739, 0.3273, 0.2911, 0.2617, 0.2379]


def keich_curve_model() -> FModel:
    return FModel.tabulated(KEICH_DELTAS, KEICH_EPS)
