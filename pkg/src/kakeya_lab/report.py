"""The BoundReport record returned by every estimating operation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgument

# Flags used across modules.
INFINITE = "INFINITE"
EXTRAPOLATED = "EXTRAPOLATED"
DEGENERATE = "DEGENERATE"
CONSISTENT_B0 = "CONSISTENT_B0"
INCONSISTENT = "INCONSISTENT"
CONVERGES = "CONVERGES"
DIVERGES = "DIVERGES"
FIT_SKIPPED = "FIT_SKIPPED"
SAMPLED = "SAMPLED"


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _from_jsonable_float(v):
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return float(v)
    return v


@dataclass
class BoundReport:
    """A named numeric bound with its parameters and provenance chain.

    ``value`` is finite unless ``INFINITE`` is among ``flags``.  ``data`` holds
    auxiliary named quantities (intermediate terms, per-level sequences, ...).
    """

    name: str
    value: float
    params: dict = field(default_factory=dict)
    provenance: list = field(default_factory=list)
    error_estimate: float = 0.0
    flags: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.provenance:
            raise InvalidArgument("BoundReport requires a non-empty provenance")
        v = float(self.value) if not isinstance(self.value, complex) else self.value
        if not isinstance(v, complex) and not math.isfinite(v) and INFINITE not in self.flags:
            raise InvalidArgument(f"{self.name}: non-finite value without INFINITE flag")

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "name": self.name,
                "value": self.value,
                "params": self.params,
                "provenance": list(self.provenance),
                "error_estimate": self.error_estimate,
                "flags": list(self.flags),
                "data": self.data,
            }
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(
            name=d["name"],
            value=_from_jsonable_float(d["value"]),
            params=d.get("params", {}),
            provenance=list(d["provenance"]),
            error_estimate=_from_jsonable_float(d.get("error_estimate", 0.0)),
            flags=list(d.get("flags", [])),
            data=d.get("data", {}),
        )
