"""Machine-readable experiment reports with byte-reproducible serialization.

Every verification routine returns an ExperimentReport. Serialization is
canonical: keys keep insertion order, floats are rendered at 17 significant
digits, and no timestamps or environment data are embedded, so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grids import fmt_float

__all__ = ["ExperimentReport", "canonical_json"]


def _render(obj, out: list) -> None:
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            out.append(fmt_float(x))
        else:
            out.append(f'"{x!r}"')
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _render(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        for i, v in enumerate(seq):
            if i:
                out.append(", ")
            _render(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def canonical_json(obj) -> str:
    out: list = []
    _render(obj, out)
    return "".join(out)


@dataclass
class ExperimentReport:
    """Record of one verification run: inputs, scalar metrics, tabular curves,
    and an overall pass/fail verdict."""

    name: str
    inputs: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    passed: bool = True
    notes: str = ""

    def to_json(self) -> str:
        return canonical_json(
            {
                "name": self.name,
                "inputs": self.inputs,
                "metrics": self.metrics,
                "curves": self.curves,
                "passed": self.passed,
                "notes": self.notes,
            }
        )

    def curves_csv(self) -> str:
        if not self.curves:
            return ""
        keys = list(self.curves.keys())
        cols = [np.asarray(self.curves[k]).ravel() for k in keys]
        length = len(cols[0])
        if any(len(c) != length for c in cols):
            raise ValueError("curve columns must have equal length")
        lines = [",".join(keys)]
        for i in range(length):
            lines.append(",".join(fmt_float(c[i]) for c in cols))
        return "\n".join(lines) + "\n"
