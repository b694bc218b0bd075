"""Uniform-grid scalar functions on an interval, quadrature, and Lp norms.

Nodal (vertex) sampling on a uniform partition is the single carrier used
everywhere: coefficients a, sources f, primitives F, solutions u and their
derivatives u' are all GridFunction1D instances. Quadrature is composite
trapezoid by default, which is exact on the piecewise-linear interpolants
that serve as ground truth throughout; composite Simpson is available for
smooth oracles.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "Interval",
    "GridFunction1D",
    "CoefficientBounds",
    "LpNorm",
    "quadrature",
    "lp_norm",
    "derivative",
    "admissible",
    "indicator_values",
    "fmt_float",
]

def fmt_float(x: float) -> str:
    """Render a float at 17 significant digits (lossless decimal round-trip)."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class Interval:
    """A nonempty bounded interval (lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


UNIT = Interval(0.0, 1.0)


@dataclass(frozen=True)
class CoefficientBounds:
    """Admissibility box: coefficients must satisfy 0 < lam <= a <= Lam."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0.0 < self.lam < self.Lam < math.inf):
            raise ValueError(f"need 0 < lam < Lam, got ({self.lam}, {self.Lam})")


@dataclass(frozen=True)
class LpNorm:
    """Norm exponent p in [1, inf]; math.inf selects the max norm."""

    p: float

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")


@dataclass(frozen=True, eq=False)
class GridFunction1D:
    """Scalar function sampled at the n+1 nodes of a uniform partition.

    values[i] is the sample at x_i = lo + i*h, h = (hi - lo)/n. The array is
    copied on construction and frozen, so instances are immutable and safe to
    share across threads.
    """

    interval: Interval
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must be a 1-d array with at least 2 entries")
        if not np.all(np.isfinite(vals)):
            raise ValueError("nodal values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_callable(cls, fn, interval: Interval, n: int) -> "GridFunction1D":
        x = np.linspace(interval.lo, interval.hi, n + 1)
        return cls(interval, np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape))

    @classmethod
    def const(cls, c: float, interval: Interval = UNIT, n: int = 64) -> "GridFunction1D":
        return cls(interval, np.full(n + 1, float(c)))

    def with_values(self, values) -> "GridFunction1D":
        return GridFunction1D(self.interval, values)

    # -- grid geometry ------------------------------------------------------

    @property
    def n(self) -> int:
        """Number of cells."""
        return self.values.size - 1

    @property
    def h(self) -> float:
        return (self.interval.hi - self.interval.lo) / self.n

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.interval.lo, self.interval.hi, self.n + 1)

    def same_grid(self, other: "GridFunction1D") -> bool:
        return self.interval == other.interval and self.n == other.n

    # -- pointwise algebra --------------------------------------------------

    def _binary(self, other, op):
        if isinstance(other, GridFunction1D):
            require_same_grid(self, other)
            return self.with_values(op(self.values, other.values))
        return self.with_values(op(self.values, float(other)))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __radd__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    def __rmul__(self, other):
        return self._binary(other, np.multiply)

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "interval": [self.interval.lo, self.interval.hi],
            "n": self.n,
            "values": list(self.values),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GridFunction1D":
        lo, hi = d["interval"]
        vals = np.asarray(d["values"], dtype=float)
        if len(vals) != d["n"] + 1:
            raise ValueError("values length does not match n + 1")
        return cls(Interval(float(lo), float(hi)), vals)

    def to_json(self) -> str:
        d = self.to_json_dict()
        parts = ", ".join(fmt_float(v) for v in d["values"])
        return (
            f'{{"interval": [{fmt_float(d["interval"][0])}, {fmt_float(d["interval"][1])}], '
            f'"n": {d["n"]}, "values": [{parts}]}}'
        )

    @classmethod
    def from_json(cls, text: str) -> "GridFunction1D":
        return cls.from_json_dict(json.loads(text))

    def to_csv(self, path) -> None:
        xs = self.x
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for xi, vi in zip(xs, self.values):
                w.writerow([fmt_float(xi), fmt_float(vi)])

    @classmethod
    def from_csv(cls, path) -> "GridFunction1D":
        xs, vs = [], []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if [c.strip() for c in header[:2]] != ["x", "value"]:
                raise ValueError(f"expected 'x,value' header in {path}")
            for row in r:
                if not row:
                    continue
                xs.append(float(row[0]))
                vs.append(float(row[1]))
        if len(xs) < 2:
            raise ValueError(f"not enough rows in {path}")
        return cls(Interval(xs[0], xs[-1]), np.asarray(vs))


def require_same_grid(a: GridFunction1D, b: GridFunction1D) -> None:
    if not a.same_grid(b):
        raise ValueError(
            f"grid mismatch: [{a.interval.lo},{a.interval.hi}] n={a.n} vs "
            f"[{b.interval.lo},{b.interval.hi}] n={b.n}"
        )


def quadrature(g: GridFunction1D, rule: str = "trapezoid") -> float:
    """Integral of g over its interval.

    The default composite trapezoid rule is exact for the piecewise-linear
    nodal interpolant. rule="simpson" switches to composite Simpson for use
    against smooth oracles.
    """
    v = g.values
    if rule == "trapezoid":
        return float(g.h * (0.5 * (v[0] + v[-1]) + v[1:-1].sum()))
    if rule == "simpson":
        return float(simpson(v, dx=g.h))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def lp_norm(g: GridFunction1D, p) -> float:
    """Lp norm of g; p may be a float in [1, inf] or an LpNorm."""
    if isinstance(p, LpNorm):
        p = p.p
    p = float(p)
    if p < 1.0:
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    if math.isinf(p):
        return float(np.abs(g.values).max())
    if p == 1.0:
        return quadrature(abs(g))
    return quadrature(g.with_values(np.abs(g.values) ** p)) ** (1.0 / p)


def derivative(g: GridFunction1D) -> GridFunction1D:
    """Nodal derivative: central differences inside, one-sided second order at
    the endpoints. Stencils are evaluated in difference form so constants map
    to exactly zero."""
    if g.n < 2:
        raise ValueError("grid too coarse")
    v = g.values
    two_h = 2.0 * g.h
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / two_h
    d[0] = (4.0 * (v[1] - v[0]) - (v[2] - v[0])) / two_h
    d[-1] = (4.0 * (v[-1] - v[-2]) - (v[-1] - v[-3])) / two_h
    return g.with_values(d)


def admissible(a: GridFunction1D, bounds: CoefficientBounds) -> bool:
    """True iff every nodal value lies in [lam, Lam]."""
    v = a.values
    return bool(np.all((v >= bounds.lam) & (v <= bounds.Lam)))


def indicator_values(x: np.ndarray, lo: float, hi: float, domain: Interval | None = None) -> np.ndarray:
    """Nodal sampling of the indicator of the interval (lo, hi).

    Nodes strictly inside get 1, nodes exactly on the boundary get 1/2, so the
    trapezoid rule reproduces the interval's measure exactly whenever lo and hi
    land on grid nodes. Boundary points that coincide with the domain's own
    endpoints are treated as interior (the indicator is an almost-everywhere
    object; the half-value convention only matters at genuine internal jumps).
    """
    v = np.where((x > lo) & (x < hi), 1.0, 0.0)
    span = x[-1] - x[0]
    tol = span * 1e-13
    for edge in (lo, hi):
        if domain is not None and (
            abs(edge - domain.lo) <= tol or abs(edge - domain.hi) <= tol
        ):
            v[np.abs(x - edge) <= tol] = 1.0
        else:
            v[np.abs(x - edge) <= tol] = 0.5
    return v


def load_grid_function(path) -> GridFunction1D:
    """Load a grid function from .csv or .json by extension."""
    p = Path(path)
    if p.suffix == ".json":
        return GridFunction1D.from_json(p.read_text())
    return GridFunction1D.from_csv(p)
