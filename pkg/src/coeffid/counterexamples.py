"""Constructive non-identifiability witnesses.

volterra_pair builds a fat-Cantor-set counterexample: on the complement of a
finite-level Smith-Volterra-Cantor approximant S it places smooth two-lobe
bumps w with zero integral per gap, so that w and w' vanish on S while the
source f = -w' is nonzero inside every gap. Any two coefficients that agree
off S (here a = 1 and b = 1 + amp on S) then produce the identical solution
u = W = integral of w: the flux b u' equals u' because u' = w = 0 wherever
b differs from 1. The pair carries machine-checked weak-form residuals as a
non-identifiability certificate.

inhomogeneous_pair shows the same failure driven by boundary data instead:
u = -1/2 (x + 1/2)^2 with a = 1 + 1/(x + 1/2) and b = 1 both satisfy
-(a u')' = -(b u')' = 1, an exact polynomial identity of the fluxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grids import GridFunction1D, Interval, derivative, indicator_values
from .forward import _cumtrapz

__all__ = [
    "IntervalSet",
    "CounterexamplePair",
    "svc_set",
    "volterra_pair",
    "inhomogeneous_pair",
    "weak_form_residual",
]


@dataclass(frozen=True, eq=False)
class IntervalSet:
    """Disjoint sorted closed intervals inside [0, 1], with exact rational
    endpoints."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple((Fraction(a), Fraction(b)) for a, b in self.intervals)
        prev = Fraction(-1)
        for a, b in iv:
            if not (0 <= a < b <= 1):
                raise ValueError("intervals must be nondegenerate and inside [0, 1]")
            if a < prev:
                raise ValueError("intervals must be sorted and disjoint")
            prev = b
        object.__setattr__(self, "intervals", iv)

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def gaps(self) -> list:
        """Open intervals of [0, 1] between the members."""
        out = []
        cursor = Fraction(0)
        for a, b in self.intervals:
            if a > cursor:
                out.append((cursor, a))
            cursor = b
        if cursor < 1:
            out.append((cursor, Fraction(1)))
        return out

    def indicator(self, x: np.ndarray, domain: Interval) -> np.ndarray:
        v = np.zeros_like(x)
        for a, b in self.intervals:
            v += indicator_values(x, float(a), float(b), domain=domain)
        return np.clip(v, 0.0, 1.0)


def svc_set(level: int) -> IntervalSet:
    """Level-n approximant of the Smith-Volterra-Cantor set.

    Stage k removes the open middle interval of length 4^{-k} from each of the
    2^{k-1} pieces, leaving measure 1/2 + 2^{-(level+1)}; the limit set is
    nowhere dense with measure 1/2.
    """
    if not 1 <= level <= 20:
        raise ValueError("level must lie in [1, 20]")
    pieces = [(Fraction(0), Fraction(1))]
    for k in range(1, level + 1):
        half = Fraction(1, 2 * 4**k)
        nxt = []
        for a, b in pieces:
            c = (a + b) / 2
            nxt.append((a, c - half))
            nxt.append((c + half, b))
        pieces = nxt
    return IntervalSet(tuple(pieces))


@dataclass(frozen=True, eq=False)
class CounterexamplePair:
    """Two admissible coefficients, one solution, one source: residual_a and
    residual_b certify that both coefficient choices satisfy the equation
    while coeff_gap bounds their L1 distance away from zero."""

    a: GridFunction1D
    b: GridFunction1D
    u: GridFunction1D
    du: GridFunction1D
    f: GridFunction1D
    residual_a: float
    residual_b: float
    coeff_gap: float
    kept_set: IntervalSet | None = None


def weak_form_residual(a: GridFunction1D, du: GridFunction1D, F: GridFunction1D) -> float:
    """max over interior hat functions phi_i of
    |int a du phi_i' - f(phi_i)|, with f applied distributionally through its
    primitive: f(phi_i) = -int F phi_i'. Exact nodal formulas for piecewise
    linears, no quadrature beyond them."""
    flux = a.values * du.values
    Fv = F.values
    r = 0.5 * (flux[:-2] - flux[2:]) - 0.5 * (Fv[2:] - Fv[:-2])
    return float(np.abs(r).max())


def _phi_d1(t: np.ndarray) -> np.ndarray:
    g = t * (1.0 - t)
    return np.exp(-1.0 / g) * (1.0 - 2.0 * t) / (g * g)


def _phi_d2(t: np.ndarray) -> np.ndarray:
    g = t * (1.0 - t)
    gp = 1.0 - 2.0 * t
    return np.exp(-1.0 / g) * (gp * gp / g**4 - 2.0 * gp * gp / g**3 - 2.0 / g**2)


def volterra_pair(level: int, n: int, bump_amp: float) -> CounterexamplePair:
    """Build the fat-Cantor non-identifiability pair at the given level.

    Each removed gap (al, be) of length L carries w = L^2 phi'((x - al)/L): a
    positive then negative lobe with zero integral, vanishing to all orders at
    the gap ends, so W = integral of w returns to zero after every gap and
    W(1) = 0 holds by construction. The L^2 amplitude scaling keeps w' bounded
    uniformly in the level, as for the classical Volterra function.
    """
    S = svc_set(level)
    if n < 8 * 4**level:
        raise ValueError(f"n must be at least {8 * 4**level} to resolve level {level} gaps")
    if not 0.0 < bump_amp <= 1.0:
        raise ValueError("bump_amp must lie in (0, 1] to keep b within [1, 2]")

    iv = Interval(0.0, 1.0)
    x = np.linspace(0.0, 1.0, n + 1)
    w = np.zeros_like(x)
    f_vals = np.zeros_like(x)
    for al, be in S.gaps():
        al_f, be_f = float(al), float(be)
        L = be_f - al_f
        m = (x > al_f) & (x < be_f)
        t = (x[m] - al_f) / L
        w[m] = (L * L) * _phi_d1(t)
        f_vals[m] = -L * _phi_d2(t)
        if not np.any(f_vals[m] != 0.0):
            raise RuntimeError("source vanishes identically inside a gap")

    du = GridFunction1D(iv, w)
    u = GridFunction1D(iv, _cumtrapz(w, du.h))
    f = GridFunction1D(iv, f_vals)
    a = GridFunction1D(iv, np.ones_like(x))
    b = GridFunction1D(iv, 1.0 + bump_amp * S.indicator(x, iv))

    F = du.with_values(-w + w[0])
    w_sup = float(np.abs(w).max())
    res_a = weak_form_residual(a, du, F) / w_sup
    res_b = weak_form_residual(b, du, F) / w_sup
    gap = bump_amp * float(S.measure)

    tol = 1e-8
    if res_a > tol or res_b > tol:
        raise RuntimeError(
            f"weak-form residuals too large: {res_a:.3e}, {res_b:.3e} (tolerance {tol:.1e})"
        )

    return CounterexamplePair(
        a=a, b=b, u=u, du=du, f=f,
        residual_a=res_a, residual_b=res_b, coeff_gap=gap, kept_set=S,
    )


def inhomogeneous_pair(n: int) -> CounterexamplePair:
    """The boundary-data counterexample on (0, 1).

    With u = -1/2 (x + 1/2)^2 the fluxes a u' = -(x + 1/2) - 1 and
    b u' = -(x + 1/2) are both affine with slope -1, so both coefficients
    satisfy -(coef u')' = 1 identically. The strong-form residuals are exact
    polynomial identities up to rounding. coeff_gap is the exact integral
    log 3 of a - b = 1/(x + 1/2).
    """
    if n < 16:
        raise ValueError("n must be at least 16")
    iv = Interval(0.0, 1.0)
    x = np.linspace(0.0, 1.0, n + 1)
    u = GridFunction1D(iv, -0.5 * (x + 0.5) ** 2)
    du = GridFunction1D(iv, -(x + 0.5))
    a = GridFunction1D(iv, 1.0 + 1.0 / (x + 0.5))
    b = GridFunction1D(iv, np.ones_like(x))
    f = GridFunction1D(iv, np.ones_like(x))

    res_a = float(np.abs(derivative(a * du).values + 1.0).max())
    res_b = float(np.abs(derivative(b * du).values + 1.0).max())

    return CounterexamplePair(
        a=a, b=b, u=u, du=du, f=f,
        residual_a=res_a, residual_b=res_b, coeff_gap=math.log(3.0),
    )
