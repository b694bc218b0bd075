"""Hoelder-stability experiments for the 1D coefficient problem.

Three groups of tools live here:

* level-band measures |K_rho(M)| = |{x : |F(x) - M| <= rho}| computed exactly
  on the piecewise-linear interpolant of F, and log-log fitting of the
  two-sided scaling C1 rho^alpha <= inf_M |K_rho(M)| <= sup_M |K_rho(M)|
  <= C2 rho^beta over M strictly between min F and max F;

* the stability exponent that the scaling pair (alpha, beta) implies for
  |a - b|_{Lp} in terms of |u'_a - u'_b|_{L2}, with the bound verification
  harness reporting the constant a given pair of coefficients would require;

* the dyadic multiscale family: a mollified bump repeated at scales 2^{-k}
  with amplitudes 2^{-alpha_d k}, perturbed by coefficients a_j = 1 + 2^{beta_d j}
  on shrinking intervals S_j = (-2^{-j}, 2^{-j}). The measured decay rates
  |u - u_j|_V ~ 2^{(1/2 + beta_d - alpha_d) j} and |a - a_j|_{Lp} ~ 2^{(beta_d - 1/p) j}
  combine into the rate gamma = (1/p - beta_d)/(alpha_d - 1/2 - beta_d), which
  can be made arbitrarily small by taking alpha_d large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forward import ForwardSolution, solve, solve_from_primitive
from .grids import (
    CoefficientBounds,
    GridFunction1D,
    Interval,
    indicator_values,
    lp_norm,
    require_same_grid,
)
from .report import ExperimentReport

__all__ = [
    "ExponentFit",
    "DyadicFamily",
    "DyadicBuild",
    "HolderReport",
    "k_rho_measure",
    "fit_exponents",
    "holder_exponent",
    "verify_holder",
    "dyadic_profile",
    "dyadic_coefficient",
    "dyadic_build",
    "dyadic_rate",
]

BETA_DEGENERATE_CUTOFF = 0.05


# ---------------------------------------------------------------------------
# level-band measures and exponent fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExponentFit:
    """Fitted two-sided scaling of the level-band measures.

    alpha bounds the inf branch from below (C1 rho^alpha <= inf), beta bounds
    the sup branch from above (sup <= C2 rho^beta); C1 and C2 are chosen so
    both inequalities hold with equality at the worst grid point. residual is
    the max log-space misfit of the least-squares lines. beta_degenerate flags
    a sup branch that does not decay (flat stretches of F force beta = 0).
    """

    alpha: float
    beta: float
    C1: float
    C2: float
    rho_grid: tuple
    residual: float
    beta_degenerate: bool
    inf_curve: tuple
    sup_curve: tuple


def k_rho_measure(F: GridFunction1D, M: float, rho: float) -> float:
    """Lebesgue measure of {x : |F(x) - M| <= rho} for the piecewise-linear
    interpolant of F, exact per cell."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    v = F.values
    lo = np.minimum(v[:-1], v[1:])
    hi = np.maximum(v[:-1], v[1:])
    band_lo, band_hi = M - rho, M + rho
    overlap = np.minimum(hi, band_hi) - np.maximum(lo, band_lo)
    width = hi - lo
    sloped = width > 0.0
    frac = np.where(
        sloped,
        np.clip(overlap, 0.0, None) / np.where(sloped, width, 1.0),
        ((lo >= band_lo) & (lo <= band_hi)).astype(float),
    )
    return float(F.h * frac.sum())


def fit_exponents(F: GridFunction1D, rho_grid, M_grid_size: int = 32) -> ExponentFit:
    """Fit alpha to the inf branch and beta to the sup branch of the band
    measures by least squares in log-log coordinates.

    For each rho the M grid is uniform over [Fmin + rho, Fmax - rho], which is
    the largest range on which the band never escapes (min F, max F) entirely.
    """
    rho = np.asarray(list(rho_grid), dtype=float)
    if rho.size < 2:
        raise ValueError("need at least two rho values to fit")
    if not np.all(np.diff(rho) < 0):
        raise ValueError("rho_grid must be strictly decreasing")
    if M_grid_size < 8:
        raise ValueError("M_grid_size must be at least 8")

    fmin = float(F.values.min())
    fmax = float(F.values.max())
    span = fmax - fmin
    if span < 1e-12:
        raise ValueError("F is constant: f vanishes identically")
    if rho[0] >= span / 2 or rho[-1] <= 0:
        raise ValueError(f"rho values must lie in (0, {span / 2})")

    inf_c = np.empty(rho.size)
    sup_c = np.empty(rho.size)
    for i, r in enumerate(rho):
        Ms = np.linspace(fmin + r, fmax - r, M_grid_size)
        meas = np.array([k_rho_measure(F, float(M), float(r)) for M in Ms])
        inf_c[i] = meas.min()
        sup_c[i] = meas.max()

    log_rho = np.log(rho)
    alpha, a_icept = np.polyfit(log_rho, np.log(inf_c), 1)
    beta_raw, b_icept = np.polyfit(log_rho, np.log(sup_c), 1)
    residual = max(
        float(np.abs(np.log(inf_c) - (alpha * log_rho + a_icept)).max()),
        float(np.abs(np.log(sup_c) - (beta_raw * log_rho + b_icept)).max()),
    )
    # a sup branch pinned above a flat stretch of F stops decaying as rho -> 0;
    # the small-rho tail slope detects that even when the full-grid fit does not
    tail = min(4, rho.size)
    beta_tail = float(np.polyfit(log_rho[-tail:], np.log(sup_c[-tail:]), 1)[0])
    beta_degenerate = min(float(beta_raw), beta_tail) < BETA_DEGENERATE_CUTOFF
    beta = max(float(beta_raw), 0.0)
    alpha = float(alpha)

    C1 = float((inf_c / rho**alpha).min())
    C2 = float((sup_c / rho**beta).max())

    return ExponentFit(
        alpha=alpha,
        beta=beta,
        C1=C1,
        C2=C2,
        rho_grid=tuple(float(r) for r in rho),
        residual=residual,
        beta_degenerate=bool(beta_degenerate),
        inf_curve=tuple(float(v) for v in inf_c),
        sup_curve=tuple(float(v) for v in sup_c),
    )


def holder_exponent(p, alpha, beta):
    """Stability exponent implied by the band-measure scaling (alpha, beta).

    For 1 <= p <= 2 it is max(2 beta / ((2+alpha)(2+beta)),
    p beta / ((p+alpha)(p+beta))); for p > 2 it is
    4 beta / ((2+alpha)(2+beta) p). Plain arithmetic throughout, so exact
    rational inputs give exact rational output.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if p <= 2:
        return max(
            2 * beta / ((2 + alpha) * (2 + beta)),
            p * beta / ((p + alpha) * (p + beta)),
        )
    return 4 * beta / ((2 + alpha) * (2 + beta) * p)


@dataclass(frozen=True, eq=False)
class HolderReport:
    """Two sides of the stability bound for one pair of coefficients.

    constant_needed = lhs / rhs_norm**exponent is the constant this pair
    demands; eta = |C_a - C_b| is the flux-constant gap, with c0_implied the
    constant it demands in the intermediate bound eta <= c0 rhs**(p/(p+alpha)).
    """

    p: float
    lhs: float
    rhs_norm: float
    exponent: float
    constant_needed: float
    eta: float
    c0_implied: float


def verify_holder(
    a: GridFunction1D,
    b: GridFunction1D,
    f: GridFunction1D,
    p: float,
    fit: ExponentFit,
    bounds: CoefficientBounds | None = None,
    zero_tol: float = 1e-12,
) -> HolderReport:
    """Measure both sides of |a - b|_{Lp} <= C |u'_a - u'_b|_{L2}^exponent.

    Raises when the right side vanishes while the left does not, which on
    admissible inputs with f nonzero a.e. would contradict identifiability.
    """
    require_same_grid(a, b)
    sol_a = solve(a, f, bounds)
    sol_b = solve(b, f, bounds)
    lhs = lp_norm(a - b, p)
    rhs = lp_norm(sol_a.du - sol_b.du, 2.0)
    eta = abs(sol_a.Ca - sol_b.Ca)
    exponent = float(holder_exponent(p, fit.alpha, fit.beta))

    scale = 1.0 + float(np.abs(a.values).max()) + float(np.abs(b.values).max())
    if rhs <= zero_tol * scale:
        if lhs > zero_tol * scale:
            raise RuntimeError("identifiability violation detected")
        return HolderReport(p=float(p), lhs=lhs, rhs_norm=rhs, exponent=exponent,
                            constant_needed=0.0, eta=eta, c0_implied=0.0)

    return HolderReport(
        p=float(p),
        lhs=lhs,
        rhs_norm=rhs,
        exponent=exponent,
        constant_needed=lhs / rhs**exponent,
        eta=eta,
        c0_implied=eta / rhs ** (p / (p + fit.alpha)),
    )


# ---------------------------------------------------------------------------
# dyadic multiscale family
# ---------------------------------------------------------------------------


def _tail_terms(alpha_d: float, jmax: int) -> int:
    """Default truncation depth: deep enough that the dropped tail is below
    1e-8 in the energy norm AND below 0.1% of the content remaining inside
    the smallest perturbed interval S_jmax (otherwise measured gaps at large
    j would reflect the truncation, not the scaling)."""
    absolute = math.ceil(8.0 * math.log2(10.0) / (alpha_d - 0.5))
    relative = jmax + math.ceil(3.0 * math.log2(10.0) / (alpha_d - 0.5))
    return max(absolute, relative) + 1


@dataclass(frozen=True)
class DyadicFamily:
    """Parameters of the multiscale example on (-1, 1).

    alpha_d > 1/2 is the amplitude decay of the scales, beta_d <= 0 keeps the
    perturbed coefficients inside [1, 2], jmax caps the perturbation index and
    K_trunc the number of scales kept (default: enough that the dropped tail
    is below 1e-8 in the energy norm).
    """

    alpha_d: float
    beta_d: float
    jmax: int = 12
    K_trunc: int | None = None

    def __post_init__(self):
        if not self.alpha_d > 0.5:
            raise ValueError("alpha_d must exceed 1/2")
        if self.jmax < 1:
            raise ValueError("jmax must be positive")
        k = self.K_trunc if self.K_trunc is not None else _tail_terms(self.alpha_d, self.jmax)
        if 2.0 ** (-(self.alpha_d - 0.5) * k) >= 1e-8:
            raise ValueError("K_trunc too small: truncated tail above 1e-8")
        object.__setattr__(self, "K_trunc", int(k))


@dataclass(frozen=True, eq=False)
class DyadicBuild:
    """One perturbation level: exact profile (u, du), coefficient a_j, and the
    forward solution u_j for a_j."""

    u: GridFunction1D
    du: GridFunction1D
    a_j: GridFunction1D
    solution: ForwardSolution


def _bump(y: np.ndarray) -> np.ndarray:
    """Smooth bump supported on (1/2, 1): exp(-1/((y - 1/2)(1 - y)))."""
    out = np.zeros_like(y)
    m = (y > 0.5) & (y < 1.0)
    g = (y[m] - 0.5) * (1.0 - y[m])
    out[m] = np.exp(-1.0 / g)
    return out


def _bump_derivative(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    m = (y > 0.5) & (y < 1.0)
    ym = y[m]
    g = (ym - 0.5) * (1.0 - ym)
    gp = 1.5 - 2.0 * ym
    out[m] = np.exp(-1.0 / g) * gp / (g * g)
    return out


def dyadic_profile(fam: DyadicFamily, n: int) -> tuple:
    """The even multiscale profile u and its derivative du on (-1, 1).

    u(x) = sum_k 2^{-alpha_d k} bump(2^k |x|); the scale supports
    (2^{-k-1}, 2^{-k}) are disjoint. du is assembled from the analytic series
    derivative (odd extension).
    """
    if n % 2:
        raise ValueError("n must be even so that x = 0 is a node")
    iv = Interval(-1.0, 1.0)
    x = np.linspace(-1.0, 1.0, n + 1)
    ax = np.abs(x)
    u = np.zeros_like(x)
    du_abs = np.zeros_like(x)
    for k in range(fam.K_trunc + 1):
        y = (2.0**k) * ax
        u += 2.0 ** (-fam.alpha_d * k) * _bump(y)
        du_abs += 2.0 ** ((1.0 - fam.alpha_d) * k) * _bump_derivative(y)
    du = np.sign(x) * du_abs
    return GridFunction1D(iv, u), GridFunction1D(iv, du)


def dyadic_coefficient(fam: DyadicFamily, j: int, n: int) -> GridFunction1D:
    """a_j = 1 + 2^{beta_d j} on S_j = (-2^{-j}, 2^{-j}), 1 elsewhere."""
    if j < 0 or j > fam.jmax:
        raise ValueError(f"j must lie in [0, {fam.jmax}]")
    iv = Interval(-1.0, 1.0)
    x = np.linspace(-1.0, 1.0, n + 1)
    half_width = 2.0 ** (-j)
    amp = 2.0 ** (fam.beta_d * j)
    ind = indicator_values(x, -half_width, half_width, domain=iv)
    return GridFunction1D(iv, 1.0 + amp * ind)


def dyadic_build(fam: DyadicFamily, j: int, n: int) -> DyadicBuild:
    """Assemble (u, du, a_j) and solve the perturbed problem.

    The source of the base problem is f = -u''; the forward solver consumes it
    through its primitive F = -du + du(-1), avoiding any numerical
    differentiation.
    """
    if fam.beta_d > 0:
        raise ValueError("beta_d must be <= 0 so that a_j stays within [1, 2]")
    u, du = dyadic_profile(fam, n)
    a_j = dyadic_coefficient(fam, j, n)
    F = du.with_values(-du.values + du.values[0])
    sol = solve_from_primitive(a_j, F, bounds=CoefficientBounds(1.0, 2.0))
    return DyadicBuild(u=u, du=du, a_j=a_j, solution=sol)


def dyadic_rate(fam: DyadicFamily, p: float, j_range, n: int) -> ExperimentReport:
    """Least-squares slope of log |a - a_j|_{Lp} against log |u - u_j|_V over
    j_range, compared with gamma = (1/p - beta_d)/(alpha_d - 1/2 - beta_d)."""
    if fam.beta_d > 0:
        raise ValueError("beta_d must be <= 0")
    if not fam.alpha_d > 0.5 + fam.beta_d:
        raise ValueError("need alpha_d > 1/2 + beta_d")
    u, du = dyadic_profile(fam, n)
    F = du.with_values(-du.values + du.values[0])
    bounds = CoefficientBounds(1.0, 2.0)

    js, xs, ys = [], [], []
    for j in j_range:
        a_j = dyadic_coefficient(fam, int(j), n)
        sol = solve_from_primitive(a_j, F, bounds=bounds)
        x_v = lp_norm(sol.du - du, 2.0)
        y_v = lp_norm(a_j - 1.0, p)
        if x_v > 0.0 and y_v > 0.0:
            js.append(int(j))
            xs.append(x_v)
            ys.append(y_v)
    if len(js) < 3:
        raise ValueError("fewer than 3 usable j values")

    slope = float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
    gamma = (1.0 / p - fam.beta_d) / (fam.alpha_d - 0.5 - fam.beta_d)
    rel_dev = abs(slope - gamma) / abs(gamma)

    return ExperimentReport(
        name="dyadic_rate",
        inputs={
            "alpha_d": fam.alpha_d,
            "beta_d": fam.beta_d,
            "p": float(p),
            "n": n,
            "j_range": js,
        },
        metrics={"slope": slope, "gamma": gamma, "rel_deviation": rel_dev},
        curves={"j": js, "u_gap_V": xs, "coeff_gap_Lp": ys},
        passed=bool(rel_dev <= 0.15),
    )
