"""Recovery a = (C - F)/u': constant identification, masking, roundtrips."""

import math

import numpy as np
import pytest

from coeffid.forward import primitive, solve
from coeffid.grids import CoefficientBounds, GridFunction1D, Interval, quadrature
from coeffid.inverse import (
    convergence_study,
    default_threshold,
    recover,
    recover_constant,
    recover_from_primitive,
)

UNIT = Interval(0.0, 1.0)
BOUNDS = CoefficientBounds(0.5, 2.0)


def from_fn(fn, n, interval=UNIT):
    return GridFunction1D.from_callable(fn, interval, n)


def unmasked_l1_error(result, truth):
    diff = np.where(result.degenerate_mask, 0.0, result.a.values - truth.values)
    return quadrature(truth.with_values(np.abs(diff)))


@pytest.mark.parametrize("n", [100, 101])
def test_recover_constant_linear_case(n):
    du = from_fn(lambda x: 0.5 - x, n)
    F = from_fn(lambda x: x, n)
    assert recover_constant(du, F) == pytest.approx(0.5, abs=1e-12)


def test_recover_constant_matches_forward_constant_cosine():
    n = 4096
    a = GridFunction1D.const(1.0, UNIT, n)
    f = from_fn(lambda x: np.cos(2 * np.pi * x), n)
    sol = solve(a, f)
    C = recover_constant(sol.du, sol.F)
    assert C == pytest.approx(sol.Ca, abs=1e-6)


def test_recover_constant_roundtrip_variable_coefficient():
    n = 4096
    a = from_fn(lambda x: 1.0 + x, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    sol = solve(a, f)
    C = recover_constant(sol.du, sol.F)
    assert abs(C - sol.Ca) < 1e-6 * (1.0 + abs(sol.Ca))


def test_recover_constant_one_signed_raises():
    n = 128
    du = GridFunction1D.const(1.0, UNIT, n)
    F = from_fn(lambda x: x, n)
    with pytest.raises(ValueError, match="no zero"):
        recover_constant(du, F)


def test_recover_linear_gradient():
    n = 512
    du = from_fn(lambda x: 0.5 - x, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    res = recover(du, f, BOUNDS, threshold=1e-6)
    off = ~res.degenerate_mask
    assert np.abs(res.a.values[off] - 1.0).max() < 1e-9
    assert res.fraction_degenerate <= 2.0 / (n + 1)


def test_recover_roundtrip_smooth():
    n = 4096
    a = from_fn(lambda x: 1.0 + 0.5 * np.sin(3 * np.pi * x), n)
    f = from_fn(lambda x: 1.0 - 2.0 * x, n)
    sol = solve(a, f)
    res = recover(sol.du, f, BOUNDS)
    assert unmasked_l1_error(res, a) < 1e-3
    assert abs(res.C - sol.Ca) < 1e-6 * (1.0 + abs(sol.Ca))


def test_recover_refines_under_grid_refinement():
    errs = []
    for n in (512, 2048, 8192):
        a = from_fn(lambda x: 1.2 + 0.4 * np.cos(2 * np.pi * x), n)
        f = from_fn(lambda x: 1.0 - 2.0 * x, n)
        sol = solve(a, f)
        errs.append(unmasked_l1_error(recover(sol.du, f, BOUNDS), a))
    assert errs[2] < errs[0]
    assert errs[2] < 1e-4


def test_recover_gradient_vanishes_everywhere():
    n = 256
    du = GridFunction1D.const(0.0, UNIT, n)
    f = GridFunction1D.const(0.0, UNIT, n)
    with pytest.raises(ValueError, match="vanishes everywhere"):
        recover(du, f, BOUNDS)


def test_no_clamping_on_interior_smooth_data():
    n = 4096
    a = from_fn(lambda x: 1.2 + 0.5 * np.sin(2 * np.pi * x), n)
    f = from_fn(lambda x: np.where(x < 0.35, 1.0, -0.6), n)
    sol = solve(a, f)
    res = recover(sol.du, f, BOUNDS)
    assert res.n_clamped == 0


def test_threshold_reported_and_scaled():
    n = 1024
    du = from_fn(lambda x: 0.5 - x, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    res = recover(du, f, BOUNDS)
    assert res.threshold == pytest.approx(default_threshold(du))
    assert res.threshold == pytest.approx(math.sqrt(du.h) * 0.5 * 1e-2)


def test_recover_from_primitive_exact_data():
    n = 2048
    a = from_fn(lambda x: 1.0 + 0.3 * x, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    sol = solve(a, f)
    res = recover_from_primitive(sol.du, sol.F, BOUNDS)
    assert unmasked_l1_error(res, a) < 5e-4


def test_nearest_neighbor_infill_deterministic():
    n = 16
    x = np.linspace(0.0, 1.0, n + 1)
    v = x - 0.5
    v[6:9] = 0.0
    du = GridFunction1D(UNIT, v)
    F = from_fn(lambda x: x, n)
    res = recover_from_primitive(du, F, CoefficientBounds(0.01, 100.0), threshold=1e-12)
    filled = res.a.values[res.degenerate_mask]
    neighbors = res.a.values[~res.degenerate_mask]
    assert np.all(np.isin(filled, neighbors))


def test_convergence_study_decaying_perturbations():
    n = 1024
    a = GridFunction1D.const(1.0, UNIT, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    perts = [
        a.with_values(a.values + (1.0 / k) * np.sin(2 * np.pi * a.x))
        for k in range(2, 12)
    ]
    rep = convergence_study(a, perts, f, 1.0)
    assert rep.passed
    assert rep.metrics["spearman"] > 0.9


def test_convergence_study_identical_perturbations():
    n = 256
    a = GridFunction1D.const(1.0, UNIT, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    rep = convergence_study(a, [a, a, a], f, 2.0)
    assert rep.passed
    assert max(rep.curves["du_gap_l2"]) == 0.0
    assert max(rep.curves["coeff_gap_lp"]) == 0.0


def test_roundtrip_on_shifted_interval():
    # nothing in the flux identity is tied to (0, 1)
    iv = Interval(2.0, 5.0)
    n = 4096
    a = GridFunction1D.from_callable(lambda x: 1.0 + 0.4 * np.sin(2 * np.pi * x / 3.0), iv, n)
    f = GridFunction1D.from_callable(lambda x: 3.5 - x, iv, n)
    sol = solve(a, f, bounds=BOUNDS)
    assert abs(sol.u.values[-1]) < 1e-8 * (1.0 + np.abs(sol.u.values).max())
    res = recover(sol.du, f, BOUNDS)
    diff = np.where(res.degenerate_mask, 0.0, res.a.values - a.values)
    assert quadrature(a.with_values(np.abs(diff))) < 1e-3 * iv.length


def test_convergence_study_accepts_lpnorm_wrapper():
    from coeffid.grids import LpNorm

    n = 512
    a = GridFunction1D.const(1.0, UNIT, n)
    f = GridFunction1D.const(1.0, UNIT, n)
    perts = [a.with_values(a.values + 0.1 / k) for k in (1, 2, 3, 4)]
    rep = convergence_study(a, perts, f, LpNorm(2.0))
    assert rep.passed


def test_convergence_study_sup_norm_failure():
    # shrinking-bump perturbations: gradient distance decays but the sup-norm
    # coefficient distance stays pinned at the bump height, so no trend
    from coeffid.grids import indicator_values

    n = 2**12
    iv = Interval(-1.0, 1.0)
    x = np.linspace(-1.0, 1.0, n + 1)
    a = GridFunction1D(iv, np.ones_like(x))
    f = GridFunction1D(iv, np.sign(x) * (np.abs(x) - 0.5))
    perts = [
        a.with_values(1.0 + indicator_values(x, -2.0**-j, 2.0**-j, domain=iv))
        for j in range(2, 8)
    ]
    rep = convergence_study(a, perts, f, math.inf, bounds=CoefficientBounds(0.5, 2.5))
    assert not rep.passed
    assert max(rep.curves["coeff_gap_lp"]) == pytest.approx(1.0)
    gaps = rep.curves["du_gap_l2"]
    assert gaps[-1] < gaps[0]
