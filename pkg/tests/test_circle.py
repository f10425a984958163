"""Periodic rigidity: deficit functional, branches, threshold location."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from onofri_lab import (
    NoSignChangeError,
    ScalarField,
    bifurcation_scan,
    circle_geometry,
    mto_deficit_circle,
    multistart_rigidity,
    random_field,
    solve_el_circle,
    verify_identity,
)
from onofri_lab import solvers

CRITICAL = 2.0 * np.pi ** 2


def test_deficit_vanishes_on_constants(circle256):
    u = ScalarField(circle256, np.full(circle256.n, 1.5))
    assert abs(mto_deficit_circle(u, CRITICAL)) <= 1e-12


@pytest.mark.parametrize("shift", [-3.0, 1.0, 10.0])
def test_deficit_shift_invariance(circle256, shift):
    u = random_field(circle256, seed=61, modes=12)
    base = mto_deficit_circle(u, CRITICAL)
    moved = mto_deficit_circle(u + shift, CRITICAL)
    assert abs(moved - base) <= 1e-10 * (1.0 + abs(base))


def test_deficit_small_mode_at_threshold(circle256):
    u = ScalarField(circle256, 1e-3 * np.cos(2 * np.pi * circle256.nodes))
    value = mto_deficit_circle(u, CRITICAL)
    assert 0.0 <= value <= 1e-9


def test_deficit_negative_past_threshold(circle256):
    u = ScalarField(circle256, 1e-2 * np.cos(2 * np.pi * circle256.nodes))
    assert mto_deficit_circle(u, 1.05 * CRITICAL) < 0.0


def test_deficit_nonnegative_at_threshold(circle256):
    rng = np.random.default_rng(607)
    for _ in range(25):
        amp = rng.uniform(0.1, 1.0)
        u = random_field(circle256, seed=rng.integers(1 << 30), modes=24,
                         amplitude=amp)
        assert mto_deficit_circle(u, CRITICAL) >= -1e-10


def test_perturbed_start_returns_to_constant(circle256):
    init = 0.1 * np.cos(2 * np.pi * circle256.nodes)
    point = solve_el_circle(1.0, init=init, geometry=circle256)
    assert point.is_constant
    assert np.max(np.abs(point.solution.values)) <= 1e-9


@pytest.mark.parametrize("lam", [1.0, 5.0, 10.0, 19.0])
def test_multistart_rigidity_below_threshold(circle256, lam):
    points = multistart_rigidity(lam, inits=4, geometry=circle256)
    for point in points:
        assert point.is_constant
        assert_allclose(point.solution.values, np.log(lam), atol=1e-7)


def test_nonconstant_branch_past_threshold(circle256):
    points = multistart_rigidity(25.0, inits=4, geometry=circle256)
    bent = [p for p in points if not p.is_constant]
    assert bent, "no start left the constant branch at lambda=25"
    best = max(bent, key=lambda p: p.distance_to_constant)
    assert best.distance_to_constant > 0.1
    assert best.newton_residual <= 1e-8
    assert mto_deficit_circle(best.solution, 25.0) < 0.0


def test_scan_locates_threshold(circle256):
    lam_c = bifurcation_scan(10.0, 30.0, geometry=circle256)
    assert abs(lam_c - CRITICAL) <= 0.005 * CRITICAL


def test_scan_rejects_windows_without_crossing(circle256):
    with pytest.raises(NoSignChangeError):
        bifurcation_scan(1.0, 5.0, geometry=circle256)


def test_threshold_stable_under_refinement():
    values = []
    for n in (256, 512):
        geom = circle_geometry(n)
        values.append(solvers.bifurcation_scan(geom, 18.0, 21.0, steps=8,
                                               rel_width=1e-10))
    assert abs(values[0] - values[1]) <= 1e-8 * CRITICAL


def test_energy_balance_at_solutions(circle256):
    constant = solve_el_circle(5.0, geometry=circle256)
    rep = verify_identity("CIRCLE_EL_IDENTITY", circle256, constant, tol=1e-8)
    assert rep.passed
    bent = max(multistart_rigidity(25.0, inits=4, geometry=circle256),
               key=lambda p: p.distance_to_constant)
    rep = verify_identity("CIRCLE_EL_IDENTITY", circle256, bent, tol=1e-8)
    assert rep.passed
    assert rep.rel_err <= 1e-8
