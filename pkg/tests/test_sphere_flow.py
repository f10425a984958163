"""Sphere rigidity quotient, energy functional, and the mass-conserving flow."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from onofri_lab import (
    ConstantFieldError,
    ScalarField,
    build_geometry,
    dissipation_G,
    flow_evolve,
    functional_F,
    lambda_star_quotient,
    minimize_lambda_star,
    multistart_el,
    random_field,
    solve_el_sphere,
    solvers,
)


def test_quotient_rejects_constants(sphere256):
    with pytest.raises(ConstantFieldError):
        lambda_star_quotient(sphere256, np.full(sphere256.n, 0.7))


def test_quotient_near_one_on_first_harmonic(sphere256):
    u = ScalarField(sphere256, 1e-3 * np.cos(sphere256.nodes))
    report = lambda_star_quotient(sphere256, u)
    assert abs(report.value - 1.0) <= 1e-5
    assert_allclose(report.ricci_term, report.denominator, rtol=1e-12)
    assert report.value == pytest.approx(
        (report.tensor_term + report.ricci_term) / report.denominator)


def test_quotient_scales_with_radius():
    geom = build_geometry("sphere-zonal", 128, radius=2.0)
    u = ScalarField(geom, 1e-4 * np.cos(geom.nodes))
    report = lambda_star_quotient(geom, u)
    assert abs(report.value - 0.25) <= 1e-4


def test_quotient_bounded_below_on_random_probes(sphere256):
    for trial in range(20):
        u = random_field(sphere256, seed=[71, trial], modes=16)
        report = lambda_star_quotient(sphere256, u)
        assert report.value >= 0.99


def test_minimizer_finds_unit_threshold():
    geom = build_geometry("sphere-zonal", 128)
    search = minimize_lambda_star(geom, seeds=6, modes=8, seed=0)
    assert 0.98 <= search.value <= 1.02
    assert not search.stalled
    assert search.probe_count > 0
    assert np.max(np.abs(search.field.values)) > 0


def test_minimizer_unit_volume_threshold():
    geom = build_geometry("sphere-zonal", 128, normalization="unit-volume")
    search = minimize_lambda_star(geom, seeds=6, modes=8, seed=0)
    assert 4 * np.pi * 0.98 <= search.value <= 4 * np.pi * 1.02


def test_el_constant_branch(sphere256):
    point = solve_el_sphere(2.0, geometry=sphere256)
    assert point.is_constant
    assert_allclose(point.solution.values, np.log(2.0), atol=1e-10)


def test_multistart_rigid_below_threshold(sphere64):
    for point in multistart_el(sphere64, 0.5, inits=4):
        assert point.is_constant
        assert_allclose(point.solution.values, np.log(0.5), atol=1e-7)


def test_bifurcation_at_half_first_eigenvalue(sphere64):
    lam_c = solvers.bifurcation_scan(sphere64, 0.5, 1.5)
    assert abs(lam_c - 1.0) <= 0.005


def test_energy_frozen_value(sphere256):
    # closed form for u = cos(theta), lam = 1 on the unit sphere:
    # 2 pi / 3 - 4 pi log(sinh 1)
    u = ScalarField(sphere256, np.cos(sphere256.nodes))
    assert_allclose(functional_F(sphere256, 1.0, u), 0.0656882531440028,
                    rtol=1e-9)


def test_energy_zero_on_constants(sphere256):
    assert abs(functional_F(sphere256, 1.0, np.full(sphere256.n, -2.0))) \
        <= 1e-12


def test_energy_positive_below_threshold(sphere_vol256):
    u = 0.1 * np.cos(sphere_vol256.nodes)
    assert functional_F(sphere_vol256, 2 * np.pi, u) > 0.0


def test_dissipation_zero_on_constants(sphere256):
    assert dissipation_G(sphere256, 1.0, np.full(sphere256.n, 0.4)) == 0.0


def test_dissipation_quartic_in_amplitude(sphere256):
    values = []
    for eps in (1e-1, 1e-2):
        g = dissipation_G(sphere256, 1.0, eps * np.cos(sphere256.nodes))
        assert g >= 0.0
        values.append(g)
    assert values[1] <= 2e-4 * values[0]


def test_dissipation_matches_quotient_split(sphere256):
    u = random_field(sphere256, seed=77, modes=10)
    lam = 0.8
    report = lambda_star_quotient(sphere256, u)
    expected = 0.5 * (report.value - lam) * report.denominator
    assert_allclose(dissipation_G(sphere256, lam, u), expected,
                    rtol=1e-12, atol=1e-14)


def test_flow_constants_are_stationary(sphere64):
    trace = flow_evolve(sphere64, 1.0, np.full(sphere64.n, 0.3), 1.0)
    assert np.max(np.abs(trace.final_field.values - 0.3)) <= 1e-12
    assert_allclose(trace.mass_values, trace.mass_values[0], rtol=1e-12)


def test_flow_conserves_mass_and_decays_energy(sphere64):
    u0 = ScalarField(sphere64, np.cos(sphere64.nodes))
    trace = flow_evolve(sphere64, 1.0, u0, 2.0)
    drift = np.max(np.abs(trace.mass_values - trace.mass_values[0]))
    assert drift <= 1e-6 * trace.mass_values[0]
    rises = np.diff(trace.F_values)
    assert np.max(rises, initial=0.0) <= 1e-10 * trace.F_values[0]
    assert np.min(trace.G_values) >= -1e-12


@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_flow_energy_dissipation_duality(sphere64, lam):
    u0 = ScalarField(sphere64, np.cos(sphere64.nodes))
    trace = flow_evolve(sphere64, lam, u0, 1.5)
    drop = trace.F_values[0] - trace.F_values[-1]
    dissipated = np.trapezoid(trace.G_values, trace.times)
    assert abs(drop - dissipated) <= 1e-3 * trace.F_values[0]
    mid_slope = np.diff(trace.F_values) / np.diff(trace.times)
    mid_G = 0.5 * (trace.G_values[1:] + trace.G_values[:-1])
    scale = np.max(np.abs(mid_G)) + 1e-30
    assert np.max(np.abs(mid_slope + mid_G)) <= 1e-3 * scale


def test_flow_past_threshold_still_conserves_mass(sphere64):
    """Diagnostics may lose monotonicity above the threshold; mass may not."""
    u0 = ScalarField(sphere64, np.cos(sphere64.nodes))
    trace = flow_evolve(sphere64, 1.5, u0, 1.0)
    drift = np.max(np.abs(trace.mass_values - trace.mass_values[0]))
    assert drift <= 1e-6 * trace.mass_values[0]
    assert trace.steps_taken > 0
