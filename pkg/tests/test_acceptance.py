"""Acceptance gate: every advertised capability at its pinned tolerance.

Each test is one capability, so a verbose run reads as a twelve-line
scoreboard.  Tolerances are frozen here on purpose; loosening one is a
release decision, not a test fix.
"""

import numpy as np
from scipy.integrate import simpson

from onofri_lab import (
    ScalarField,
    abc_coefficients,
    bifurcation_scan,
    build_geometry,
    convergence_probe,
    dilation_field,
    discriminant,
    first_eigenvalue,
    flow_evolve,
    fontenas_f1,
    fontenas_f2,
    fontenas_gap,
    lambda_star_quotient,
    lambda_star_weight,
    make_weight,
    minimize_lambda_star,
    mto_deficit_circle,
    multistart_rigidity,
    onofri_deficit_weighted,
    perturbation_bound,
    random_field,
    run_suite,
    solve_el_weighted,
    solve_keller_segel,
    theta0,
    threshold_ratio,
)
from onofri_lab.identities import SUITE_TOL

CIRCLE_CRITICAL = 2.0 * np.pi ** 2


def test_01_spectral_gap_closed_forms(circle256, sphere256, sphere_vol256):
    assert abs(first_eigenvalue(circle256) - 4 * np.pi**2) \
        <= 1e-10 * 4 * np.pi**2
    assert abs(first_eigenvalue(sphere256) - 2.0) <= 1e-8 * 2.0
    assert abs(first_eigenvalue(sphere_vol256) - 8 * np.pi) \
        <= 1e-8 * 8 * np.pi


def test_02_threshold_constants_dimension_two():
    assert theta0(2) == 1.0
    delta, sign = discriminant(2, 1)
    assert abs(delta) <= 1e-14
    assert sign == 0
    co = abc_coefficients(2, 1)
    assert abs(co.a - 0.5) <= 1e-14
    assert abs(co.b + 0.5) <= 1e-14
    assert abs(co.c - 0.125) <= 1e-14
    assert co.mixing_ratio == -0.5


def test_03_comparison_gap_factored_form():
    ds = np.linspace(1.0, 2.0, 51)[1:]
    xs = np.linspace(0.0, 1.0, 50)
    for d in ds:
        for x in xs:
            gap = fontenas_gap(d, x)
            assert gap >= 0.0
            factored = ((d - 1) ** 2 * (d - 2) ** 2
                        / ((6 - d) * (d + 2)) * (1 - x))
            assert abs(fontenas_f2(d, x) - fontenas_f1(d, x) - factored) \
                <= 1e-12


def test_04_identity_suites_and_refinement():
    for suite in ("circle", "sphere", "plane"):
        summary = run_suite(suite, trials=32, seed=7)
        assert summary.all_passed, (suite, summary.worst_identity,
                                    summary.worst_rel_err)
        assert summary.worst_rel_err <= SUITE_TOL[suite]
    # The operating resolutions above already sit at the rounding floor,
    # so the refinement factor is measured from coarse grids where
    # truncation still dominates.
    for suite, base in (("circle", 48), ("sphere", 48), ("plane", 64)):
        worst_n, worst_2n = convergence_probe(suite, base, modes=32)
        assert worst_2n <= 1e-2 * worst_n, (suite, worst_n, worst_2n)


def test_05_circle_branch_structure(circle256):
    lam_c = bifurcation_scan(10.0, 30.0, geometry=circle256)
    assert abs(lam_c - CIRCLE_CRITICAL) <= 0.005 * CIRCLE_CRITICAL
    for lam in (1.0, 5.0, 10.0, 19.0):
        points = multistart_rigidity(lam, inits=8, geometry=circle256)
        assert all(p.is_constant for p in points), lam
    points = multistart_rigidity(25.0, inits=8, geometry=circle256)
    bent = [p for p in points if not p.is_constant]
    assert bent
    best = max(bent, key=lambda p: p.distance_to_constant)
    assert best.distance_to_constant > 0.1
    assert best.newton_residual <= 1e-8


def test_06_circle_deficit_sign(circle256):
    rng = np.random.default_rng(2026)
    for _ in range(100):
        u = random_field(circle256, seed=rng.integers(1 << 30), modes=24,
                         amplitude=rng.uniform(0.05, 1.0))
        assert mto_deficit_circle(u, CIRCLE_CRITICAL) >= -1e-10
    bump = ScalarField(circle256,
                       1e-2 * np.cos(2 * np.pi * circle256.nodes))
    assert mto_deficit_circle(bump, 1.05 * CIRCLE_CRITICAL) < 0.0


def test_07_sphere_threshold(sphere256):
    for norm, lo, hi in (("unit-radius", 0.98, 1.02),
                         ("unit-volume", 4 * np.pi * 0.98,
                          4 * np.pi * 1.02)):
        geom = build_geometry("sphere-zonal", 128, normalization=norm)
        search = minimize_lambda_star(geom, seeds=8, modes=10, seed=0)
        assert lo <= search.value <= hi, (norm, search.value)
    for trial in range(100):
        u = random_field(sphere256, seed=[19, trial], modes=16)
        assert lambda_star_quotient(sphere256, u).value >= 0.99


def test_08_flow_diagnostics(sphere64):
    u0 = ScalarField(sphere64, np.cos(sphere64.nodes))
    trace = flow_evolve(sphere64, 1.0, u0, 5.0)
    F0 = trace.F_values[0]
    drift = np.max(np.abs(trace.mass_values - trace.mass_values[0]))
    assert drift <= 1e-6 * trace.mass_values[0]
    assert np.max(np.diff(trace.F_values), initial=0.0) <= 1e-10 * F0
    mid_slope = np.diff(trace.F_values) / np.diff(trace.times)
    mid_G = 0.5 * (trace.G_values[1:] + trace.G_values[:-1])
    scale = np.max(np.abs(mid_G))
    assert np.max(np.abs(mid_slope + mid_G)) <= 1e-3 * scale
    dissipated = simpson(trace.G_values, x=trace.times)
    assert abs(F0 - dissipated - trace.F_values[-1]) <= 1e-4 * F0


def test_09_weight_thresholds(plane1024):
    stereo = make_weight("stereographic", geometry=plane1024)
    assert np.max(np.abs(threshold_ratio(stereo) - 1.0)) <= 1e-8
    assert abs(lambda_star_weight(stereo).value - 1.0) <= 1e-6
    for sigma in (0.5, 1.0, 2.0):
        weight = make_weight("gaussian", {"sigma": sigma},
                             geometry=plane1024)
        assert abs(lambda_star_weight(weight).value - 0.5) <= 1e-8


def test_10_chemotaxis_profiles(plane1024):
    for mass in (2.0, 4.0, 6.0):
        weight = solve_keller_segel(mass, geometry=plane1024)
        recovered = mass * (np.sum(plane1024.quad_weights * weight.mu)
                            + weight.tail_mass)
        assert abs(recovered - mass) <= 1e-6
        # below the density floor the spectral Laplacian of log mu sits on
        # an underflowed denominator, so the split is checked where the
        # profile carries mass
        keep = weight.mu >= 1e-5 * float(np.max(weight.mu))
        split = (threshold_ratio(weight)[keep]
                 - 1.0 / (4.0 * np.pi * weight.mu[keep]))
        assert np.max(np.abs(split - mass / (8 * np.pi))) <= 1e-6
    selfsim = solve_keller_segel(4.0, geometry=plane1024, epsilon=0.5)
    recovered = 4.0 * np.sum(plane1024.quad_weights * selfsim.mu)
    assert abs(recovered - 4.0) <= 1e-6


def test_11_perturbation_bounds(plane1024):
    flat = perturbation_bound(np.zeros(plane1024.n), geometry=plane1024)
    assert flat.bound == 1.0
    assert flat.bound <= flat.lambda_star + 1e-8
    bumped = perturbation_bound(lambda r: 0.05 / (1 + r**2),
                                geometry=plane1024)
    assert bumped.bound <= bumped.lambda_star + 1e-8


def test_12_weighted_rigidity(plane1024):
    stereo = make_weight("stereographic", geometry=plane1024)
    for lam in (0.5, 1.0, 2.0, 4.0):
        point = solve_el_weighted(lam, stereo)
        assert point.newton_residual <= 1e-12
    for trial in range(8):
        init = random_field(plane1024, seed=[95, trial], modes=8,
                            amplitude=0.5)
        point = solve_el_weighted(0.5, stereo, init=init)
        assert point.is_constant
    for sigma in (1.5, 2.0):
        u = dilation_field(plane1024, sigma)
        assert abs(onofri_deficit_weighted(stereo, u, 1.0)) <= 1e-4
    assert onofri_deficit_weighted(
        stereo, dilation_field(plane1024, 2.0), 1.1) < 0.0
