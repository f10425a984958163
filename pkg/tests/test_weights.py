"""Weighted Euclidean thresholds, chemotaxis profiles, perturbation bounds."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from onofri_lab import (
    ConstantFieldError,
    InvalidParameterError,
    MassOutOfRangeError,
    UnboundedVariationError,
    bound_value,
    capital_lambda_quotient,
    dilation_field,
    lambda_star_weight,
    make_weight,
    onofri_deficit_weighted,
    perturbation_bound,
    random_field,
    solve_el_weighted,
    solve_keller_segel,
    threshold_ratio,
    verify_identity,
)


@pytest.fixture(scope="module")
def stereo(plane1024):
    return make_weight("stereographic", geometry=plane1024)


def test_stereographic_ratio_is_identically_one(stereo):
    ratio = threshold_ratio(stereo)
    assert np.max(np.abs(ratio - 1.0)) <= 1e-8
    thr = lambda_star_weight(stereo)
    assert abs(thr.value - 1.0) <= 1e-8


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_gaussian_threshold_is_half(plane1024, sigma):
    weight = make_weight("gaussian", {"sigma": sigma}, geometry=plane1024)
    thr = lambda_star_weight(weight)
    assert abs(thr.value - 0.5) <= 1e-8
    assert thr.location_r == 0.0


def test_gaussian_log_laplacian_is_constant(plane1024):
    weight = make_weight("gaussian", {"sigma": 1.0}, geometry=plane1024)
    assert np.all(weight.lap_g == -2.0)
    assert weight.normalization_defect <= 1e-10


def test_weight_kind_validation(plane1024):
    with pytest.raises(InvalidParameterError):
        make_weight("lorentzian", geometry=plane1024)
    with pytest.raises(InvalidParameterError):
        make_weight("gaussian", {"sigma": -1.0}, geometry=plane1024)
    with pytest.raises(InvalidParameterError):
        make_weight("keller-segel", geometry=plane1024)


@pytest.mark.parametrize("mass", [2.0, 4.0, 6.0])
def test_chemotaxis_profile_recovers_mass(plane1024, mass):
    weight = solve_keller_segel(mass, geometry=plane1024)
    recovered = mass * (np.sum(plane1024.quad_weights * weight.mu)
                        + weight.tail_mass)
    assert abs(recovered - mass) <= 1e-6


@pytest.mark.parametrize("mass", [2.0, 4.0, 6.0])
def test_chemotaxis_pointwise_decomposition(plane1024, mass):
    """The threshold ratio splits as mass/8pi plus 1/(4 pi mu)."""
    weight = solve_keller_segel(mass, geometry=plane1024)
    keep = weight.mu >= 1e-5 * float(np.max(weight.mu))
    ratio = threshold_ratio(weight)[keep]
    split = 1.0 / (4.0 * np.pi * weight.mu[keep])
    assert np.max(np.abs(ratio - split - mass / (8 * np.pi))) <= 1e-6


def test_chemotaxis_threshold_closed_form(plane1024):
    weight = solve_keller_segel(4.0, geometry=plane1024)
    mu0 = float(plane1024.evaluate_at(weight.mu, 0.0))
    thr = lambda_star_weight(weight)
    assert_allclose(thr.value, 4.0 / (8 * np.pi) + 1.0 / (4 * np.pi * mu0),
                    rtol=1e-8)
    assert thr.location_r == 0.0


def test_selfsimilar_profile_recovers_mass(plane1024):
    weight = solve_keller_segel(4.0, geometry=plane1024, epsilon=0.5)
    assert weight.kind == "ks-selfsim"
    recovered = 4.0 * np.sum(plane1024.quad_weights * weight.mu)
    assert abs(recovered - 4.0) <= 1e-6


def test_small_mass_profile_is_nearly_gaussian(plane1024):
    weak = solve_keller_segel(0.01, geometry=plane1024)
    gauss = make_weight("gaussian", {"sigma": 1.0}, geometry=plane1024)
    assert np.max(np.abs(weak.mu - gauss.mu)) <= 1e-3


def test_chemotaxis_mass_window(plane1024):
    with pytest.raises(MassOutOfRangeError):
        solve_keller_segel(8 * np.pi, geometry=plane1024)
    with pytest.raises(MassOutOfRangeError):
        solve_keller_segel(-1.0, geometry=plane1024)


def test_unperturbed_bound_is_exactly_one(plane1024):
    out = perturbation_bound(np.zeros(plane1024.n), geometry=plane1024)
    assert out.bound == 1.0
    assert out.variation == 0.0
    assert out.bound <= out.lambda_star + 1e-8


def test_bound_arithmetic_frozen():
    assert bound_value(0.1, -0.2) == 0.8822164825850605


def test_perturbation_bound_small_bump(plane1024):
    out = perturbation_bound(lambda r: 0.05 / (1 + r**2),
                             geometry=plane1024)
    assert out.variation > 0.0
    assert out.bound < 1.0
    assert out.bound <= out.lambda_star + 1e-8


def test_perturbation_bound_rejects_wild_variation(plane1024):
    with pytest.raises(UnboundedVariationError):
        perturbation_bound(lambda r: 2.0 * r**2, geometry=plane1024)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 4.0])
def test_weighted_el_zero_solution(stereo, plane1024, lam):
    weights = [stereo,
               make_weight("gaussian", {"sigma": 1.0}, geometry=plane1024)]
    for weight in weights:
        point = solve_el_weighted(lam, weight)
        assert point.newton_residual <= 1e-12
        assert np.max(np.abs(point.solution.values)) <= 1e-9


def test_weighted_el_multistart_rigidity(stereo, plane1024):
    for trial in range(4):
        init = random_field(plane1024, seed=[95, trial], modes=8,
                            amplitude=0.5)
        point = solve_el_weighted(0.5, stereo, init=init)
        assert point.is_constant
        assert np.max(np.abs(point.solution.values)) <= 1e-6


def test_quotient_rejects_constants(stereo):
    with pytest.raises(ConstantFieldError):
        capital_lambda_quotient(stereo, np.full(stereo.geometry.n, 1.0))


def test_quotient_saturates_along_log_direction(stereo, plane1024):
    u = 1e-3 * np.log1p(plane1024.nodes**2)
    q = capital_lambda_quotient(stereo, u)
    assert abs(q - 1.0) <= 1e-8


def test_quotient_bounded_below_by_threshold(plane1024, stereo):
    weights = [stereo,
               make_weight("gaussian", {"sigma": 0.5}, geometry=plane1024),
               make_weight("gaussian", {"sigma": 2.0}, geometry=plane1024),
               solve_keller_segel(4.0, geometry=plane1024)]
    for weight in weights:
        star = lambda_star_weight(weight).value
        for trial in range(10):
            u = random_field(plane1024, seed=[97, trial], modes=16)
            assert capital_lambda_quotient(weight, u) >= star - 1e-8


def test_weighted_deficit_nonnegative_at_threshold(stereo, plane1024):
    for trial in range(20):
        u = random_field(plane1024, seed=[91, trial], modes=16)
        assert onofri_deficit_weighted(stereo, u, 1.0) >= -1e-10


def test_weighted_deficit_shift_invariant(stereo, plane1024):
    u = random_field(plane1024, seed=101, modes=12)
    base = onofri_deficit_weighted(stereo, u, 1.0)
    moved = onofri_deficit_weighted(stereo, u + 5.0, 1.0)
    assert abs(moved - base) <= 1e-9 * (1.0 + abs(base))


@pytest.mark.parametrize("sigma", [1.5, 2.0])
def test_dilation_deficit_near_zero_at_threshold(plane2048, sigma):
    stereo = make_weight("stereographic", geometry=plane2048)
    point = solve_el_weighted(1.0, stereo,
                              init=dilation_field(plane2048, sigma), tol=1e-5)
    assert not point.is_constant
    assert point.newton_residual <= 1e-4
    deficit = onofri_deficit_weighted(stereo, point.solution, 1.0)
    assert abs(deficit) <= 1e-4


def test_dilation_deficit_negative_past_threshold(plane2048):
    stereo = make_weight("stereographic", geometry=plane2048)
    u = dilation_field(plane2048, 2.0)
    assert onofri_deficit_weighted(stereo, u, 1.1) < 0.0


def test_el_identities_on_constant_branch(plane2048):
    stereo = make_weight("stereographic", geometry=plane2048)
    point = solve_el_weighted(0.7, stereo)
    for ident in ("PLANE_I_ZERO", "PLANE_FINAL"):
        rep = verify_identity(ident, plane2048, point, tol=1e-5,
                              weight=stereo.log_weight())
        assert rep.passed
        assert rep.rel_err == 0.0


def test_el_identities_on_dilation_branch(plane2048):
    """Truncation at R caps the boundary flux terms near one percent."""
    stereo = make_weight("stereographic", geometry=plane2048)
    point = solve_el_weighted(1.0, stereo,
                              init=dilation_field(plane2048, 1.5), tol=1e-5)
    rep = verify_identity("PLANE_I_ZERO", plane2048, point, tol=1e-2,
                          weight=stereo.log_weight())
    assert rep.passed
    rep = verify_identity("PLANE_FINAL", plane2048, point, tol=1e-2,
                          weight=stereo.log_weight())
    assert abs(rep.lhs) <= 1e-6
    assert abs(rep.rhs) <= 1e-6
