"""Derivative bundles: frame derivatives, tensor norms, linearity."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from onofri_lab import differentiate, random_field, validate_bundle
from onofri_lab.identities import stereographic_log_weight


@pytest.mark.parametrize("fixture_name", ["circle256", "sphere256",
                                          "plane1024"])
def test_pointwise_tensor_identities(fixture_name, request):
    """Hessian split and gradient-tensor norm hold at every node."""
    geom = request.getfixturevalue(fixture_name)
    for seed in range(4):
        fld = random_field(geom, seed=[17, seed], modes=20)
        bundle = differentiate(geom, fld)
        validate_bundle(bundle, tol=1e-9)


def test_weighted_bundle_identities(plane1024):
    weight = stereographic_log_weight(plane1024)
    for seed in range(4):
        fld = random_field(plane1024, seed=[23, seed], modes=20)
        bundle = differentiate(plane1024, fld, weight=weight)
        validate_bundle(bundle, tol=1e-9)


@pytest.mark.parametrize("fixture_name", ["circle256", "sphere256",
                                          "plane1024"])
def test_linearity_of_linear_components(fixture_name, request):
    geom = request.getfixturevalue(fixture_name)
    u = random_field(geom, seed=31, modes=16)
    v = random_field(geom, seed=32, modes=16)
    alpha, beta = 1.7, -0.4
    combo = differentiate(geom, u * alpha + v * beta)
    bu = differentiate(geom, u)
    bv = differentiate(geom, v)
    for name in ("u", "du", "lap", "hess11", "hess22"):
        left = getattr(combo, name)
        if left is None:
            continue
        right = alpha * getattr(bu, name) + beta * getattr(bv, name)
        scale = np.max(np.abs(right)) + 1.0
        assert np.max(np.abs(left - right)) <= 1e-12 * scale, name


def test_sphere_first_harmonic_is_trace_free(sphere256):
    """cos(theta) has vanishing traceless Hessian in the zonal frame."""
    from onofri_lab import ScalarField

    fld = ScalarField(sphere256, np.cos(sphere256.nodes))
    bundle = differentiate(sphere256, fld)
    assert np.max(np.abs(bundle.L_normsq)) <= 1e-18


def test_m_norm_matches_gradient_quartic(sphere256):
    fld = random_field(sphere256, seed=41, modes=12)
    bundle = differentiate(sphere256, fld)
    assert_allclose(bundle.M_normsq, 0.5 * bundle.grad_sq**2,
                    rtol=1e-12, atol=1e-13)
