"""Machine checks of the integration-by-parts identity registry."""

import io

import numpy as np
import pytest

from onofri_lab import (
    InvalidParameterError,
    NeedsSolutionError,
    REGISTRY,
    SUITES,
    ScalarField,
    UnsupportedGeometryError,
    convergence_probe,
    random_field,
    run_suite,
    verify_identity,
    write_reports_csv,
)
from onofri_lab.identities import SUITE_TOL


@pytest.mark.parametrize("suite", ["circle", "sphere", "plane"])
def test_suite_passes_on_random_fields(suite):
    summary = run_suite(suite, trials=4, seed=11)
    assert summary.all_passed, summary.worst_identity
    assert summary.worst_rel_err <= SUITE_TOL[suite]
    assert summary.total == 4 * len(SUITES[suite])


def test_registry_suites_consistent():
    for suite, names in SUITES.items():
        for name in names:
            assert name in REGISTRY
            assert not REGISTRY[name].needs_el


def test_circle_cubic_reduction_direct(circle256):
    x = circle256.nodes
    fld = ScalarField(circle256, np.sin(2 * np.pi * x)
                      + 0.3 * np.cos(4 * np.pi * x))
    rep = verify_identity("CIRCLE_INTPARTS", circle256, fld, tol=1e-10)
    assert rep.passed
    assert rep.rel_err <= 1e-10


@pytest.mark.parametrize("suite,identity", [("circle", "CIRCLE_INTPARTS"),
                                            ("sphere", "SPHERE_IBP"),
                                            ("plane", "PLANE_IPP1")])
def test_constant_fields_are_trivial(suite, identity, request):
    fixtures = {"circle": "circle256", "sphere": "sphere256",
                "plane": "plane2048"}
    geom = request.getfixturevalue(fixtures[suite])
    rep = verify_identity(identity, geom, np.full(geom.n, 2.0), tol=1e-12)
    assert rep.passed
    assert rep.rel_err == 0.0


def test_spectral_slack_vanishes_with_amplitude(sphere256):
    """For u = eps cos(theta) the gap inequality saturates at order eps^4."""
    slacks = []
    for eps in (1e-1, 1e-2):
        fld = ScalarField(sphere256, eps * np.cos(sphere256.nodes))
        rep = verify_identity("POINCARE_SLACK", sphere256, fld, tol=1e-7)
        assert rep.passed
        slacks.append(rep.lhs - rep.rhs)
    assert slacks[0] >= 0.0 and slacks[1] >= 0.0
    assert slacks[1] <= 1e-3 * slacks[0]


@pytest.mark.parametrize("identity,fixture", [("CIRCLE_SPECTRAL", "circle256"),
                                              ("POINCARE_SLACK", "sphere256")])
def test_inequalities_hold_on_random_fields(identity, fixture, request):
    geom = request.getfixturevalue(fixture)
    tol = SUITE_TOL["circle" if identity.startswith("CIRCLE") else "sphere"]
    for trial in range(8):
        fld = random_field(geom, seed=[51, trial], modes=24)
        rep = verify_identity(identity, geom, fld, tol=tol)
        assert rep.passed
        scale = max(abs(rep.lhs), abs(rep.rhs), 1e-30)
        assert rep.lhs >= rep.rhs - tol * scale


def test_solution_bound_identities_reject_raw_fields(circle256, plane2048):
    with pytest.raises(NeedsSolutionError):
        verify_identity("CIRCLE_EL_IDENTITY", circle256,
                        random_field(circle256, seed=3), tol=1e-8)
    with pytest.raises(NeedsSolutionError):
        verify_identity("PLANE_I_ZERO", plane2048,
                        random_field(plane2048, seed=3), tol=1e-2)


def test_unknown_names_rejected(circle256):
    with pytest.raises(InvalidParameterError):
        verify_identity("NO_SUCH_IDENTITY", circle256,
                        random_field(circle256, seed=0), tol=1e-8)
    with pytest.raises(InvalidParameterError):
        run_suite("torus")


def test_geometry_mismatch_rejected(circle256):
    with pytest.raises(UnsupportedGeometryError):
        verify_identity("SPHERE_IBP", circle256,
                        random_field(circle256, seed=0), tol=1e-8)


def test_report_csv_layout():
    summary = run_suite("circle", trials=2, seed=5)
    buf = io.StringIO()
    write_reports_csv(summary.reports, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "identity_id,geometry,seed,trial,lhs,rhs,rel_err,pass"
    assert len(lines) == 1 + summary.total
    assert all(line.endswith(",true") for line in lines[1:])


def test_residual_drops_under_refinement():
    worst_n, worst_2n = convergence_probe("circle", 48, trials=2, modes=32)
    assert worst_2n < 1e-2 * worst_n
