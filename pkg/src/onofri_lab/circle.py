"""Rigidity of the periodic semilinear equation in one dimension.

Solves -(1/2) u'' + lambda = e^u on the unit circle, locates the loss of
rigidity at lambda = 2 pi^2 through the linearized spectrum, and evaluates
the log-Sobolev style deficit whose nonnegativity up to that threshold is
the one dimensional rigidity statement.  Above the threshold the deficit
functional picks out the nonconstant branch, which is how the solver
continues past the bifurcation: descend the deficit first, then polish
with Newton on the equation itself.
"""

from __future__ import annotations

import numpy as np
import scipy.optimize

from .errors import (
    InvalidParameterError,
    SolverError,
    UnsupportedGeometryError,
)
from .geometry import ScalarField, build_geometry, integrate, random_field
from . import solvers

DEFAULT_RESOLUTION = 256

_GEOM_CACHE = {}


def circle_geometry(n=DEFAULT_RESOLUTION):
    """Shared circle discretization (unit length), memoized per resolution."""
    geom = _GEOM_CACHE.get(n)
    if geom is None:
        geom = build_geometry("circle", n)
        _GEOM_CACHE[n] = geom
    return geom


def _require_circle(geometry):
    if geometry.kind != "circle":
        raise UnsupportedGeometryError(
            f"expected a circle geometry, got {geometry.kind}")


def _log_mean_exp(weights, values, vol):
    """log of the average of e^u, stable for large positive values."""
    top = float(np.max(values))
    return top + np.log(float(weights @ np.exp(values - top)) / vol)


def mto_deficit_circle(u, lam):
    """Deficit (1/4) int u'^2 + lambda int u - lambda vol log(avg e^u).

    Nonnegative for every field exactly up to lambda = 2 pi^2, which makes
    8 pi^2 the optimal constant in the squared-gradient form.  Invariant
    under u -> u + const; exponentials are computed after subtracting the
    max so large fields do not overflow.
    """
    if not isinstance(u, ScalarField):
        raise InvalidParameterError("u must be a ScalarField")
    geom = u.geometry
    _require_circle(geom)
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    du = geom.frame_d1(u.values)
    vol = float(np.sum(geom.quad_weights))
    grad_term = 0.25 * integrate(geom, du * du)
    linear_term = lam * integrate(geom, u.values)
    log_term = lam * vol * _log_mean_exp(geom.quad_weights, u.values, vol)
    return float(grad_term + linear_term - log_term)


def _descend_deficit(geometry, lam, u0, maxiter=800):
    """L-BFGS descent of the deficit; returns a mass-normalized iterate.

    The deficit is shift invariant and its critical points solve the
    equation after an additive shift fixing int e^u = lambda vol, so the
    minimizer is a high-quality Newton start on whichever branch is
    energetically preferred.  Returns None when the descent escapes (the
    deficit is unbounded below past 8 pi^2).
    """
    w = geometry.quad_weights
    vol = float(np.sum(w))
    lap = geometry.laplacian_matrix()

    def value_and_grad(u):
        shifted = u - np.max(u)
        lap_u = lap @ shifted
        exp_u = np.exp(shifted)
        mass = float(w @ exp_u)
        val = (-0.25 * float((w * shifted) @ lap_u)
               + lam * float(w @ shifted)
               - lam * vol * np.log(mass / vol))
        grad = w * (-0.5 * lap_u + lam - lam * vol * exp_u / mass)
        return val, grad

    out = scipy.optimize.minimize(
        value_and_grad, np.asarray(u0, dtype=float), jac=True,
        method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-10})
    u = out.x
    if not np.all(np.isfinite(u)) or np.max(np.abs(u - np.mean(u))) > 80.0:
        return None
    log_mass = np.max(u) + np.log(float(w @ np.exp(u - np.max(u))))
    return u + np.log(lam * vol) - log_mass


def solve_el_circle(lam, init=None, tol=1e-9, geometry=None):
    """Solve -(1/2) u'' + lambda = e^u on the circle from a given start.

    With init None the constant solution log(lambda) is returned directly.
    A nonconstant init is first relaxed by deficit descent (which carries
    it onto the nonconstant branch once lambda exceeds 2 pi^2) and then
    polished by damped Newton.  Returns a BranchPoint.
    """
    geom = circle_geometry() if geometry is None else geometry
    _require_circle(geom)
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    if init is None:
        return solvers.solve_el(geom, lam, None, tol)
    u0 = init.values if isinstance(init, ScalarField) else np.asarray(
        init, dtype=float)
    u1 = _descend_deficit(geom, lam, u0)
    if u1 is not None:
        try:
            return solvers.solve_el(geom, lam, u1, tol)
        except SolverError:
            pass
    return solvers.solve_el(geom, lam, u0, tol)


def bifurcation_scan(lam_min, lam_max, steps=24, geometry=None):
    """Locate the sign change of the linearized spectrum on the circle.

    Returns the critical lambda bracketed to relative width 1e-4; raises
    NoSignChangeError when the window misses it.  The exact crossing sits
    at half the first Laplacian eigenvalue, 2 pi^2 on the unit circle.
    """
    geom = circle_geometry() if geometry is None else geometry
    _require_circle(geom)
    return solvers.bifurcation_scan(geom, lam_min, lam_max, steps)


def multistart_rigidity(lam, inits=8, amplitude=0.5, seed=0, tol=1e-9,
                        geometry=None):
    """Solve from several random band-limited starts around log(lambda).

    Returns the list of BranchPoints.  Below 2 pi^2 every start lands on
    the constant branch; that is the rigidity statement this probes.
    """
    geom = circle_geometry() if geometry is None else geometry
    _require_circle(geom)
    points = []
    for k in range(int(inits)):
        bump = random_field(geom, seed=[seed, k], modes=8,
                            amplitude=amplitude)
        init = np.log(float(lam)) + bump.values
        points.append(solve_el_circle(lam, init=init, tol=tol, geometry=geom))
    return points
