"""Damped Newton iteration and branch records for the semilinear equation.

The circle and zonal sphere share one Euler-Lagrange equation,
``-(1/2) lap u + lambda - e^u = 0``, so the solver and solution record live
here and the geometry-specific modules wrap them.  Newton steps solve the
dense collocation Jacobian and a halving line search keeps the exponential
nonlinearity from running away near bifurcation points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    InvalidParameterError,
    NewtonDivergedError,
    NoSignChangeError,
    NotConvergedError,
)
from .geometry import ScalarField, integrate

CONSTANT_BRANCH_CUTOFF = 1e-6


@dataclass
class BranchPoint:
    """One converged solution of the semilinear equation at one lambda."""

    lam: float
    solution: ScalarField
    branch_tag: str
    newton_residual: float
    distance_to_constant: float

    @property
    def is_constant(self):
        return self.branch_tag == "constant"


def newton_solve(residual_fn, jacobian_fn, u0, tol, max_iter=60,
                 max_halvings=40):
    """Newton iteration with residual-norm line search.

    Returns (u, residual_sup, history).  A step is accepted when it cuts
    the sup-norm residual by the Armijo fraction; otherwise the step is
    halved, up to ``max_halvings`` times.  Raises NewtonDivergedError when
    no acceptable step exists and NotConvergedError when the iteration
    budget runs out; both carry the residual history.
    """
    u = np.array(u0, dtype=float)
    res = residual_fn(u)
    rnorm = float(np.max(np.abs(res)))
    history = [rnorm]
    for _ in range(max_iter):
        if rnorm <= tol:
            return u, rnorm, history
        # least-squares step with a singular-value cutoff: on a nonconstant
        # branch the Jacobian has an exact null direction (translation of
        # the profile), and a plain solve would push the iterate along it
        delta = scipy.linalg.lstsq(jacobian_fn(u), -res, cond=1e-12)[0]
        step = 1.0
        for _ in range(max_halvings + 1):
            u_try = u + step * delta
            res_try = residual_fn(u_try)
            rnorm_try = float(np.max(np.abs(res_try)))
            if np.isfinite(rnorm_try) and rnorm_try <= (1.0 - 0.25 * step) * rnorm:
                break
            step *= 0.5
        else:
            raise NewtonDivergedError(
                f"no descent step found at residual {rnorm:.3e}",
                history=history)
        u, res, rnorm = u_try, res_try, rnorm_try
        history.append(rnorm)
    if rnorm <= tol:
        return u, rnorm, history
    raise NotConvergedError(
        f"residual {rnorm:.3e} above tol {tol:.1e} after {max_iter} steps",
        history=history)


def solve_el(geometry, lam, init=None, tol=1e-9):
    """Solve -(1/2) lap u + lambda = e^u on a circle or sphere geometry.

    ``init`` is a ScalarField, an array of node values, or None for the
    constant solution log(lambda) as starting point.  Returns a BranchPoint
    with the sup-norm residual and the distance to the constant branch.
    """
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    if init is None:
        u0 = np.full(geometry.n, np.log(lam))
    elif isinstance(init, ScalarField):
        u0 = init.values
    else:
        u0 = np.asarray(init, dtype=float)

    lap = geometry.laplacian_matrix()

    def residual(u):
        with np.errstate(over="ignore"):
            return -0.5 * (lap @ u) + lam - np.exp(u)

    def jacobian(u):
        with np.errstate(over="ignore"):
            return -0.5 * lap - np.diag(np.exp(u))

    u, rnorm, _ = newton_solve(residual, jacobian, u0, tol)
    return branch_point(geometry, lam, u, rnorm)


def branch_point(geometry, lam, u, rnorm):
    """Assemble the BranchPoint record for a converged iterate."""
    vol = float(np.sum(geometry.quad_weights))
    mean = integrate(geometry, u) / vol
    dist = float(np.max(np.abs(u - mean)))
    tag = "constant" if dist <= CONSTANT_BRANCH_CUTOFF else "nonconstant"
    return BranchPoint(lam, ScalarField(geometry, u), tag, float(rnorm), dist)


def _nonconstant_spectrum_min(geometry, lam):
    """Smallest eigenvalue of the constant-branch linearization, excluding
    the constant mode.

    The linearized operator at u = log(lambda) is -(1/2) lap - lambda; its
    constant eigenvector always carries -lambda, so the sign of the
    smallest remaining eigenvalue detects the bifurcation.  The operator is
    self-adjoint in the quadrature inner product, so it is symmetrized by a
    sqrt-weight similarity transform before calling eigh.
    """
    op = -0.5 * geometry.laplacian_matrix() - lam * np.eye(geometry.n)
    root_w = np.sqrt(geometry.quad_weights)
    sym = (root_w[:, None] * op) / root_w[None, :]
    vals, vecs = scipy.linalg.eigh(0.5 * (sym + sym.T))
    const_dir = root_w / np.linalg.norm(root_w)
    keep = vals[(const_dir @ vecs) ** 2 < 0.5]
    if keep.size == 0:
        raise NotConvergedError("spectrum contained only the constant mode")
    return float(keep.min())


def bifurcation_scan(geometry, lam_min, lam_max, steps=24, rel_width=1e-4):
    """Bracket and bisect the sign change of the linearized spectrum.

    Scans ``steps`` points of [lam_min, lam_max] for a sign change of the
    smallest non-constant eigenvalue of the constant-branch linearization,
    then bisects the bracket to relative width ``rel_width``.  Raises
    NoSignChangeError when the interval misses the crossing.
    """
    lam_min, lam_max = float(lam_min), float(lam_max)
    if not (0 < lam_min < lam_max):
        raise InvalidParameterError("need 0 < lam_min < lam_max")
    grid = np.linspace(lam_min, lam_max, max(2, int(steps)))
    vals = [_nonconstant_spectrum_min(geometry, lam) for lam in grid]
    bracket = None
    for a, b, va, vb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if va == 0.0:
            return float(a)
        if va * vb < 0:
            bracket = (a, b, va)
            break
    else:
        if vals[-1] == 0.0:
            return float(grid[-1])
        raise NoSignChangeError(
            f"linearized eigenvalue keeps its sign on [{lam_min}, {lam_max}]")
    lo, hi, flo = bracket
    while (hi - lo) > rel_width * hi:
        mid = 0.5 * (lo + hi)
        fmid = _nonconstant_spectrum_min(geometry, mid)
        if fmid == 0.0:
            return float(mid)
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return float(0.5 * (lo + hi))


def multistart_el(geometry, lam, inits=8, amplitude=0.5, seed=0, tol=1e-9,
                  modes=8):
    """Solve the equation from several random band-limited inits.

    Returns the list of BranchPoints in init order.  Used to probe
    rigidity: below the bifurcation every start should land on the
    constant branch.
    """
    from .geometry import random_field

    points = []
    for k in range(int(inits)):
        fld = random_field(geometry, seed=[seed, k], modes=modes,
                           amplitude=amplitude)
        init = np.log(lam) + fld.values
        points.append(solve_el(geometry, lam, init=init, tol=tol))
    return points
