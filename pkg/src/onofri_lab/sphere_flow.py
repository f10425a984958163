"""Rigidity threshold, semilinear equation, and nonlinear flow on the sphere.

The rigidity constant is the infimum over nonconstant fields of

    Q(u) = [int ||L_u - M_u/2||^2 e^{-u/2} + rho int |grad u|^2 e^{-u/2}]
           / int |grad u|^2 e^{-u/2}

where L_u is the traceless Hessian and M_u the traceless gradient square.
On the unit sphere the infimum is 1, reached along multiples of cos(theta);
on the unit-volume normalization it is 4 pi.  The module evaluates the
quotient, minimizes it over band-limited zonal fields, solves the
Euler-Lagrange equation, and integrates the mass-conserving flow whose
energy decays at rate given by the same quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
import numpy.polynomial.legendre as npleg
import scipy.optimize

from .derivatives import differentiate
from .errors import (
    BlowupError,
    ConstantFieldError,
    InvalidParameterError,
    StepFailureError,
    UnsupportedGeometryError,
)
from .geometry import ScalarField, build_geometry, integrate
from . import solvers

DEFAULT_RESOLUTION = 256
DENOMINATOR_FLOOR = 1e-14

_GEOM_CACHE = {}


def sphere_geometry(n=DEFAULT_RESOLUTION, normalization="unit-radius"):
    """Shared zonal sphere discretization, memoized per configuration."""
    key = (n, normalization)
    geom = _GEOM_CACHE.get(key)
    if geom is None:
        geom = build_geometry("sphere-zonal", n, normalization=normalization)
        _GEOM_CACHE[key] = geom
    return geom


def _require_sphere(geometry):
    if geometry.kind != "sphere-zonal":
        raise UnsupportedGeometryError(
            f"expected a zonal sphere geometry, got {geometry.kind}")


@dataclass
class QuotientReport:
    """Rigidity quotient of one field, split into its numerator parts."""

    value: float
    tensor_term: float
    ricci_term: float
    denominator: float
    provenance: str = "user"


@dataclass
class LambdaStarSearch:
    """Outcome of the multistart quotient minimization."""

    value: float
    field: ScalarField
    stalled: bool
    probe_count: int


@dataclass
class FlowTrace:
    """Sampled history of one flow run."""

    times: np.ndarray
    F_values: np.ndarray
    G_values: np.ndarray
    mass_values: np.ndarray
    sup_values: np.ndarray
    final_field: ScalarField
    steps_taken: int = 0


def _quotient_parts(geometry, u):
    """(tensor, ricci, denominator) integrals of the rigidity quotient."""
    bundle = differentiate(geometry, u)
    w = np.exp(-0.5 * (u.values if isinstance(u, ScalarField) else u))
    tensor_density = (bundle.L_normsq - bundle.LM_inner
                      + 0.25 * bundle.M_normsq)
    tensor = integrate(geometry, tensor_density * w)
    denom = integrate(geometry, bundle.grad_sq * w)
    ricci = geometry.ricci * denom
    return float(tensor), float(ricci), float(denom)


def lambda_star_quotient(geometry, u, provenance="user"):
    """Rigidity quotient of a nonconstant zonal field.

    Raises ConstantFieldError when the gradient carries no mass relative
    to the field's own scale.
    """
    _require_sphere(geometry)
    if not isinstance(u, ScalarField):
        u = ScalarField(geometry, np.asarray(u, dtype=float))
    tensor, ricci, denom = _quotient_parts(geometry, u)
    vol = float(np.sum(geometry.quad_weights))
    mean = integrate(geometry, u.values) / vol
    scale = vol * float(np.max(np.abs(u.values - mean))) ** 2
    if scale == 0.0 or denom <= DENOMINATOR_FLOOR * scale:
        raise ConstantFieldError(
            "quotient undefined: field is constant to working precision")
    return QuotientReport(
        value=(tensor + ricci) / denom,
        tensor_term=tensor,
        ricci_term=ricci,
        denominator=denom,
        provenance=provenance)


def _zonal_field(geometry, coeffs):
    """Field from zonal Legendre coefficients c_1..c_m (no constant term)."""
    c = np.concatenate([[0.0], np.asarray(coeffs, dtype=float)])
    return npleg.legval(geometry._t, c)


def minimize_lambda_star(geometry, seeds=16, modes=12, seed=0, maxiter=80,
                         refine=True):
    """Minimize the rigidity quotient over band-limited zonal fields.

    Multistart local descent in Legendre coefficient space, followed by a
    mode-doubling refinement from the best start.  Returns the best value
    seen over every probe evaluation, the corresponding field, a stall
    flag (no optimizer run reported success), and the probe count.
    """
    _require_sphere(geometry)
    best = {"value": np.inf, "coeffs": None, "count": 0}

    def objective(coeffs):
        best["count"] += 1
        values = _zonal_field(geometry, coeffs)
        try:
            with np.errstate(over="ignore"):
                tensor, ricci, denom = _quotient_parts(geometry, values)
        except FloatingPointError:
            return 1e6
        scale = float(np.max(np.abs(values))) ** 2
        if not np.isfinite(denom) or denom <= DENOMINATOR_FLOOR * max(
                scale, 1.0):
            return 1e6
        q = (tensor + ricci) / denom
        if not np.isfinite(q):
            return 1e6
        if q < best["value"]:
            best["value"] = q
            best["coeffs"] = np.array(coeffs, dtype=float)
        return q

    rng = np.random.default_rng(seed)
    decay = 1.0 / np.arange(1, modes + 1) ** 2
    any_success = False
    for _ in range(int(seeds)):
        c0 = 0.3 * rng.standard_normal(modes) * decay
        out = scipy.optimize.minimize(
            objective, c0, method="L-BFGS-B",
            options={"maxiter": maxiter})
        any_success = any_success or bool(out.success)
    if refine and best["coeffs"] is not None:
        c0 = np.concatenate([best["coeffs"],
                             np.zeros(len(best["coeffs"]))])
        out = scipy.optimize.minimize(
            objective, c0, method="L-BFGS-B",
            options={"maxiter": maxiter})
        any_success = any_success or bool(out.success)
    coeffs = best["coeffs"]
    if coeffs is None:
        raise ConstantFieldError("no admissible probe field was found")
    values = _zonal_field(geometry, coeffs)
    return LambdaStarSearch(
        value=best["value"],
        field=ScalarField(geometry, values),
        stalled=not any_success,
        probe_count=best["count"])


def solve_el_sphere(lam, init=None, tol=1e-9, geometry=None):
    """Solve -(1/2) lap u + lambda = e^u on the zonal sphere."""
    geom = sphere_geometry() if geometry is None else geometry
    _require_sphere(geom)
    return solvers.solve_el(geom, lam, init, tol)


def _log_mean_exp(weights, values, vol):
    top = float(np.max(values))
    return top + np.log(float(weights @ np.exp(values - top)) / vol)


def functional_F(geometry, lam, u):
    """Energy (1/4) int |grad u|^2 + lambda int u - lambda vol log(avg e^u).

    Shift invariant, zero on constants, decaying along the flow.  The log
    average keeps the value finite for large fields (max is subtracted
    before exponentiating).
    """
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    values = u.values if isinstance(u, ScalarField) else np.asarray(
        u, dtype=float)
    du = geometry.frame_d1(values)
    vol = float(np.sum(geometry.quad_weights))
    grad_term = 0.25 * integrate(geometry, du * du)
    linear_term = lam * integrate(geometry, values)
    log_term = lam * vol * _log_mean_exp(geometry.quad_weights, values, vol)
    return float(grad_term + linear_term - log_term)


def dissipation_G(geometry, lam, f):
    """Decay rate of the energy along the flow.

    Equals (tensor_term + ricci_term - lambda*denominator)/2, which is
    (Q - lambda)/2 times the denominator; the half comes from the chain
    rule through e^{-f/2}.  Zero on constants, nonnegative whenever
    lambda is at most the quotient of the field.
    """
    _require_sphere(geometry)
    lam = float(lam)
    values = f.values if isinstance(f, ScalarField) else np.asarray(
        f, dtype=float)
    tensor, ricci, denom = _quotient_parts(geometry, values)
    return 0.5 * (tensor + ricci - lam * denom)


def _lap_spectral_radius(geometry):
    """Largest eigenvalue magnitude of -Laplacian, cached per geometry."""
    val = getattr(geometry, "_lap_radius", None)
    if val is None:
        op = -geometry.laplacian_matrix()
        val = float(np.max(np.abs(np.linalg.eigvals(op).real)))
        geometry._lap_radius = val
    return val


def flow_evolve(geometry, lam, u0, t_final, safety=0.25, samples=1024,
                max_steps=2_000_000):
    """Integrate f_t = ((1/2) lap f + (1/4)|grad f|^2) e^{-f/2}.

    The flow conserves int e^f and decreases the energy at rate
    dissipation_G; lambda enters only the recorded diagnostics.  Explicit
    Heun steps with the diffusion-limited adaptive step
    dt = safety * 2 * e^{min f / 2} / lambda_max(-lap).  Returns a
    FlowTrace sampled at roughly ``samples`` points.

    Raises BlowupError past sup|f| = 1e3 and StepFailureError if the
    stable step underflows.
    """
    _require_sphere(geometry)
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    t_final = float(t_final)
    if t_final <= 0:
        raise InvalidParameterError("t_final must be positive")
    if not (0 < safety <= 1):
        raise InvalidParameterError("safety must be in (0, 1]")

    f = np.array(u0.values if isinstance(u0, ScalarField) else u0,
                 dtype=float)
    lap_mat = geometry.laplacian_matrix()
    radius = _lap_spectral_radius(geometry)

    def rhs(values):
        du = geometry.frame_d1(values)
        lap = lap_mat @ values
        return (0.5 * lap + 0.25 * du * du) * np.exp(-0.5 * values)

    dt0 = safety * 2.0 * np.exp(0.5 * float(f.min())) / radius
    stride = max(1, int(round(t_final / dt0 / samples)))

    times = [0.0]
    records = [f.copy()]
    t = 0.0
    step = 0
    while t < t_final:
        if np.max(np.abs(f)) > 1e3:
            raise BlowupError(f"sup|f| exceeded 1e3 at t = {t:.6g}")
        if step >= max_steps:
            raise StepFailureError(
                f"step budget {max_steps} exhausted at t = {t:.6g}")
        dt = safety * 2.0 * np.exp(0.5 * float(f.min())) / radius
        if dt < 1e-14:
            raise StepFailureError(f"stable step underflowed at t = {t:.6g}")
        dt = min(dt, t_final - t)
        k1 = rhs(f)
        k2 = rhs(f + dt * k1)
        f = f + (0.5 * dt) * (k1 + k2)
        t += dt
        step += 1
        if step % stride == 0 or t >= t_final:
            times.append(t)
            records.append(f.copy())

    w = geometry.quad_weights
    F_values = np.array([functional_F(geometry, lam, v) for v in records])
    G_values = np.array([dissipation_G(geometry, lam, v) for v in records])
    with np.errstate(over="ignore"):
        mass_values = np.array([float(w @ np.exp(v)) for v in records])
    sup_values = np.array([float(np.max(np.abs(v))) for v in records])
    return FlowTrace(
        times=np.array(times),
        F_values=F_values,
        G_values=G_values,
        mass_values=mass_values,
        sup_values=sup_values,
        final_field=ScalarField(geometry, f),
        steps_taken=step)
