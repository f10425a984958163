"""Weighted planar Onofri theory: weights, thresholds, and radial solvers.

A weight is a radial probability density mu on the plane; its rigidity
threshold is the infimum of (-Delta log mu)/(8 pi mu).  The module builds
the standard weights (stereographic, gaussian, perturbed stereographic,
Keller-Segel steady states and their self-similar variant), evaluates the
threshold with endpoint and tail awareness, solves the mass-constrained
Euler-Lagrange equation, and computes the weighted deficit whose sign
change locates the optimal constant.

Truncation policy: the domain is cut at radius R, so every integral
against d mu carries a first-order tail correction (closed-form tail mass
times the boundary value of the integrand).  Without it the stereographic
tail mass 1/(1+R^2), about 2.5e-3 at R = 20, would dominate the error
budget of the deficit and of the mass constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
import numpy.polynomial.legendre as npleg

from .errors import (
    ConstantFieldError,
    InvalidParameterError,
    InvariantViolationError,
    MassOutOfRangeError,
    NewtonDivergedError,
    NotConvergedError,
    UnboundedVariationError,
    UnsupportedGeometryError,
)
from .geometry import ScalarField, build_geometry, integrate
from .identities import RadialLogWeight
from .solvers import branch_point

DEFAULT_RESOLUTION = 1024
DEFAULT_RADIUS = 20.0
KS_MASS_LIMIT = 8.0 * np.pi

_GEOM_CACHE = {}

WEIGHT_KINDS = ("stereographic", "gaussian", "perturbed", "keller-segel",
                "ks-selfsim")

_MONOTONE_KINDS = ("stereographic", "keller-segel")


def plane_geometry(n=DEFAULT_RESOLUTION, radius=DEFAULT_RADIUS):
    """Shared truncated radial plane, memoized per configuration."""
    key = (n, radius)
    geom = _GEOM_CACHE.get(key)
    if geom is None:
        geom = build_geometry("plane-radial", n, radius=radius)
        _GEOM_CACHE[key] = geom
    return geom


def _require_plane(geometry):
    if geometry.kind != "plane-radial":
        raise UnsupportedGeometryError(
            f"expected a radial plane geometry, got {geometry.kind}")


@dataclass
class Weight:
    """Radial probability density mu with its log-derivative data.

    g = log mu with its radial derivative dg, frame second derivative
    hess_g, and Laplacian lap_g; closed forms where the kind has them,
    spectral derivatives of the stored g otherwise.  tail_mass estimates
    the d mu mass beyond the truncation radius.
    """

    kind: str
    params: dict
    geometry: object
    mu: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    hess_g: np.ndarray
    lap_g: np.ndarray
    tail_mass: float = 0.0

    @property
    def grad_g_sq(self):
        return self.dg**2

    @property
    def normalization_defect(self):
        """Distance of the tail-completed mass of mu from one."""
        interior = integrate(self.geometry, self.mu)
        return abs(interior + self.tail_mass - 1.0)

    def log_weight(self):
        """Repackage the log-density data for the identity suite."""
        return RadialLogWeight(g=self.g, dg=self.dg,
                               hess_g=self.hess_g, lap_g=self.lap_g)

    def mass_integral(self, u_values):
        """Tail-corrected integral of e^u d mu, stable for large fields."""
        geom = self.geometry
        top = float(np.max(u_values))
        edge = float(geom.evaluate_at(u_values, geom.radius))
        interior = float(
            (geom.quad_weights * self.mu) @ np.exp(u_values - top))
        return top + np.log(interior + self.tail_mass * np.exp(edge - top))

    def mean_integral(self, u_values):
        """Tail-corrected integral of u d mu."""
        geom = self.geometry
        edge = float(geom.evaluate_at(u_values, geom.radius))
        return (integrate(geom, self.mu * u_values)
                + self.tail_mass * edge)


def _spectral_log_data(geometry, g):
    """(dg, hess_g, lap_g) of stored g values by spectral differentiation."""
    dg, h11, h22 = geometry.frame_derivatives(g)
    return dg, h11, h11 + h22


def _check_weight(weight):
    # Sharply decaying kinds may underflow to exact zero at the far tail;
    # that is truncation, not a sign defect, so only negativity is fatal.
    if np.any(weight.mu < 0) or weight.mu[0] <= 0:
        raise InvariantViolationError(
            f"{weight.kind} weight has nonpositive density nodes")
    if weight.normalization_defect > 1e-4:
        raise InvariantViolationError(
            f"{weight.kind} weight mass off by {weight.normalization_defect:.3e}")
    if weight.kind in _MONOTONE_KINDS:
        drops = np.diff(weight.mu)
        if np.any(drops > 1e-10 * float(np.max(weight.mu))):
            raise InvariantViolationError(
                f"{weight.kind} density is not radially nonincreasing")
    return weight


def make_weight(kind, params=None, geometry=None):
    """Construct a named radial weight on the truncated plane.

    Kinds: stereographic; gaussian (sigma); perturbed (h, node values or
    a callable of r); keller-segel (mass); ks-selfsim (mass, epsilon).
    Keller-Segel masses must lie in (0, 8 pi).
    """
    params = dict(params or {})
    geom = plane_geometry() if geometry is None else geometry
    _require_plane(geom)
    xi = geom._xi
    r = geom.nodes

    if kind == "stereographic":
        mu = 1.0 / (np.pi * (1.0 + xi) ** 2)
        g = -np.log(np.pi) - 2.0 * np.log1p(xi)
        dg = -4.0 * r / (1.0 + xi)
        hess_g = -(4.0 - 4.0 * xi) / (1.0 + xi) ** 2
        lap_g = -8.0 / (1.0 + xi) ** 2
        tail = 1.0 / (1.0 + geom.radius**2)
        return _check_weight(Weight(kind, params, geom, mu, g, dg, hess_g,
                                    lap_g, tail))

    if kind == "gaussian":
        sigma = float(params.get("sigma", 1.0))
        if sigma <= 0:
            raise InvalidParameterError("sigma must be positive")
        s2 = sigma * sigma
        mu = np.exp(-xi / (2.0 * s2)) / (2.0 * np.pi * s2)
        g = -xi / (2.0 * s2) - np.log(2.0 * np.pi * s2)
        dg = -r / s2
        hess_g = np.full(geom.n, -1.0 / s2)
        lap_g = np.full(geom.n, -2.0 / s2)
        tail = float(np.exp(-geom.radius**2 / (2.0 * s2)))
        return _check_weight(Weight(kind, {"sigma": sigma}, geom, mu, g, dg,
                                    hess_g, lap_g, tail))

    if kind == "perturbed":
        h = params.get("h", None)
        if h is None:
            h_vals = np.zeros(geom.n)
        elif callable(h):
            h_vals = np.asarray(h(r), dtype=float) + np.zeros(geom.n)
        else:
            h_vals = np.asarray(h, dtype=float)
            if h_vals.shape != (geom.n,):
                raise InvalidParameterError(
                    "h must be node values or a callable of r")
        base = make_weight("stereographic", geometry=geom)
        h_edge = float(geom.evaluate_at(h_vals, geom.radius))
        interior = integrate(geom, np.exp(-h_vals) * base.mu)
        z_norm = interior + np.exp(-h_edge) * base.tail_mass
        mu = np.exp(-h_vals) * base.mu / z_norm
        dh, hh11, hh22 = geom.frame_derivatives(h_vals)
        g = -h_vals + base.g - np.log(z_norm)
        weight = Weight("perturbed", {"h": h_vals}, geom, mu, g,
                        base.dg - dh, base.hess_g - hh11,
                        base.lap_g - (hh11 + hh22),
                        float(np.exp(-h_edge) * base.tail_mass / z_norm))
        return _check_weight(weight)

    if kind in ("keller-segel", "ks-selfsim"):
        mass = params.get("mass", None)
        if mass is None:
            raise InvalidParameterError(f"{kind} weight needs a mass")
        eps = float(params.get("epsilon", 0.0)) if kind == "ks-selfsim" else 0.0
        return solve_keller_segel(mass, geometry=geom, epsilon=eps)

    raise InvalidParameterError(
        f"unknown weight kind {kind!r}; choose from {WEIGHT_KINDS}")


def _antiderivative_values(geometry, values):
    """Node values and total of the running integral of f ds from the left
    edge of the collocation interval."""
    c = geometry._analyze(values)
    ci = npleg.legint(c, lbnd=-1.0)
    return npleg.legval(geometry._s, ci), float(npleg.legval(1.0, ci))


def _radial_poisson(geometry, source, eps=0.0):
    """Solve -lap c = eps r c' + source radially, with c = 0 at the edge.

    Integrating factor form: (r c' e^{eps r^2/2})' = -r * source * e^{...},
    then one more quadrature inward from the truncation radius.  All
    running integrals are spectral antiderivatives in the collocation
    variable, so the accuracy matches the differentiation machinery.
    """
    xi = geometry._xi
    jac = geometry._dxi_ds
    inner, _ = _antiderivative_values(
        geometry, source * np.exp(0.5 * eps * xi) * jac)
    inner *= 0.5
    outer_integrand = np.exp(-0.5 * eps * xi) * inner / xi * jac
    run, total = _antiderivative_values(geometry, outer_integrand)
    return 0.5 * (total - run)


def solve_keller_segel(mass, geometry=None, epsilon=0.0, damping=0.5,
                       tol=1e-10, max_iter=400):
    """Damped fixed-point iteration for the chemotaxis steady profile.

    Solves -lap c = eps x . grad c + n with n = mass * normalized
    e^{c - r^2/2} density, and returns the Weight with mu = n/mass.
    Raises MassOutOfRangeError outside (0, 8 pi) and NotConvergedError
    (with the update history) if the damped updates stall.
    """
    mass = float(mass)
    if not (0.0 < mass < KS_MASS_LIMIT):
        raise MassOutOfRangeError(
            f"mass {mass:.6g} outside (0, {KS_MASS_LIMIT:.6g})")
    eps = float(epsilon)
    if eps < 0:
        raise InvalidParameterError("epsilon must be nonnegative")
    geom = plane_geometry() if geometry is None else geometry
    _require_plane(geom)
    if eps * geom.radius**2 > 1200.0:
        raise InvalidParameterError(
            "epsilon too large for the truncation radius (overflow)")
    xi = geom._xi
    w = geom.quad_weights

    def density_of(c):
        z = c - 0.5 * xi
        z = z - np.max(z)
        e = np.exp(z)
        return mass * e / float(w @ e)

    c = np.zeros(geom.n)
    history = []
    for _ in range(max_iter):
        n = density_of(c)
        c_new = _radial_poisson(geom, n, eps=eps)
        update = float(np.max(np.abs(c_new - c)))
        history.append(update)
        c = c + damping * (c_new - c)
        if update <= tol:
            break
    else:
        raise NotConvergedError(
            f"chemotaxis profile stalled at update {history[-1]:.3e}",
            history=history)

    n = density_of(c)
    mu = n / mass
    g = np.log(mu)
    dg, hess_g, lap_g = _spectral_log_data(geom, g)
    kind = "ks-selfsim" if eps > 0 else "keller-segel"
    params = {"mass": mass}
    if eps > 0:
        params["epsilon"] = eps
    weight = Weight(kind, params, geom, mu, g, dg, hess_g, lap_g,
                    tail_mass=0.0)
    weight.chemical = c
    return _check_weight(weight)


@dataclass
class WeightThreshold:
    """Infimum of the threshold ratio with the location where it is hit."""

    value: float
    location_r: float
    ratio_origin: float
    ratio_tail: float


def threshold_ratio(weight):
    """Node values of (-lap log mu) / (8 pi mu)."""
    with np.errstate(divide="ignore", over="ignore"):
        return -weight.lap_g / (8.0 * np.pi * weight.mu)


def _ratio_at(weight, coordinate):
    """Ratio extrapolated to one radius, numerator and denominator apart.

    The ratio array itself is garbage at underflowed tail nodes, so a
    spectral fit of it would be poisoned; the components stay smooth.
    """
    geom = weight.geometry
    top = float(geom.evaluate_at(-weight.lap_g, coordinate))
    bottom = float(geom.evaluate_at(weight.mu, coordinate))
    return top / (8.0 * np.pi * bottom)


def _ratio_endpoints(weight):
    """Ratio at r = 0 and the tail limit, closed-form where exact."""
    if weight.kind == "stereographic":
        return 1.0, 1.0
    if weight.kind == "gaussian":
        # ratio = e^{r^2/(2 sigma^2)} / 2, increasing; tail unbounded
        return 0.5, np.inf
    at0 = _ratio_at(weight, 0.0)
    if weight.kind in ("keller-segel", "ks-selfsim"):
        # 1/(4 pi mu) diverges with vanishing density
        return at0, np.inf
    return at0, _ratio_at(weight, weight.geometry.radius)


def lambda_star_weight(weight):
    """Rigidity threshold: infimum of (-lap log mu)/(8 pi mu).

    The grid minimum is completed by the origin value (the nodes exclude
    r = 0) and by the closed-form tail behavior, so truncation cannot
    clip a boundary infimum.  Nodes whose density sits below the
    conditioning floor are excluded: the noise of a numeric Laplacian
    over a vanishing denominator is not a trustworthy candidate.
    """
    geom = weight.geometry
    ratio = threshold_ratio(weight)
    keep = np.isfinite(ratio) & (weight.mu >= 1e-8 * float(np.max(weight.mu)))
    at0, tail = _ratio_endpoints(weight)
    k = int(np.flatnonzero(keep)[np.argmin(ratio[keep])])
    value, location = float(ratio[k]), float(geom.nodes[k])
    if at0 < value:
        value, location = at0, 0.0
    if np.isfinite(tail) and tail < value:
        value, location = tail, np.inf
    return WeightThreshold(value=value, location_r=location,
                           ratio_origin=at0, ratio_tail=float(tail))


@dataclass
class PerturbationBound:
    """Closed-form lower bound on the threshold of a perturbed weight."""

    bound: float
    lambda_star: float
    variation: float
    curvature_inf: float


def bound_value(variation, curvature_inf):
    """Arithmetic of the perturbation estimate from variation and inf."""
    return float(np.exp(-variation) * (1.0 + 0.125 * curvature_inf))


def perturbation_bound(h, geometry=None):
    """Bound e^{-Var(h)} [1 + (1/8) inf (1+r^2)^2 lap h] and its target.

    Builds the perturbed weight, computes its threshold, and checks the
    bound from below; InvariantViolationError if the displayed bound ever
    exceeded the computed threshold.
    """
    geom = plane_geometry() if geometry is None else geometry
    _require_plane(geom)
    weight = make_weight("perturbed", {"h": h}, geometry=geom)
    h_vals = weight.params["h"]
    hs, _ = geom._legendre_derivs(h_vals)
    gauss_w = geom.quad_weights / (np.pi * geom._dxi_ds)
    variation = float(gauss_w @ np.abs(hs))
    if variation > 600.0:
        raise UnboundedVariationError(
            f"total variation {variation:.3e} overflows the bound")
    dh, hh11, hh22 = geom.frame_derivatives(h_vals)
    curvature = (1.0 + geom._xi) ** 2 * (hh11 + hh22)
    curvature_inf = float(np.min(curvature))
    bound = bound_value(variation, curvature_inf)
    star = lambda_star_weight(weight).value
    if bound > star + 1e-8:
        raise InvariantViolationError(
            f"perturbation bound {bound:.8f} exceeds threshold {star:.8f}")
    return PerturbationBound(bound=bound, lambda_star=star,
                             variation=variation,
                             curvature_inf=curvature_inf)


def solve_el_weighted(lam, weight, init=None, tol=1e-9, max_iter=60,
                      max_halvings=40):
    """Solve -(1/8 pi) lap u + lambda mu = lambda e^u mu, int e^u dmu = 1.

    The unit-mass constraint is enforced by an additive shift after every
    Newton step (the tail-corrected mass integral keeps u = 0 an exact
    solution on the truncated grid).  Returns a BranchPoint whose
    constant tag means rigidity: the field collapsed to zero.
    """
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    geom = weight.geometry
    mu = weight.mu
    lap = geom.laplacian_matrix()
    coeff = 1.0 / (8.0 * np.pi)

    def normalize(u):
        return u - weight.mass_integral(u)

    def residual(u):
        with np.errstate(over="ignore"):
            return -coeff * (lap @ u) + lam * mu - lam * np.exp(u) * mu

    if init is None:
        u = np.zeros(geom.n)
    else:
        u = np.array(init.values if isinstance(init, ScalarField) else init,
                     dtype=float)
    u = normalize(u)
    res = residual(u)
    rnorm = float(np.max(np.abs(res)))
    history = [rnorm]
    for _ in range(max_iter):
        if rnorm <= tol:
            break
        with np.errstate(over="ignore"):
            jac = -coeff * lap - lam * np.diag(np.exp(u) * mu)
        delta = np.linalg.solve(jac, -res)
        step = 1.0
        for _ in range(max_halvings + 1):
            u_try = normalize(u + step * delta)
            res_try = residual(u_try)
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
    else:
        raise NotConvergedError(
            f"residual {rnorm:.3e} above tol {tol:.1e}", history=history)
    return branch_point(geom, lam, u, rnorm)


def capital_lambda_quotient(weight, u):
    """Curvature quotient of one field against a weight.

    (1/8 pi) int [(grad u . grad g)^2 - (lap g + |grad g|^2)|grad u|^2]
    e^{-u/2} dx / mu over int |grad u|^2 e^{-u/2} dx, with g = log mu.
    Bounded below by the weight's threshold for radial fields.  For
    sharply concentrated weights the 1/mu factor can exceed float range
    when the probe keeps gradient mass at the far tail; the quotient is
    then +inf, which is the faithful side of the bound.
    """
    geom = weight.geometry
    values = u.values if isinstance(u, ScalarField) else np.asarray(
        u, dtype=float)
    du = geom.frame_d1(values)
    half = np.exp(-0.5 * values)
    den = integrate(geom, du * du * half)
    vol_scale = float(np.sum(geom.quad_weights))
    mean = integrate(geom, values) / vol_scale
    scale = vol_scale * float(np.max(np.abs(values - mean))) ** 2
    if scale == 0.0 or den <= 1e-14 * scale:
        raise ConstantFieldError("quotient undefined for a constant field")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        bracket = ((du * weight.dg) ** 2
                   - (weight.lap_g + weight.dg**2) * du * du)
        integrand = bracket * half / weight.mu
    # a sharply decaying mu underflows to zero at the far tail, where the
    # true integrand is ratio * du^2: zero when du vanishes there (0/0),
    # and beyond float range otherwise, so +-inf is the faithful value
    integrand[np.isnan(integrand) & (weight.mu == 0.0)] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        num = integrate(geom, integrand) / (8.0 * np.pi)
    return float(num / den)


def onofri_deficit_weighted(weight, u, lam):
    """Deficit (1/16 pi) int |grad u|^2 dx - lambda [log int e^u dmu
    - int u dmu], with tail-corrected d mu integrals.

    Zero on constants, nonnegative up to the weight's optimal lambda,
    shift invariant.
    """
    lam = float(lam)
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    geom = weight.geometry
    values = u.values if isinstance(u, ScalarField) else np.asarray(
        u, dtype=float)
    du = geom.frame_d1(values)
    grad_term = integrate(geom, du * du) / (16.0 * np.pi)
    jensen_gap = weight.mass_integral(values) - weight.mean_integral(values)
    return float(grad_term - lam * jensen_gap)


def dilation_field(geometry, sigma):
    """Conformal family 2 log sigma + 2 log(1+r^2) - 2 log(1+sigma^2 r^2).

    Equality cases of the weighted inequality for the stereographic
    weight at lambda = 1; solves its Euler-Lagrange equation pointwise.
    """
    _require_plane(geometry)
    sigma = float(sigma)
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    xi = geometry._xi
    values = (2.0 * np.log(sigma) + 2.0 * np.log1p(xi)
              - 2.0 * np.log1p(sigma**2 * xi))
    return ScalarField(geometry, values)
