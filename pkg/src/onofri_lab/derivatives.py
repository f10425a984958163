"""Per-node derivative bundles and frame tensor quantities.

A :class:`DerivativeBundle` collects, for one scalar field on one geometry,
every pointwise quantity the rigidity machinery consumes: gradient square,
Laplacian, orthonormal-frame Hessian diagonal, and the norms and inner
products of the trace-free tensors built from them.  On the plane the bundle
optionally couples to a radial log-weight g through the mixed slope terms.

All quantities live on the geometry's nodes, so everything downstream is
plain array algebra plus quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InvariantViolationError, UnsupportedGeometryError
from .geometry import CIRCLE, PLANE, Geometry, ScalarField

TAIL_WARN_LEVEL = 1e-8


@dataclass
class DerivativeBundle:
    """Pointwise derivative data for one field.

    Attributes
    ----------
    u, du, grad_sq, lap : ndarray
        Field values, radial/tangential first derivative, |grad u|^2, and
        Laplace-Beltrami image at the nodes.
    hess11, hess22 : ndarray or None
        Orthonormal-frame Hessian diagonal; hess22 is None on the circle.
    L_normsq, M_normsq, LM_inner : ndarray
        Squared norm of the trace-free Hessian L, of the trace-free
        gradient tensor M, and their Frobenius inner product.  All three
        vanish identically in dimension one.
    warn_tail : bool
        True when the field's coefficient tail holds more than 1e-8 of the
        spectral energy, i.e. the grid is at its resolution limit.
    dot_ug, dot_ug_sq, N_normsq, LMN_normsq, omega_g_sq, grad_g_sq : ndarray or None
        Weight-coupled entries, present only when a plane bundle is built
        with a weight slope: grad u . grad g, its square, the squared norms
        of the trace-free coupling tensor N and of L - M/2 - N, the squared
        slope of g along the unit gradient direction (zero where grad u
        vanishes), and |grad g|^2.
    """

    geometry: Geometry
    u: np.ndarray
    du: np.ndarray
    grad_sq: np.ndarray
    lap: np.ndarray
    hess11: np.ndarray
    hess22: np.ndarray | None
    L_normsq: np.ndarray
    M_normsq: np.ndarray
    LM_inner: np.ndarray
    warn_tail: bool = False
    dot_ug: np.ndarray | None = dc_field(default=None, repr=False)
    dot_ug_sq: np.ndarray | None = dc_field(default=None, repr=False)
    N_normsq: np.ndarray | None = dc_field(default=None, repr=False)
    LMN_normsq: np.ndarray | None = dc_field(default=None, repr=False)
    omega_g_sq: np.ndarray | None = dc_field(default=None, repr=False)
    grad_g_sq: np.ndarray | None = dc_field(default=None, repr=False)

    @property
    def has_weight(self):
        return self.dot_ug is not None


def _weight_slope(geometry, weight):
    """Per-node radial slope of the log-weight, from an object or an array."""
    if hasattr(weight, "dg"):
        slope = np.asarray(weight.dg, dtype=float)
    elif isinstance(weight, ScalarField):
        slope = weight.geometry.frame_d1(weight.values)
    else:
        slope = np.asarray(weight, dtype=float)
    if slope.shape != (geometry.n,):
        raise UnsupportedGeometryError(
            "weight slope length does not match the geometry")
    return slope


def differentiate(geometry, field, weight=None):
    """Build the full derivative bundle of a field.

    Parameters
    ----------
    geometry : Geometry
    field : ScalarField or array of node values
    weight : optional
        Only meaningful on the plane: an object with a per-node ``dg``
        attribute (radial slope of the log-weight g), a ScalarField holding
        g itself, or a plain array of slope values.  Enables the
        weight-coupled bundle entries.

    The bundle satisfies the frame split ``hess11^2 + hess22^2 =
    L_normsq + lap^2 / d`` and the gradient-tensor norm ``M_normsq =
    (1 - 1/d) grad_sq^2`` at every node by construction; see
    :func:`validate_bundle`.
    """
    if isinstance(field, ScalarField):
        if field.geometry is not geometry and not geometry.same_discretization(
                field.geometry):
            raise UnsupportedGeometryError(
                "field was sampled on a different discretization")
        values = field.values
    else:
        values = np.asarray(field, dtype=float)

    warn = bool(np.max(geometry.tail_energy_fraction(values)) > TAIL_WARN_LEVEL)
    du, h11, h22 = geometry.frame_derivatives(values)
    grad_sq = du * du

    if geometry.kind == CIRCLE:
        lap = h11
        zero = np.zeros_like(du)
        bundle = DerivativeBundle(
            geometry, values, du, grad_sq, lap, h11, None,
            zero, zero, zero, warn)
        if weight is not None:
            raise UnsupportedGeometryError(
                "weight coupling is defined on the plane only")
        return bundle

    lap = h11 + h22
    # trace-free Hessian and gradient tensor, both diagonal in the radial
    # or zonal frame: L = diag(q, -q) with q = (h11 - h22)/2, and
    # M = grad u x grad u - (grad_sq/2) Id = diag(grad_sq/2, -grad_sq/2).
    q_L = 0.5 * (h11 - h22)
    L_normsq = 2.0 * q_L * q_L
    M_normsq = 0.5 * grad_sq * grad_sq
    LM_inner = q_L * grad_sq

    bundle = DerivativeBundle(
        geometry, values, du, grad_sq, lap, h11, h22,
        L_normsq, M_normsq, LM_inner, warn)

    if weight is not None:
        if geometry.kind != PLANE:
            raise UnsupportedGeometryError(
                "weight coupling is defined on the plane only")
        dg = _weight_slope(geometry, weight)
        dot = du * dg
        q_N = 0.5 * dot
        q = q_L - 0.25 * grad_sq - q_N
        bundle.dot_ug = dot
        bundle.dot_ug_sq = dot * dot
        bundle.N_normsq = 2.0 * q_N * q_N
        bundle.LMN_normsq = 2.0 * q * q
        bundle.grad_g_sq = dg * dg
        with np.errstate(invalid="ignore", divide="ignore"):
            om = np.where(grad_sq > 0.0, (dot * dot) / grad_sq, 0.0)
        bundle.omega_g_sq = om
    return bundle


def _sup_rel(lhs, rhs):
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs))) / scale


def validate_bundle(bundle, tol=1e-9):
    """Check the pointwise frame invariants of a bundle.

    Verifies, in sup-relative terms at all nodes:

    * Hessian split: |H|^2 equals L_normsq + lap^2 / d,
    * gradient-tensor norm: M_normsq equals (1 - 1/d) grad_sq^2,
    * weighted plane bundles only: N_normsq equals
      grad_sq * grad_g_sq - dot_ug_sq / 2.

    Raises InvariantViolationError when any of them exceeds ``tol``.
    """
    d = bundle.geometry.dim
    h_sq = bundle.hess11 ** 2
    if bundle.hess22 is not None:
        h_sq = h_sq + bundle.hess22 ** 2
    checks = [
        ("hessian-split", h_sq, bundle.L_normsq + bundle.lap ** 2 / d),
        ("gradient-tensor-norm", bundle.M_normsq,
         (1.0 - 1.0 / d) * bundle.grad_sq ** 2),
    ]
    if bundle.has_weight:
        checks.append(
            ("coupling-tensor-norm", bundle.N_normsq,
             bundle.grad_sq * bundle.grad_g_sq - 0.5 * bundle.dot_ug_sq))
    for name, lhs, rhs in checks:
        err = _sup_rel(lhs, rhs)
        if not err <= tol:
            raise InvariantViolationError(
                f"{name} invariant violated: sup-relative error {err:.3e} "
                f"exceeds {tol:.1e}")
    return True
