"""Closed-form constants of the curvature-dimension rigidity criterion.

Everything here is rational arithmetic on rational inputs: dimension and
interpolation parameters are converted to `fractions.Fraction` (decimal
strings keep their decimal value, so d="1.2" means 6/5), every formula is
evaluated exactly, and only the final result is returned as a float.  That
makes statements like theta0(2) == 1.0 exact rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidParameterError, InvariantViolationError


def _frac(x, name):
    """Exact rational view of a parameter."""
    try:
        if hasattr(x, "item"):
            # numpy scalars unwrap to the matching Python number
            x = x.item()
        if isinstance(x, float):
            # use the decimal rendering so 1.2 means 6/5, not its binary
            # neighbour; repr is shortest-roundtrip so this is faithful
            return Fraction(repr(x))
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{name} must be a real number") from exc


def theta0(d):
    """Threshold interpolation parameter 16(d-1)^2 / ((6-d)(d+2)).

    Below this value the quadratic form built from the a, b, c coefficients
    stops being nonnegative; at d = 2 the threshold reaches 1.  Defined for
    1 <= d < 6.
    """
    dd = _frac(d, "d")
    if not (1 <= dd < 6):
        raise InvalidParameterError("dimension parameter must satisfy 1 <= d < 6")
    return float(16 * (dd - 1) ** 2 / ((6 - dd) * (dd + 2)))


@dataclass(frozen=True)
class AbcCoefficients:
    """Quadratic-form coefficients attached to (d, theta)."""

    a: float
    b: float
    c: float
    d: float
    theta: float

    @property
    def mixing_ratio(self):
        """b / (2a): the weight of the gradient tensor inside the norm."""
        return self.b / (2.0 * self.a)


def _abc_fractions(d, theta):
    dd = _frac(d, "d")
    th = _frac(theta, "theta")
    if dd <= 1:
        raise InvalidParameterError("dimension parameter must exceed 1")
    if not (0 <= th <= 1):
        raise InvalidParameterError("theta must lie in [0, 1]")
    ratio = dd / (dd - 1)
    a = th / 4 * ratio
    inner = (1 - th) / 8 + Fraction(3, 16) * th * ratio + Fraction(1, 8)
    b = -inner * 2 * dd / (dd + 2)
    c = (inner * Fraction(1, 2) * dd / (dd + 2)
         - Fraction(1, 64) * (1 - th + 2 * th * ratio)) * ratio
    return dd, th, a, b, c


def abc_coefficients(d, theta):
    """Exact a, b, c coefficients of the interpolated rigidity form."""
    dd, th, a, b, c = _abc_fractions(d, theta)
    return AbcCoefficients(float(a), float(b), float(c), float(dd), float(th))


def discriminant(d, theta):
    """Discriminant b^2 - 4ac and the sign of its closed-form indicator.

    Returns (delta, sign) where sign is -1, 0 or +1 taken from
    16(d-1)^2 - (6-d)(d+2) theta.  The two signs agree identically; a
    disagreement would mean the coefficient formulas are wrong, and raises.
    """
    dd, th, a, b, c = _abc_fractions(d, theta)
    delta = b * b - 4 * a * c
    indicator = 16 * (dd - 1) ** 2 - (6 - dd) * (dd + 2) * th
    sign = (indicator > 0) - (indicator < 0)
    delta_sign = (delta > 0) - (delta < 0)
    if delta_sign != sign:
        raise InvariantViolationError(
            f"discriminant sign {delta_sign} disagrees with indicator sign "
            f"{sign} at d={float(dd)}, theta={float(th)}")
    return float(delta), sign


def _fontenas_domain(d, x):
    dd = _frac(d, "d")
    xx = _frac(x, "x")
    if not (1 < dd <= 2):
        raise InvalidParameterError("dimension parameter must satisfy 1 < d <= 2")
    if not (0 <= xx <= 1):
        raise InvalidParameterError("x must lie in [0, 1]")
    return dd, xx


def fontenas_f1(d, x):
    """Interpolated comparison curve 1 - theta0 + theta0 * x."""
    dd, xx = _fontenas_domain(d, x)
    th0 = 16 * (dd - 1) ** 2 / ((6 - dd) * (dd + 2))
    return float(1 - th0 + th0 * xx)


def fontenas_f2(d, x):
    """Sharper comparison curve d(2-d) + (d-1)^2 x."""
    dd, xx = _fontenas_domain(d, x)
    return float(dd * (2 - dd) + (dd - 1) ** 2 * xx)


def fontenas_gap(d, x):
    """Closed-form difference f2 - f1, factored as
    (d-1)^2 (d-2)^2 / ((6-d)(d+2)) * (1 - x); nonnegative on the domain."""
    dd, xx = _fontenas_domain(d, x)
    return float((dd - 1) ** 2 * (dd - 2) ** 2 / ((6 - dd) * (dd + 2))
                 * (1 - xx))


@dataclass(frozen=True)
class CurvatureBound:
    """Affine-in-theta rigidity bound and the theta that optimizes it."""

    value: float
    theta: float
    theta_opt: float


def curvature_rigidity_bound(d, rho, lam1, theta=None):
    """Rigidity bound (1/2) lam1 (1 - theta) + (theta/2) (d/(d-1)) rho.

    The bound is affine in theta on [theta0(d), 1]; its maximizer is
    theta0(d) when rho * d/(d-1) <= lam1 and 1 otherwise, and that
    optimizing value is always reported.  When ``theta`` is omitted the
    bound is evaluated at the optimizer.
    """
    dd = _frac(d, "d")
    if dd <= 1:
        raise InvalidParameterError("dimension parameter must exceed 1")
    rr = _frac(rho, "rho")
    l1 = _frac(lam1, "lam1")
    if l1 <= 0:
        raise InvalidParameterError("lam1 must be positive")
    th0 = 16 * (dd - 1) ** 2 / ((6 - dd) * (dd + 2)) if dd < 6 else Fraction(1)
    th0 = min(th0, Fraction(1))
    theta_opt = th0 if rr * dd / (dd - 1) <= l1 else Fraction(1)
    if theta is None:
        th = theta_opt
    else:
        th = _frac(theta, "theta")
        if not (th0 <= th <= 1):
            raise InvalidParameterError(
                f"theta must lie in [{float(th0)}, 1] for d={float(dd)}")
    value = Fraction(1, 2) * l1 * (1 - th) + th / 2 * dd / (dd - 1) * rr
    return CurvatureBound(float(value), float(th), float(theta_opt))


def low_dimension_coefficients(d):
    """Coefficient pair (4d(d-1)/((6-d)(d+2)), -d(3d+2)/(2(6-d)(d+2)))
    attached to the open interval 1 < d < 2; evaluation only."""
    dd = _frac(d, "d")
    if not (1 < dd < 2):
        raise InvalidParameterError("dimension parameter must satisfy 1 < d < 2")
    denom = (6 - dd) * (dd + 2)
    return (float(4 * dd * (dd - 1) / denom),
            float(-dd * (3 * dd + 2) / (2 * denom)))
