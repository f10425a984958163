"""Closed-form constants of the rigidity criterion, evaluated exactly.

Everything printed here is rational arithmetic under the hood, so the
special values really are exact, not merely close.
"""

import numpy as np

from onofri_lab import (
    abc_coefficients,
    curvature_rigidity_bound,
    discriminant,
    fontenas_f1,
    fontenas_f2,
    fontenas_gap,
    theta0,
)

# the threshold interpolation parameter reaches 1 exactly at d = 2
for d in (1.2, 1.5, 1.8, 2.0):
    print(f"theta0({d}) = {theta0(d)!r}")

# the quadratic-form coefficients at the critical pairing (d, theta) = (2, 1)
co = abc_coefficients(2, 1)
print(f"\na = {co.a}, b = {co.b}, c = {co.c}, b/(2a) = {co.mixing_ratio}")

# the discriminant changes sign exactly where the indicator does; along the
# threshold curve theta = theta0(d) both vanish together
for theta in (0.5, 1.0):
    delta, sign = discriminant(2, theta)
    print(f"discriminant(2, {theta}) = {delta:.3e}, sign {sign:+d}")

# two comparison curves and their factored gap, nonnegative on 1 < d <= 2
d, x = 1.5, 0.5
print(f"\nf1({d}, {x}) = {fontenas_f1(d, x):.9f}")
print(f"f2({d}, {x}) = {fontenas_f2(d, x):.9f}")
print(f"gap        = {fontenas_gap(d, x):.9f}")

xs = np.linspace(0, 1, 5)
print("gap along x:", np.array([fontenas_gap(1.5, x) for x in xs]))

# the rigidity bound is affine in theta; with balanced curvature
# rho = (d-1)/d * lam1 it collapses to lam1/2 for every admissible theta
lam1 = 2.0
for theta in (None, 1.0):
    out = curvature_rigidity_bound(2, 0.5 * lam1, lam1, theta=theta)
    label = "optimal theta" if theta is None else f"theta = {theta}"
    print(f"\nbound at {label}: {out.value} (optimizer {out.theta_opt})")
