"""Rigidity on the circle: one threshold, two branches, one deficit.

Below 2 pi^2 every start of the semilinear equation collapses onto the
constant solution and the deficit functional is nonnegative; past the
threshold a nonconstant branch opens up and the deficit dips below zero
along it.
"""

import numpy as np

from onofri_lab import (
    ScalarField,
    bifurcation_scan,
    circle_geometry,
    mto_deficit_circle,
    multistart_rigidity,
    solve_el_circle,
)

geom = circle_geometry(256)
critical = 2 * np.pi**2

# locate the threshold from the linearized spectrum alone
lam_c = bifurcation_scan(10.0, 30.0, geometry=geom)
print(f"threshold from the scan: {lam_c:.6f} (2 pi^2 = {critical:.6f})")

# below the threshold, eight random starts all land on log(lambda)
for lam in (5.0, 19.0):
    points = multistart_rigidity(lam, inits=8, geometry=geom)
    tags = {p.branch_tag for p in points}
    print(f"lambda = {lam}: branches found: {sorted(tags)}")

# past it, the same experiment bends away from the constant
points = multistart_rigidity(25.0, inits=8, geometry=geom)
best = max(points, key=lambda p: p.distance_to_constant)
print(f"lambda = 25: distance to constant {best.distance_to_constant:.3f}, "
      f"residual {best.newton_residual:.1e}")

# the deficit tells the same story without solving anything
bump = ScalarField(geom, 1e-2 * np.cos(2 * np.pi * geom.nodes))
print(f"deficit of a small bump at the threshold: "
      f"{mto_deficit_circle(bump, critical):.3e}")
print(f"same bump 5 percent past it:              "
      f"{mto_deficit_circle(bump, 1.05 * critical):.3e}")
print(f"deficit on the bent branch at lambda=25:  "
      f"{mto_deficit_circle(best.solution, 25.0):.3e}")

# a perturbed start below the threshold relaxes back to the constant
point = solve_el_circle(1.0, init=0.1 * np.cos(2 * np.pi * geom.nodes),
                        geometry=geom)
print(f"\nlambda = 1 from a perturbed start: sup|u| = "
      f"{np.max(np.abs(point.solution.values)):.2e}")
