"""Spectral toolkit for sharp Moser-Trudinger-Onofri type inequalities.

The package computes the objects that decide when the only critical
points of these inequalities are constants: closed-form interpolation
constants, machine-checked integration-by-parts identities, rigidity
thresholds from quotient minimization, a monotone nonlinear flow, and
threshold constants for weighted versions on the plane.

Model geometries (unit circle, zonal sphere, truncated radial plane)
share one spectral collocation interface, so every quantity down to
second derivatives is available at machine precision on smooth fields.
"""

from .constants import (
    abc_coefficients,
    curvature_rigidity_bound,
    discriminant,
    fontenas_f1,
    fontenas_f2,
    fontenas_gap,
    low_dimension_coefficients,
    theta0,
)
from .derivatives import DerivativeBundle, differentiate, validate_bundle
from .errors import (
    BlowupError,
    ConstantFieldError,
    GeometryMismatchError,
    InvalidParameterError,
    InvariantViolationError,
    MassOutOfRangeError,
    NeedsSolutionError,
    NewtonDivergedError,
    NoSignChangeError,
    NotConvergedError,
    OnofriLabError,
    ResolutionError,
    SolverError,
    UnboundedVariationError,
    UnsupportedGeometryError,
)
from .geometry import (
    Geometry,
    ScalarField,
    build_geometry,
    first_eigenvalue,
    integrate,
    load_field,
    random_field,
    save_field,
)
from .identities import (
    REGISTRY,
    SUITES,
    convergence_probe,
    run_suite,
    verify_identity,
    write_reports_csv,
)
from .circle import (
    bifurcation_scan,
    circle_geometry,
    mto_deficit_circle,
    multistart_rigidity,
    solve_el_circle,
)
from .solvers import BranchPoint, multistart_el, solve_el
from .sphere_flow import (
    dissipation_G,
    flow_evolve,
    functional_F,
    lambda_star_quotient,
    minimize_lambda_star,
    solve_el_sphere,
    sphere_geometry,
)
from .weights import (
    Weight,
    bound_value,
    capital_lambda_quotient,
    dilation_field,
    lambda_star_weight,
    make_weight,
    onofri_deficit_weighted,
    perturbation_bound,
    plane_geometry,
    solve_el_weighted,
    solve_keller_segel,
    threshold_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "BranchPoint",
    "ConstantFieldError",
    "DerivativeBundle",
    "Geometry",
    "GeometryMismatchError",
    "InvalidParameterError",
    "InvariantViolationError",
    "MassOutOfRangeError",
    "NeedsSolutionError",
    "NewtonDivergedError",
    "NoSignChangeError",
    "NotConvergedError",
    "OnofriLabError",
    "REGISTRY",
    "ResolutionError",
    "SUITES",
    "ScalarField",
    "SolverError",
    "UnboundedVariationError",
    "UnsupportedGeometryError",
    "Weight",
    "abc_coefficients",
    "bifurcation_scan",
    "circle_geometry",
    "bound_value",
    "build_geometry",
    "capital_lambda_quotient",
    "convergence_probe",
    "curvature_rigidity_bound",
    "differentiate",
    "dilation_field",
    "discriminant",
    "dissipation_G",
    "first_eigenvalue",
    "flow_evolve",
    "fontenas_f1",
    "fontenas_f2",
    "fontenas_gap",
    "functional_F",
    "integrate",
    "lambda_star_quotient",
    "lambda_star_weight",
    "load_field",
    "low_dimension_coefficients",
    "make_weight",
    "minimize_lambda_star",
    "mto_deficit_circle",
    "multistart_el",
    "multistart_rigidity",
    "onofri_deficit_weighted",
    "perturbation_bound",
    "plane_geometry",
    "random_field",
    "run_suite",
    "save_field",
    "solve_el",
    "solve_el_circle",
    "solve_el_sphere",
    "solve_el_weighted",
    "solve_keller_segel",
    "sphere_geometry",
    "theta0",
    "threshold_ratio",
    "validate_bundle",
    "verify_identity",
    "write_reports_csv",
]
