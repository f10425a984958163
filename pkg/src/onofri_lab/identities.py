"""Machine checks of the integral and pointwise identities behind rigidity.

Every identity the toolkit relies on is registered here once, with a
table-driven evaluator that assembles both sides from a single
:class:`~onofri_lab.derivatives.DerivativeBundle` by quadrature.  Random
band-limited trial fields then probe each identity to spectral accuracy;
a failure localizes a defect in the derivative machinery, the quadrature,
or the identity's own coefficients.

Equality identities report ``rel_err = |lhs - rhs| / max(|lhs|, |rhs|,
1e-30)``.  Inequality identities report the relative violation instead,
zero when the inequality holds with slack.  Identities conditioned on an
Euler-Lagrange solution refuse plain fields and want a solver output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .derivatives import differentiate
from .errors import (
    InvalidParameterError,
    NeedsSolutionError,
    UnsupportedGeometryError,
)
from .geometry import (
    CIRCLE,
    PLANE,
    SPHERE,
    Geometry,
    ScalarField,
    build_geometry,
    integrate,
    random_field,
)

REL_FLOOR = 1e-30


# ---------------------------------------------------------------------------
# radial log-weights (closed-form stereographic default for plane trials)


@dataclass
class RadialLogWeight:
    """Per-node data of g = log(density) for a radial weight.

    The measure of the plane identity suite is e^{-u/2-g} dx, the
    reciprocal of the density against e^{-u/2}; the sign convention
    matters only for the two identities tied to the Euler-Lagrange
    equation, where g must be the log of the density in the equation.
    """

    g: np.ndarray
    dg: np.ndarray
    hess_g: np.ndarray
    lap_g: np.ndarray

    @property
    def density(self):
        return np.exp(self.g)


def stereographic_log_weight(geometry):
    """The log-weight with density 1 / (pi (1 + r^2)^2) on the plane."""
    if geometry.kind != PLANE:
        raise UnsupportedGeometryError("stereographic weight lives on the plane")
    xi = geometry.nodes ** 2
    g = -np.log(np.pi) - 2.0 * np.log1p(xi)
    dg = -4.0 * geometry.nodes / (1.0 + xi)
    hess_g = -(4.0 - 4.0 * xi) / (1.0 + xi) ** 2
    lap_g = -8.0 / (1.0 + xi) ** 2
    return RadialLogWeight(g, dg, hess_g, lap_g)


def inverse_stereographic_log_weight(geometry):
    """The log-weight with density pi (1 + r^2)^2, reciprocal of stereographic.

    The elimination identities hold for every radial log-weight, so the
    random-field suite is free to pick the instance whose measure
    e^{-u/2-g} dx decays like r^-4.  That choice keeps the integrals of
    twice-differentiated quantities well conditioned: spectral roundoff in
    high derivatives sits at the outer nodes, exactly where a growing
    measure would amplify it past the suite tolerance.
    """
    base = stereographic_log_weight(geometry)
    return RadialLogWeight(-base.g, -base.dg, -base.hess_g, -base.lap_g)


# ---------------------------------------------------------------------------
# evaluation context


class _Context:
    """Lazy shared quantities for one (geometry, field, weight) evaluation."""

    def __init__(self, geometry, bundle, weight=None, lam=None):
        self.geom = geometry
        self.b = bundle
        self.weight = weight
        self.lam = lam
        self._cache = {}

    def _get(self, key, maker):
        if key not in self._cache:
            self._cache[key] = maker()
        return self._cache[key]

    @property
    def half_density(self):
        """e^{-u/2} at the nodes."""
        return self._get("half", lambda: np.exp(-0.5 * self.b.u))

    @property
    def nu_density(self):
        """e^{-u/2 - g} at the nodes (plane measure d nu before dx)."""
        return self._get(
            "nu", lambda: np.exp(-0.5 * self.b.u - self.weight.g))

    def int_w(self, values):
        """Integral against e^{-u/2} d(surface measure)."""
        return integrate(self.geom, values * self.half_density)

    def int_nu(self, values):
        """Integral against e^{-u/2 - g} dx."""
        return integrate(self.geom, values * self.nu_density)

    @property
    def lap_grad_sq(self):
        """Laplacian applied to |grad u|^2."""
        def make():
            d1, h11, h22 = self.geom.frame_derivatives(self.b.grad_sq)
            return h11 if h22 is None else h11 + h22
        return self._get("lap_grad_sq", make)

    @property
    def d1_lap(self):
        """First derivative of the Laplacian field."""
        return self._get("d1_lap", lambda: self.geom.frame_d1(self.b.lap))

    @property
    def lam1(self):
        """Closed-form first positive Laplace eigenvalue."""
        if self.geom.kind == CIRCLE:
            return (2.0 * np.pi / self.geom.length) ** 2
        if self.geom.kind == SPHERE:
            return 2.0 / self.geom.radius ** 2
        raise UnsupportedGeometryError("no spectral gap on the truncated plane")

    @property
    def q_lm(self):
        """Radial eigenvalue of L - M/2 (contracts grad u x grad g)."""
        b = self.b
        return self._get(
            "q_lm", lambda: 0.5 * (b.hess11 - b.hess22) - 0.25 * b.grad_sq)


@dataclass
class _Part:
    name: str
    lhs: float
    rhs: float
    abs_err: float


def _eq(name, lhs, rhs):
    return _Part(name, float(lhs), float(rhs), abs(float(lhs) - float(rhs)))


def _ge(name, lhs, rhs):
    """Inequality part lhs >= rhs: abs_err is the violation, if any."""
    return _Part(name, float(lhs), float(rhs),
                 max(0.0, float(rhs) - float(lhs)))


def _pointwise(name, lhs_nodes, rhs_nodes):
    lhs = float(np.max(np.abs(lhs_nodes)))
    rhs = float(np.max(np.abs(rhs_nodes)))
    return _Part(name, lhs, rhs, float(np.max(np.abs(lhs_nodes - rhs_nodes))))


# ---------------------------------------------------------------------------
# evaluators


def _alg_hessian_split(ctx):
    b = ctx.b
    h_sq = b.hess11 ** 2 if b.hess22 is None else b.hess11 ** 2 + b.hess22 ** 2
    return [_pointwise("hessian-split", h_sq,
                       b.L_normsq + b.lap ** 2 / ctx.geom.dim)]


def _alg_m_norm(ctx):
    b = ctx.b
    return [_pointwise("m-norm", b.M_normsq,
                       (1.0 - 1.0 / ctx.geom.dim) * b.grad_sq ** 2)]


def _sphere_blw_pointwise(ctx):
    b = ctx.b
    lhs = 0.5 * ctx.lap_grad_sq
    rhs = (b.L_normsq + b.lap ** 2 / ctx.geom.dim
           + ctx.d1_lap * b.du + ctx.geom.ricci * b.grad_sq)
    return [_pointwise("bochner", lhs, rhs)]


def _sphere_ibp(ctx):
    b, d = ctx.b, ctx.geom.dim
    lhs = ctx.int_w(b.lap * b.grad_sq)
    rhs = (0.5 * d / (d + 2) * ctx.int_w(b.grad_sq ** 2)
           - 2.0 * d / (d + 2) * ctx.int_w(b.LM_inner))
    return [_eq("cubic-term", lhs, rhs)]


def _sphere_blw_integral(ctx):
    b, d = ctx.b, ctx.geom.dim
    lhs = ctx.int_w(b.lap ** 2)
    factor = d / (d - 1.0)
    rhs = factor * (0.75 * ctx.int_w(b.lap * b.grad_sq)
                    - 0.125 * ctx.int_w(b.grad_sq ** 2)
                    + ctx.int_w(b.L_normsq)
                    + ctx.geom.ricci * ctx.int_w(b.grad_sq))
    return [_eq("laplacian-square", lhs, rhs)]


def _poincare_slack(ctx):
    b = ctx.b
    lhs = ctx.int_w(b.lap ** 2)
    rhs = (ctx.lam1 * ctx.int_w(b.grad_sq)
           - ctx.int_w(b.grad_sq ** 2) / 16.0
           + 0.5 * ctx.int_w(b.grad_sq * b.lap))
    return [_ge("poincare", lhs, rhs)]


def _circle_intparts(ctx):
    b = ctx.b
    lhs = ctx.int_w(b.grad_sq * b.lap)
    rhs = ctx.int_w(b.grad_sq ** 2) / 6.0
    return [_eq("cubic-term", lhs, rhs)]


def _circle_el_identity(ctx):
    b = ctx.b
    lhs = ctx.int_w(0.25 * b.lap ** 2 + b.grad_sq ** 2 / 48.0)
    rhs = 0.5 * ctx.lam * ctx.int_w(b.grad_sq)
    return [_eq("el-energy-balance", lhs, rhs)]


def _circle_spectral(ctx):
    b = ctx.b
    lhs = ctx.int_w(b.lap ** 2) - ctx.int_w(b.grad_sq ** 2) / 48.0
    rhs = ctx.lam1 * ctx.int_w(b.grad_sq)
    return [_ge("spectral-gap", lhs, rhs)]


def _plane_elim1(ctx):
    b = ctx.b
    lhs = 2.0 * ctx.int_nu(b.lap * b.dot_ug) - ctx.int_nu(b.grad_sq * b.dot_ug)
    rhs = (-2.0 * ctx.int_nu(b.hess11 * b.dot_ug)
           - 2.0 * ctx.int_nu(ctx.weight.hess_g * b.grad_sq)
           + 2.0 * ctx.int_nu(b.dot_ug_sq))
    return [_eq("first-elimination", lhs, rhs)]


def _plane_elim2(ctx):
    b = ctx.b
    lhs = ctx.int_nu(ctx.q_lm * b.dot_ug)
    rhs = (ctx.int_nu(b.hess11 * b.dot_ug)
           - 0.5 * ctx.int_nu(b.lap * b.dot_ug)
           - 0.25 * ctx.int_nu(b.grad_sq * b.dot_ug))
    return [_eq("second-elimination", lhs, rhs)]


def _plane_elim3(ctx):
    b = ctx.b
    lhs = -0.5 * ctx.int_nu(b.grad_sq * b.dot_ug)
    rhs = (-2.0 * ctx.int_nu(b.hess11 * b.dot_ug)
           + ctx.int_nu(b.grad_sq * (ctx.weight.grad_g_sq_nodes
                                     - ctx.weight.lap_g)))
    return [_eq("third-elimination", lhs, rhs)]


def _plane_abc(ctx):
    b, w = ctx.b, ctx.weight
    t_dot = ctx.int_nu(b.lap * b.dot_ug)
    t_gdot = ctx.int_nu(b.grad_sq * b.dot_ug)
    t_hu = ctx.int_nu(b.hess11 * b.dot_ug)
    t_hg = ctx.int_nu(w.hess_g * b.grad_sq)
    t_dot2 = ctx.int_nu(b.dot_ug_sq)
    t_lm = ctx.int_nu(ctx.q_lm * b.dot_ug)
    t_gg = ctx.int_nu(b.grad_sq * (w.grad_g_sq_nodes - w.lap_g))
    return [
        _eq("a", t_dot, t_gg - 2.0 * t_lm),
        _eq("b", t_gdot,
            4.0 * t_hg - 4.0 * t_dot2 - 8.0 * t_lm + 6.0 * t_gg),
        _eq("c", t_hu, t_hg - t_dot2 - 2.0 * t_lm + 2.0 * t_gg),
    ]


def _plane_d_e(ctx):
    b = ctx.b
    h_sq = b.hess11 ** 2 + b.hess22 ** 2
    return [
        _pointwise("trace-free-hessian", b.L_normsq, h_sq - 0.5 * b.lap ** 2),
        _pointwise("gradient-tensor", b.M_normsq, 0.5 * b.grad_sq ** 2),
    ]


def _plane_ipp1(ctx):
    b, w = ctx.b, ctx.weight
    lhs = ctx.int_nu(b.lap * b.grad_sq)
    rhs = (-ctx.int_nu(b.LM_inner)
           + 0.5 * ctx.int_nu(b.M_normsq)
           + 2.0 * ctx.int_nu(w.hess_g * b.grad_sq)
           - 2.0 * ctx.int_nu(b.dot_ug_sq)
           - 4.0 * ctx.int_nu(ctx.q_lm * b.dot_ug)
           + 3.0 * ctx.int_nu(b.grad_sq * (w.grad_g_sq_nodes - w.lap_g)))
    return [_eq("first-parts", lhs, rhs)]


def _plane_ipp2(ctx):
    b, w = ctx.b, ctx.weight
    lhs = ctx.int_nu(ctx.lap_grad_sq)
    rhs = (-0.5 * ctx.int_nu(b.lap * b.grad_sq)
           + 0.25 * ctx.int_nu(b.grad_sq ** 2)
           + ctx.int_nu(b.grad_sq * (w.grad_g_sq_nodes - w.lap_g))
           + ctx.int_nu(b.grad_sq * b.dot_ug))
    return [_eq("second-parts", lhs, rhs)]


def _plane_deltau2(ctx):
    b, w = ctx.b, ctx.weight
    lhs = ctx.int_nu(b.lap ** 2)
    rhs = (2.0 * ctx.int_nu(b.L_normsq)
           - 1.5 * ctx.int_nu(b.LM_inner)
           + 0.25 * ctx.int_nu(b.M_normsq)
           - 2.0 * ctx.int_nu(ctx.q_lm * b.dot_ug)
           - ctx.int_nu(w.hess_g * b.grad_sq)
           + ctx.int_nu(b.dot_ug_sq)
           - 0.5 * ctx.int_nu(b.grad_sq * (w.grad_g_sq_nodes - w.lap_g)))
    return [_eq("laplacian-square", lhs, rhs)]


def _plane_i_zero(ctx):
    b = ctx.b
    boundary_free = (2.0 * ctx.int_nu(b.lap ** 2)
                     + ctx.int_nu(b.lap * b.grad_sq))
    drive = 16.0 * np.pi * ctx.lam * integrate(
        ctx.geom, b.grad_sq * ctx.half_density)
    return [_eq("el-balance", boundary_free, drive)]


def _plane_final(ctx):
    b, w = ctx.b, ctx.weight
    lhs = 4.0 * ctx.int_nu(b.LMN_normsq)
    bracket = ((w.lap_g + w.grad_g_sq_nodes - b.omega_g_sq) / w.density
               + 8.0 * np.pi * ctx.lam)
    rhs = 2.0 * integrate(ctx.geom,
                          bracket * b.grad_sq * ctx.half_density)
    return [_eq("remainder-decomposition", lhs, rhs)]


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class IdentitySpec:
    identity_id: str
    geometry: str
    kind: str  # "equality", "pointwise", "inequality"
    needs_el: bool
    evaluator: object
    summary: str


_SPECS = [
    IdentitySpec("ALG_HESSIAN_SPLIT", "any", "pointwise", False,
                 _alg_hessian_split,
                 "squared Hessian norm splits into trace-free part plus "
                 "Laplacian square over dimension"),
    IdentitySpec("ALG_M_NORM", "any-2d", "pointwise", False, _alg_m_norm,
                 "gradient-tensor norm equals (1 - 1/d) |grad u|^4"),
    IdentitySpec("SPHERE_BLW_POINTWISE", SPHERE, "pointwise", False,
                 _sphere_blw_pointwise,
                 "curvature commutation formula for half the Laplacian of "
                 "|grad u|^2"),
    IdentitySpec("SPHERE_IBP", SPHERE, "equality", False, _sphere_ibp,
                 "cubic gradient term reduced to quartic and tensor terms "
                 "under e^{-u/2}"),
    IdentitySpec("SPHERE_BLW_INTEGRAL", SPHERE, "equality", False,
                 _sphere_blw_integral,
                 "integrated curvature formula for the Laplacian square"),
    IdentitySpec("POINCARE_SLACK", SPHERE, "inequality", False,
                 _poincare_slack,
                 "spectral-gap lower bound on the Laplacian square"),
    IdentitySpec("CIRCLE_INTPARTS", CIRCLE, "equality", False,
                 _circle_intparts,
                 "periodic integration by parts for the cubic term"),
    IdentitySpec("CIRCLE_EL_IDENTITY", CIRCLE, "equality", True,
                 _circle_el_identity,
                 "energy balance at a periodic Euler-Lagrange solution"),
    IdentitySpec("CIRCLE_SPECTRAL", CIRCLE, "inequality", False,
                 _circle_spectral,
                 "spectral-gap bound with the quartic correction"),
    IdentitySpec("PLANE_ELIM1", PLANE, "equality", False, _plane_elim1,
                 "first weighted elimination of mixed slope terms"),
    IdentitySpec("PLANE_ELIM2", PLANE, "equality", False, _plane_elim2,
                 "tensor contraction expanded against grad u x grad g"),
    IdentitySpec("PLANE_ELIM3", PLANE, "equality", False, _plane_elim3,
                 "weight-slope elimination through the measure"),
    IdentitySpec("PLANE_ABC", PLANE, "equality", False, _plane_abc,
                 "the three solved elimination relations"),
    IdentitySpec("PLANE_D_E", PLANE, "pointwise", False, _plane_d_e,
                 "plane specializations of the tensor norms"),
    IdentitySpec("PLANE_IPP1", PLANE, "equality", False, _plane_ipp1,
                 "cubic term reduction in the weighted measure"),
    IdentitySpec("PLANE_IPP2", PLANE, "equality", False, _plane_ipp2,
                 "double integration by parts of the Laplacian of "
                 "|grad u|^2"),
    IdentitySpec("PLANE_DELTAU2", PLANE, "equality", False, _plane_deltau2,
                 "Laplacian square resolved into tensor and weight terms"),
    IdentitySpec("PLANE_I_ZERO", PLANE, "equality", True, _plane_i_zero,
                 "vanishing combination at a weighted Euler-Lagrange "
                 "solution"),
    IdentitySpec("PLANE_FINAL", PLANE, "equality", True, _plane_final,
                 "remainder decomposition at a weighted Euler-Lagrange "
                 "solution"),
]

REGISTRY = {spec.identity_id: spec for spec in _SPECS}

SUITES = {
    "circle": ["ALG_HESSIAN_SPLIT", "CIRCLE_INTPARTS", "CIRCLE_SPECTRAL"],
    "sphere": ["ALG_HESSIAN_SPLIT", "ALG_M_NORM", "SPHERE_BLW_POINTWISE",
               "SPHERE_IBP", "SPHERE_BLW_INTEGRAL", "POINCARE_SLACK"],
    "plane": ["ALG_HESSIAN_SPLIT", "ALG_M_NORM", "PLANE_ELIM1",
              "PLANE_ELIM2", "PLANE_ELIM3", "PLANE_ABC", "PLANE_D_E",
              "PLANE_IPP1", "PLANE_IPP2", "PLANE_DELTAU2"],
}

SUITE_GEOMETRY = {
    "circle": dict(kind="circle", n=256),
    "sphere": dict(kind="sphere", n=256),
    "plane": dict(kind="plane", n=2048, radius=20.0),
}

SUITE_TOL = {"circle": 1e-8, "sphere": 1e-7, "plane": 1e-5}


@dataclass
class IdentityReport:
    """Outcome of one identity check on one field."""

    identity_id: str
    geometry: str
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    passed: bool
    kind: str
    tol: float
    component: str = ""
    note: str = ""
    seed: object = None
    trial: int = -1

    def row(self):
        seed = "" if self.seed is None else str(self.seed)
        return [self.identity_id, self.geometry, seed, self.trial,
                repr(self.lhs), repr(self.rhs), repr(self.rel_err),
                "true" if self.passed else "false"]


def _kind_matches(spec, geometry):
    if spec.geometry == "any":
        return True
    if spec.geometry == "any-2d":
        return geometry.dim == 2
    return geometry.kind == spec.geometry


def _build_context(spec, geometry, field_or_solution, weight):
    lam = None
    if spec.needs_el:
        sol = field_or_solution
        if not (hasattr(sol, "solution") and hasattr(sol, "lam")):
            raise NeedsSolutionError(
                f"{spec.identity_id} holds at Euler-Lagrange solutions; pass "
                "a solver output, not a raw field")
        lam = float(sol.lam)
        field = sol.solution
        if weight is None:
            weight = getattr(sol, "weight", None)
    else:
        field = field_or_solution
        if isinstance(field, ScalarField):
            pass
        else:
            field = np.asarray(field, dtype=float)
    if geometry.kind == PLANE and weight is None:
        weight = stereographic_log_weight(geometry)
    if geometry.kind == PLANE:
        if not hasattr(weight, "grad_g_sq_nodes"):
            weight.grad_g_sq_nodes = np.asarray(weight.dg) ** 2
        bundle = differentiate(geometry, field, weight=weight)
    else:
        bundle = differentiate(geometry, field)
    return _Context(geometry, bundle, weight, lam)


def verify_identity(identity_id, geometry, field_or_solution, tol,
                    weight=None):
    """Check one registered identity and return an IdentityReport.

    ``field_or_solution`` is a ScalarField or node-value array for plain
    identities, and a solver output (an object with ``solution`` and ``lam``
    attributes) for identities that hold only at Euler-Lagrange solutions.
    Plane identities default to the stereographic log-weight when no
    ``weight`` is supplied.
    """
    try:
        spec = REGISTRY[identity_id]
    except KeyError:
        raise InvalidParameterError(
            f"unknown identity {identity_id!r}") from None
    if not _kind_matches(spec, geometry):
        raise UnsupportedGeometryError(
            f"{identity_id} is defined on {spec.geometry}, not "
            f"{geometry.kind}")
    ctx = _build_context(spec, geometry, field_or_solution, weight)
    parts = spec.evaluator(ctx)

    worst = None
    for part in parts:
        scale = max(abs(part.lhs), abs(part.rhs), REL_FLOOR)
        rel = part.abs_err / scale
        if worst is None or rel > worst[0]:
            worst = (rel, part)
    rel_err, part = worst
    note = ""
    if geometry.kind == PLANE and spec.kind != "pointwise":
        note = f"domain truncated at R={geometry.radius:g}"
    return IdentityReport(
        identity_id=identity_id,
        geometry=geometry.kind,
        lhs=part.lhs,
        rhs=part.rhs,
        abs_err=part.abs_err,
        rel_err=rel_err,
        passed=bool(rel_err <= tol),
        kind=spec.kind,
        tol=float(tol),
        component=part.name if len(parts) > 1 else "",
        note=note,
    )


@dataclass
class SuiteSummary:
    suite: str
    trials: int
    seed: int
    tol: float
    total: int
    passed: int
    failed: int
    worst_rel_err: float
    worst_identity: str
    reports: list = dc_field(repr=False, default_factory=list)

    @property
    def all_passed(self):
        return self.failed == 0


def _suite_names(suite_name):
    if suite_name == "all":
        return ["circle", "sphere", "plane"]
    if suite_name not in SUITES:
        raise InvalidParameterError(
            f"unknown suite {suite_name!r}; pick circle, sphere, plane or all")
    return [suite_name]


def run_suite(suite_name, trials=32, seed=7, tol=None, geometry_overrides=None,
              modes=32, trial_indices=None):
    """Run every applicable identity on ``trials`` random fields.

    Fields are band-limited to ``modes``, deterministic in ``seed`` (trial i
    uses the spawn [seed, i]), and identical across identities within a
    trial.  The default tolerance and resolution per geometry follow the
    suite table; ``geometry_overrides`` may replace resolution parameters,
    which the convergence probe uses.  ``trial_indices`` restricts the run
    to the listed trial numbers without changing their seeds, so trials
    can be sharded across worker processes.  Returns a SuiteSummary whose
    ``reports`` list is ordered by (geometry, trial, registry order).
    """
    trials = int(trials)
    if trials <= 0:
        raise InvalidParameterError("trials must be positive")
    indices = (range(trials) if trial_indices is None
               else [int(t) for t in trial_indices])
    reports = []
    worst = (-1.0, "")
    for name in _suite_names(suite_name):
        params = dict(SUITE_GEOMETRY[name])
        if geometry_overrides:
            params.update(geometry_overrides)
        kind = params.pop("kind")
        geometry = build_geometry(kind, params.pop("n"), **params)
        suite_tol = SUITE_TOL[name] if tol is None else float(tol)
        weight = (inverse_stereographic_log_weight(geometry)
                  if geometry.kind == PLANE else None)
        for trial in indices:
            fld = random_field(geometry, seed=[seed, trial], modes=modes)
            for identity_id in SUITES[name]:
                rep = verify_identity(identity_id, geometry, fld,
                                      suite_tol, weight=weight)
                rep.seed = seed
                rep.trial = trial
                reports.append(rep)
                if rep.rel_err > worst[0]:
                    worst = (rep.rel_err, identity_id)
    n_passed = sum(1 for r in reports if r.passed)
    return SuiteSummary(
        suite=suite_name,
        trials=trials,
        seed=seed,
        tol=None if tol is None else float(tol),
        total=len(reports),
        passed=n_passed,
        failed=len(reports) - n_passed,
        worst_rel_err=worst[0],
        worst_identity=worst[1],
        reports=reports,
    )


def write_reports_csv(reports, path):
    """Write identity reports as CSV with a fixed column set."""
    header = ["identity_id", "geometry", "seed", "trial", "lhs", "rhs",
              "rel_err", "pass"]
    close = False
    if hasattr(path, "write"):
        fh = path
    else:
        fh = open(path, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rep in reports:
            writer.writerow(rep.row())
    finally:
        if close:
            fh.close()


def convergence_probe(suite_name, n_coarse, trials=4, seed=7,
                      geometry_overrides=None, modes=None):
    """Worst equality rel_err at resolution n and at 2n.

    The same band-limited random fields (band chosen to fit the coarse
    grid) are evaluated at both resolutions, so the drop in the worst
    residual isolates quadrature convergence of the non-polynomial
    integrands.  Returns (worst_at_n, worst_at_2n).
    """
    if suite_name not in SUITES:
        raise InvalidParameterError(
            f"unknown suite {suite_name!r}; pick circle, sphere or plane")
    if modes is None:
        modes = max(6, n_coarse // 2 - 2)
    out = []
    for n in (n_coarse, 2 * n_coarse):
        overrides = dict(geometry_overrides or {})
        overrides["n"] = n
        summary = run_suite(suite_name, trials=trials, seed=seed, tol=1.0,
                            geometry_overrides=overrides, modes=modes)
        worst = 0.0
        for rep in summary.reports:
            if rep.kind == "inequality":
                continue
            worst = max(worst, rep.rel_err)
        out.append(worst)
    return tuple(out)
