"""Collocation geometries, quadrature and spectral transforms.

Three one-dimensional spectral discretizations back the toolkit:

* ``circle``: periodic functions on [0, L), equispaced nodes, Fourier basis.
* ``sphere-zonal``: zonal (axisymmetric) functions on a radius-``a`` sphere,
  sampled in t = cos(theta) at Gauss-Legendre nodes, Legendre basis.
* ``plane-radial``: radial functions on the truncated plane r <= R, sampled
  in the even variable xi = r**2 at mapped Gauss-Legendre nodes, Legendre
  basis.

Working in t (respectively xi) keeps every orthonormal-frame quantity
polynomial in the working variable: cot(theta) * u' becomes -t * U_t and
u'/r becomes 2 * dV/dxi.  The node sets exclude the coordinate poles, so no
pole limit and no division by sin(theta) or r ever occurs, and Gauss-Legendre
quadrature of the surface measure stays exact (dA = pi * dxi on the plane).

Quadrature weights are positive and sum to the total measure: L for the
circle, 4*pi*a**2 for the sphere, pi*R**2 for the truncated disk.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from numpy.polynomial import legendre as npleg
from scipy.special import roots_legendre

from .errors import (
    GeometryMismatchError,
    InvalidParameterError,
    ResolutionError,
    UnsupportedGeometryError,
)

CIRCLE = "circle"
SPHERE = "sphere-zonal"
PLANE = "plane-radial"

_KIND_ALIASES = {
    "circle": CIRCLE,
    "sphere": SPHERE,
    "sphere-zonal": SPHERE,
    "plane": PLANE,
    "plane-radial": PLANE,
}

_EPS = np.finfo(float).eps


_TAIL_FLOOR = 1e-14


def _truncate_tail(coeffs, values):
    """Zero the coefficient tail that sits at the analysis noise floor.

    LU-based Legendre analysis leaves absolute roundoff of a few eps times
    sup|u| in modes the field does not actually contain.  Differentiating a
    mode k multiplies it by O(k^2) per derivative (k^4 at interval ends), so
    before differentiation the tail beyond the last mode above a floor of
    1e-14 * sup|u| is dropped: roughly 50 eps, far below any resolved mode
    yet safely above the noise.  Truncating there is a resolution statement,
    not a loss; modes at the floor are indistinguishable from noise on the
    grid.
    """
    scale = np.max(np.abs(values), axis=0, keepdims=True)
    floor = _TAIL_FLOOR * np.maximum(scale, 1e-300)
    mag = np.abs(coeffs)
    # running max from the top: first index whose whole tail is below floor
    env = np.maximum.accumulate(mag[::-1], axis=0)[::-1]
    return np.where(env <= floor, 0.0, coeffs)


def _pad_rows(coeffs, n):
    out = np.zeros((n,) + coeffs.shape[1:], dtype=coeffs.dtype)
    out[: coeffs.shape[0]] = coeffs
    return out


class Geometry:
    """A fixed spectral discretization.

    Attributes
    ----------
    kind : str
        One of ``circle``, ``sphere-zonal``, ``plane-radial``.
    n : int
        Number of collocation nodes.
    dim : int
        Intrinsic dimension d (1 for the circle, 2 otherwise).
    ricci : float
        Ricci curvature constant rho: 1/a**2 on the sphere, 0 otherwise.
    nodes : ndarray
        Physical coordinate per node (x, theta, or r).
    quad_weights : ndarray
        Positive quadrature weights for the surface measure.
    """

    def __init__(self, kind, n, *, length=None, radius=None, normalization=None,
                 stretch=None):
        if kind not in _KIND_ALIASES:
            raise InvalidParameterError(f"unknown geometry kind {kind!r}")
        kind = _KIND_ALIASES[kind]
        n = int(n)
        if n < 8:
            raise ResolutionError(f"resolution N={n} too small (need N >= 8)")
        self.kind = kind
        self.n = n

        if kind == CIRCLE:
            self.length = 1.0 if length is None else float(length)
            if self.length <= 0:
                raise InvalidParameterError("circle length must be positive")
            self.dim = 1
            self.ricci = 0.0
            self.nodes = self.length * np.arange(n) / n
            self.quad_weights = np.full(n, self.length / n)
            k = np.fft.rfftfreq(n, d=1.0 / n)  # integer wavenumbers
            self._omega = 2.0 * np.pi * k / self.length
            # Nyquist bin cannot represent an odd derivative; zero it there.
            self._omega_odd = self._omega.copy()
            if n % 2 == 0:
                self._omega_odd[-1] = 0.0

        elif kind == SPHERE:
            if radius is not None and normalization is not None:
                raise InvalidParameterError("give either radius or normalization")
            if normalization is None and radius is None:
                normalization = "unit-radius"
            if normalization is not None:
                if normalization == "unit-radius":
                    radius = 1.0
                elif normalization == "unit-volume":
                    radius = 1.0 / np.sqrt(4.0 * np.pi)
                else:
                    raise InvalidParameterError(
                        f"unknown normalization {normalization!r}")
            self.radius = float(radius)
            if self.radius <= 0:
                raise InvalidParameterError("sphere radius must be positive")
            self.normalization = normalization
            self.dim = 2
            self.ricci = 1.0 / self.radius**2
            t, w = roots_legendre(n)
            t, w = t[::-1].copy(), w[::-1].copy()  # ascending theta
            self._t = t
            self.nodes = np.arccos(t)
            self.quad_weights = 2.0 * np.pi * self.radius**2 * w
            self._build_legendre(t, w)

        else:  # PLANE
            self.radius = 20.0 if radius is None else float(radius)
            if self.radius <= 0:
                raise InvalidParameterError("truncation radius must be positive")
            # Default node clustering toward the origin, where e^{-g} mass
            # and the fields of interest concentrate; -0.7 cuts the sup
            # error of second derivatives by about three orders at R = 20.
            stretch = -0.7 if stretch is None else float(stretch)
            if not -1.0 < stretch < 1.0:
                raise InvalidParameterError("stretch must lie in (-1, 1)")
            self.stretch = stretch
            self.dim = 2
            self.ricci = 0.0
            s, w = roots_legendre(n)
            g = self.stretch
            if g != 0.0:
                warped = (s + g) / (1.0 + g * s)
                jac = (1.0 - g * g) / (1.0 + g * s) ** 2
                jac2 = -2.0 * g * (1.0 - g * g) / (1.0 + g * s) ** 3
            else:
                warped = s
                jac = np.ones_like(s)
                jac2 = np.zeros_like(s)
            half = self.radius**2 / 2.0
            self._s = s
            self._xi = half * (1.0 + warped)
            self._dxi_ds = half * jac
            self._d2xi_ds2 = half * jac2
            self.nodes = np.sqrt(self._xi)
            self.quad_weights = np.pi * self._dxi_ds * w
            self._build_legendre(s, w)

    def _build_legendre(self, x, w):
        # Analysis goes through an LU solve of the Vandermonde system rather
        # than the quadrature-weighted transpose: the (2k+1)/2 row scaling of
        # the latter amplifies roundoff in high modes far past the round-trip
        # budget, while the Vandermonde matrix at Gauss nodes is mildly
        # conditioned (about sqrt(N)).
        V = npleg.legvander(x, self.n - 1)
        self._V = V
        self._lu = scipy.linalg.lu_factor(V)

    def _analyze(self, values):
        return scipy.linalg.lu_solve(self._lu, values)

    # -- transforms --------------------------------------------------------

    def to_coeffs(self, values):
        """Spectral coefficients of node values (rfft bins or Legendre modes)."""
        values = np.asarray(values, dtype=float)
        if self.kind == CIRCLE:
            return np.fft.rfft(values, axis=0)
        return self._analyze(values)

    def to_values(self, coeffs):
        """Node values of a coefficient vector."""
        coeffs = np.asarray(coeffs)
        if self.kind == CIRCLE:
            return np.fft.irfft(coeffs, n=self.n, axis=0)
        return self._V @ coeffs

    def tail_energy_fraction(self, values):
        """Fraction of coefficient energy in the top eighth of the spectrum."""
        c = self.to_coeffs(values)
        mag2 = np.abs(c) ** 2
        cut = max(1, (7 * c.shape[0]) // 8)
        total = mag2.sum(axis=0)
        tail = mag2[cut:].sum(axis=0)
        return tail / np.maximum(total, 1e-300)

    # -- derivatives -------------------------------------------------------

    def _legendre_derivs(self, values):
        c = _truncate_tail(self._analyze(values), values)
        c1 = _pad_rows(npleg.legder(c, 1), self.n)
        c2 = _pad_rows(npleg.legder(c, 2), self.n)
        return self._V @ c1, self._V @ c2

    def frame_derivatives(self, values):
        """First derivative and orthonormal-frame Hessian diagonal.

        Returns (du, h11, h22): the frame component of the gradient and the
        two diagonal Hessian entries.  h22 is None on the circle (d = 1).
        Accepts a vector of node values or a matrix of columns.
        """
        values = np.asarray(values, dtype=float)
        if self.kind == CIRCLE:
            c = np.fft.rfft(values, axis=0)
            c = np.where(np.abs(c) <= 1e-14 * np.abs(c).max(axis=0, keepdims=True), 0.0, c)
            om = self._omega if values.ndim == 1 else self._omega[:, None]
            om_odd = self._omega_odd if values.ndim == 1 else self._omega_odd[:, None]
            du = np.fft.irfft(1j * om_odd * c, n=self.n, axis=0)
            d2 = np.fft.irfft(-(om**2) * c, n=self.n, axis=0)
            return du, d2, None
        ut, utt = self._legendre_derivs(values)
        if self.kind == SPHERE:
            t = self._t if values.ndim == 1 else self._t[:, None]
            a2 = self.radius**2
            du = -np.sqrt(1.0 - t**2) * ut / self.radius
            h11 = ((1.0 - t**2) * utt - t * ut) / a2
            h22 = (-t * ut) / a2
            return du, h11, h22
        # plane: ut, utt are derivatives in the collocation variable s
        js = self._dxi_ds if values.ndim == 1 else self._dxi_ds[:, None]
        jss = self._d2xi_ds2 if values.ndim == 1 else self._d2xi_ds2[:, None]
        xi = self._xi if values.ndim == 1 else self._xi[:, None]
        r = self.nodes if values.ndim == 1 else self.nodes[:, None]
        vxi = ut / js
        vxixi = (utt - vxi * jss) / js**2
        du = 2.0 * r * vxi
        h11 = 2.0 * vxi + 4.0 * xi * vxixi
        h22 = 2.0 * vxi
        return du, h11, h22

    def frame_d1(self, values):
        """First-derivative frame component (u', u_theta/a, or u_r)."""
        return self.frame_derivatives(values)[0]

    def laplacian(self, values):
        """Laplace-Beltrami operator applied to node values."""
        du, h11, h22 = self.frame_derivatives(values)
        return h11 if h22 is None else h11 + h22

    def laplacian_matrix(self):
        """Dense collocation matrix of the Laplace-Beltrami operator.

        Built once per geometry (columns are the operator applied to the
        standard basis) and cached; solvers use it for Jacobians and the
        spectrum."""
        mat = getattr(self, "_lap_mat", None)
        if mat is None:
            mat = self.laplacian(np.eye(self.n))
            self._lap_mat = mat
        return mat

    # -- misc --------------------------------------------------------------

    def evaluate_at(self, values, coordinate):
        """Evaluate the spectral interpolant at arbitrary physical points."""
        coordinate = np.asarray(coordinate, dtype=float)
        c = self.to_coeffs(values)
        if self.kind == CIRCLE:
            # direct Fourier sum
            k = np.arange(c.shape[0])
            phase = np.exp(2j * np.pi * np.outer(coordinate / self.length, k))
            scale = np.full(c.shape[0], 2.0)
            scale[0] = 1.0
            if self.n % 2 == 0:
                scale[-1] = 1.0
            return (phase @ (scale * c)).real / self.n
        if self.kind == SPHERE:
            x = np.cos(coordinate)
        else:
            xi = coordinate**2
            g = self.stretch
            t = 2.0 * xi / self.radius**2 - 1.0
            x = t if g == 0.0 else (t - g) / (1.0 - g * t)
        return npleg.legval(x, c)

    def same_discretization(self, other):
        if self.kind != other.kind or self.n != other.n:
            return False
        return np.allclose(self.nodes, other.nodes, rtol=1e-12, atol=1e-12)

    def __repr__(self):
        if self.kind == CIRCLE:
            return f"Geometry(circle, N={self.n}, L={self.length})"
        if self.kind == SPHERE:
            return f"Geometry(sphere-zonal, N={self.n}, a={self.radius})"
        return (f"Geometry(plane-radial, N={self.n}, R={self.radius}, "
                f"stretch={self.stretch})")


def build_geometry(kind, n, **params):
    """Construct a :class:`Geometry`.

    Parameters
    ----------
    kind : str
        ``circle`` (params: length, default 1), ``sphere-zonal`` (params:
        radius or normalization in {unit-radius, unit-volume}), or
        ``plane-radial`` (params: radius = truncation R, default 20;
        stretch in (-1, 1), default -0.7, clustering nodes near the origin).
    n : int
        Number of nodes (N >= 8).
    """
    return Geometry(kind, n, **params)


class ScalarField:
    """Node values plus spectral coefficients on a fixed geometry."""

    def __init__(self, geometry, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (geometry.n,):
            raise GeometryMismatchError(
                f"field shape {values.shape} does not match N={geometry.n}")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("field values must be finite")
        self.geometry = geometry
        self.values = values
        self.coeffs = geometry.to_coeffs(values)

    @classmethod
    def from_function(cls, geometry, fn):
        return cls(geometry, np.asarray(fn(geometry.nodes), dtype=float)
                   + np.zeros(geometry.n))

    @classmethod
    def from_coeffs(cls, geometry, coeffs):
        return cls(geometry, geometry.to_values(coeffs))

    def roundtrip_error(self):
        """Relative value/coefficient round-trip defect."""
        back = self.geometry.to_values(self.coeffs)
        scale = max(np.max(np.abs(self.values)), 1e-300)
        return float(np.max(np.abs(back - self.values)) / scale)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _require_same(self.geometry, other.geometry)
            return ScalarField(self.geometry, self.values + other.values)
        return ScalarField(self.geometry, self.values + other)

    def __mul__(self, scalar):
        return ScalarField(self.geometry, self.values * scalar)

    __rmul__ = __mul__


def _require_same(geom_a, geom_b):
    if geom_a is not geom_b and not geom_a.same_discretization(geom_b):
        raise GeometryMismatchError("arguments live on different geometries")


def integrate(geometry, field):
    """Quadrature of a field (or raw value array) over the geometry."""
    if isinstance(field, ScalarField):
        _require_same(geometry, field.geometry)
        values = field.values
    else:
        values = np.asarray(field, dtype=float)
        if values.shape != (geometry.n,):
            raise GeometryMismatchError(
                f"value array shape {values.shape} does not match N={geometry.n}")
    return float(geometry.quad_weights @ values)


def first_eigenvalue(geometry):
    """Smallest positive eigenvalue of -Laplace-Beltrami on the discretization.

    Closed forms for reference: (2*pi/L)**2 on the circle, 2/a**2 on the
    sphere.  The truncated plane has no discrete spectrum to report.
    """
    if geometry.kind == PLANE:
        raise UnsupportedGeometryError(
            "first_eigenvalue undefined for plane-radial (continuous spectrum)")
    op = -geometry.laplacian_matrix()
    lam = scipy.linalg.eigvals(op)
    lam = np.real(lam[np.abs(np.imag(lam)) < 1e-6 * (1 + np.abs(lam))])
    lam = np.sort(lam)
    top = lam[-1]
    positive = lam[lam > 1e-8 * top]
    if positive.size == 0:
        raise ResolutionError("no positive eigenvalue found")
    return float(positive[0])


def random_field(geometry, seed, modes=32, amplitude=1.0):
    """Band-limited random field with k**-4 coefficient decay.

    Coefficients are i.i.d. normal scaled by k**-4 up to ``modes``; on the
    plane the series (in the mapped variable) is multiplied by the envelope
    (1 + r**2)**-2 so integrands decay across the truncation radius.  The
    result is rescaled to sup-norm ``amplitude``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    modes = int(modes)
    if modes < 1 or modes >= geometry.n:
        raise InvalidParameterError("modes must satisfy 1 <= modes < N")
    if geometry.kind == CIRCLE:
        k = np.arange(1, modes + 1)
        a = rng.standard_normal(modes) / k**4
        b = rng.standard_normal(modes) / k**4
        x = geometry.nodes[:, None] * (2.0 * np.pi / geometry.length)
        values = (np.cos(x * k) @ a) + (np.sin(x * k) @ b)
    elif geometry.kind == SPHERE:
        coeffs = np.zeros(modes + 1)
        coeffs[1:] = rng.standard_normal(modes) / np.arange(1, modes + 1) ** 4
        values = npleg.legval(geometry._t, coeffs)
    else:
        coeffs = rng.standard_normal(modes + 1) / (np.arange(modes + 1) + 1.0) ** 4
        values = npleg.legval(geometry._s, coeffs) / (1.0 + geometry._xi) ** 2
    top = np.max(np.abs(values))
    if top == 0.0:
        raise InvalidParameterError("degenerate random draw")
    return ScalarField(geometry, values * (amplitude / top))


# -- serialization ---------------------------------------------------------

def _geom_header(geometry):
    if geometry.kind == CIRCLE:
        return f"#geom kind=circle N={geometry.n} L={geometry.length!r}"
    if geometry.kind == SPHERE:
        return f"#geom kind=sphere-zonal N={geometry.n} a={geometry.radius!r}"
    return (f"#geom kind=plane-radial N={geometry.n} R={geometry.radius!r} "
            f"stretch={geometry.stretch!r}")


def save_field(field, path):
    """Write a field as CSV: a #geom header line, then node_coordinate,value."""
    lines = [_geom_header(field.geometry), "node_coordinate,value"]
    for x, v in zip(field.geometry.nodes, field.values):
        lines.append(f"{float(x)!r},{float(v)!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def geometry_from_header(line):
    """Rebuild a Geometry from a '#geom ...' header line."""
    if not line.startswith("#geom"):
        raise InvalidParameterError("missing #geom header")
    fields = dict(item.split("=", 1) for item in line.split()[1:])
    kind = fields.pop("kind")
    n = int(fields.pop("N"))
    if kind == "circle":
        return build_geometry(kind, n, length=float(fields["L"]))
    if kind == "sphere-zonal":
        return build_geometry(kind, n, radius=float(fields["a"]))
    if kind == "plane-radial":
        stretch = fields.get("stretch")
        return build_geometry(kind, n, radius=float(fields["R"]),
                              stretch=None if stretch is None else float(stretch))
    raise InvalidParameterError(f"unknown geometry kind {kind!r} in header")


def load_field(path):
    """Read a field written by :func:`save_field`."""
    if hasattr(path, "read"):
        lines = path.read().splitlines()
    else:
        with open(path) as fh:
            lines = fh.read().splitlines()
    geometry = geometry_from_header(lines[0])
    rows = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if rows and rows[0].startswith("node_coordinate"):
        rows = rows[1:]
    data = np.array([[float(p) for p in ln.split(",")] for ln in rows])
    if data.shape != (geometry.n, 2):
        raise InvalidParameterError("field file does not match its header")
    if not np.allclose(data[:, 0], geometry.nodes, rtol=1e-9, atol=1e-12):
        raise InvalidParameterError("node coordinates disagree with geometry")
    return ScalarField(geometry, data[:, 1])
