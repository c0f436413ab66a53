"""Discretization of the unit sphere S^{2n-1} fibered by the circle action.

The flow z -> e^{2it} z is periodic with period pi; its orbits are the fibers
of the quotient map to complex projective space.  Fields on the sphere are
stored as fiber Fourier coefficients over a set of base representatives, so
averaging along the flow, differentiating along it, and inverting it on
zero-average data are all exact diagonal operations on the coefficients.

Conventions used throughout the package:
  * points are complex vectors z in C^n with |z| = 1; helpers convert to the
    interleaved real coordinates of the symplectic module,
  * the generator of the action is the vector field 2iz, of length 2,
  * covector fields are stored as their metric-dual tangent vector fields
    (the round contact form has dual iz/2),
  * integrals are over the contact volume alpha ^ (d alpha)^{n-1}, total pi^n.
"""

from __future__ import annotations

import math

import numpy as np

from ._poly import homogeneous_exponents
from .config import DEFAULTS
from .symplectic import complex_to_real, real_to_complex


class OffSphereError(ValueError):
    pass


def as_complex(points):
    """Accept complex (..., n) or interleaved real (..., 2n) points."""
    points = np.asarray(points)
    if np.iscomplexobj(points):
        return points.astype(np.complex128)
    return real_to_complex(points)


def check_on_sphere(z, tol: float | None = None):
    tol = DEFAULTS.on_sphere_tol if tol is None else tol
    z = as_complex(z)
    err = np.abs(np.linalg.norm(z, axis=-1) - 1.0)
    worst = float(err.max()) if err.size else 0.0
    if worst > tol:
        raise OffSphereError(f"point off the unit sphere by {worst:.3e}")
    return z


def hopf_flow(z, t):
    """Time-t point of the circle action, exact rotation e^{2it} z."""
    z = check_on_sphere(z)
    t = np.asarray(t, dtype=np.float64)
    phase = np.exp(2j * t)
    return z * phase[..., None] if phase.ndim else z * phase


def reeb_round(z):
    """Generator of the circle action at z (the round Reeb field), 2iz."""
    return 2j * as_complex(z)


def alpha0_dual(z):
    """Metric dual of the round contact form, iz/2."""
    return 0.5j * as_complex(z)


def alpha0_value(v, z):
    """Round contact form on tangent vector v at z: <v, iz>_R / 2."""
    v = as_complex(v)
    z = as_complex(z)
    return 0.5 * np.sum(v.real * (1j * z).real + v.imag * (1j * z).imag, axis=-1)


def hopf_project(z):
    """Quotient map for n = 2, image on the unit 2-sphere."""
    z = as_complex(z)
    if z.shape[-1] != 2:
        raise ValueError("hopf_project is defined for n = 2")
    z1, z2 = z[..., 0], z[..., 1]
    m = z1 * np.conj(z2)
    return np.stack([2.0 * m.real, 2.0 * m.imag,
                     np.abs(z1) ** 2 - np.abs(z2) ** 2], axis=-1)


def hopf_lift(p):
    """One point in the fiber over p in S^2, with a gauge switch near the poles."""
    p = np.asarray(p, dtype=np.float64)
    x, y, u = p[..., 0], p[..., 1], p[..., 2]
    north = u > -0.5
    z = np.empty(p.shape[:-1] + (2,), dtype=np.complex128)
    s1 = np.sqrt(np.clip((1.0 + u) / 2.0, 0.0, 1.0))
    s2 = np.sqrt(np.clip((1.0 - u) / 2.0, 0.0, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        zn1 = s1.astype(np.complex128)
        zn2 = np.where(s1 > 0, (x - 1j * y) / np.where(s1 > 0, 2 * s1, 1.0), 0.0)
        zs2 = s2.astype(np.complex128)
        zs1 = np.where(s2 > 0, (x + 1j * y) / np.where(s2 > 0, 2 * s2, 1.0), 0.0)
    z[..., 0] = np.where(north, zn1, zs1)
    z[..., 1] = np.where(north, zn2, zs2)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norm


def fibonacci_sphere(count: int) -> np.ndarray:
    """Equal-area spiral point set on S^2."""
    i = np.arange(count, dtype=np.float64)
    u = 1.0 - 2.0 * (i + 0.5) / count
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    phi = 2.0 * math.pi * i / golden
    r = np.sqrt(np.clip(1.0 - u * u, 0.0, 1.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), u], axis=-1)


def fiber_circle(z, count: int | None = None):
    """Sample points of the fiber through z."""
    count = DEFAULTS.orbit_sample_count if count is None else count
    thetas = np.arange(count) * math.pi / count
    return np.exp(2j * thetas)[:, None] * as_complex(z)[None, :]


def base_chart(z):
    """Affine chart data for n = 2: (0, z2/z1) where |z1| >= |z2|, else (1, z1/z2)."""
    z = as_complex(z)
    if z.shape[-1] != 2:
        raise ValueError("charts implemented for n = 2")
    if abs(z[0]) >= abs(z[1]):
        return 0, complex(z[1] / z[0])
    return 1, complex(z[0] / z[1])


def chart_point(chart: int, w: complex) -> np.ndarray:
    """A fiber representative over the chart coordinate w."""
    if chart == 0:
        z = np.array([1.0 + 0j, w])
    elif chart == 1:
        z = np.array([w, 1.0 + 0j])
    else:
        raise ValueError("chart must be 0 or 1")
    return z / np.linalg.norm(z)


def tangent_frames(z):
    """Oriented orthonormal frames (iz, v, iv) with v in the contact plane.

    The contact volume evaluates to the constant 1/2 on these frames, which
    turns pointwise 3-form values into densities by a single division.
    Only defined for n = 2.
    """
    z = as_complex(z)
    if z.shape[-1] != 2:
        raise ValueError("frames implemented for n = 2")
    e1 = np.array([1.0 + 0j, 0.0j])
    e2 = np.array([0.0j, 1.0 + 0j])
    v = e1 - np.sum(np.conj(z) * e1, axis=-1)[..., None] * z
    nv = np.linalg.norm(v, axis=-1)
    alt = e2 - np.sum(np.conj(z) * e2, axis=-1)[..., None] * z
    use_alt = (nv < 0.5)[..., None]
    v = np.where(use_alt, alt, v)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return 1j * z, v, 1j * v


class SphereField:
    """Scalar or tangent-vector field as fiber Fourier data on a grid.

    Coefficient layout: axis 0 runs over base nodes, axis 1 over the fft
    frequencies of the fiber angle (period pi, so frequency m stands for
    e^{2imt}); vector fields carry a trailing complex component axis.
    """

    def __init__(self, grid: "HopfGrid", coeffs: np.ndarray, kind: str):
        if kind not in ("scalar", "vector"):
            raise ValueError("kind must be 'scalar' or 'vector'")
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        expected = (grid.base_count, grid.fiber_modes) if kind == "scalar" \
            else (grid.base_count, grid.fiber_modes, grid.n)
        if coeffs.shape != expected:
            raise ValueError(f"coefficients must have shape {expected}, got {coeffs.shape}")
        self.grid = grid
        self.coeffs = coeffs
        self.kind = kind

    # construction -----------------------------------------------------

    @classmethod
    def from_samples(cls, grid: "HopfGrid", samples, kind: str) -> "SphereField":
        samples = np.asarray(samples)
        coeffs = np.fft.fft(samples, axis=1) / grid.fiber_modes
        return cls(grid, coeffs, kind)

    @classmethod
    def from_callable(cls, grid: "HopfGrid", func, kind: str) -> "SphereField":
        """func maps complex points (..., n) to scalars (...) or vectors (..., n)."""
        vals = func(grid.collocation())
        return cls.from_samples(grid, vals, kind)

    # evaluation -------------------------------------------------------

    def samples(self) -> np.ndarray:
        return np.fft.ifft(self.coeffs * self.grid.fiber_modes, axis=1)

    def real_samples(self, tol: float = 1e-8) -> np.ndarray:
        s = self.samples()
        worst = float(np.abs(s.imag).max()) if s.size else 0.0
        scale = max(1.0, float(np.abs(s.real).max()))
        if worst > tol * scale:
            raise ValueError(f"samples carry imaginary part {worst:.3e}")
        return s.real

    def at_angle(self, theta: float) -> np.ndarray:
        """Evaluate along fibers at an arbitrary angle."""
        phase = np.exp(2j * self.grid.frequencies * theta)
        if self.kind == "scalar":
            return np.tensordot(self.coeffs, phase, axes=([1], [0]))
        return np.einsum("bmc,m->bc", self.coeffs, phase)

    # exact fiber operations --------------------------------------------

    def fiber_average(self) -> "SphereField":
        """Average along the circle action.

        Scalars keep mode 0.  Vector fields average in the equivariant
        trivialization, which keeps the raw frequency-one mode: the constant
        mode of e^{-2it} V(e^{2it} z).
        """
        out = np.zeros_like(self.coeffs)
        if self.kind == "scalar":
            out[:, 0] = self.coeffs[:, 0]
        else:
            idx = self.grid.mode_index(1)
            out[:, idx] = self.coeffs[:, idx]
        return SphereField(self.grid, out, self.kind)

    def lie_reeb(self) -> "SphereField":
        """Derivative along the circle generator.

        Scalars: coefficient m picks up 2im.  Vector fields: the Lie bracket
        with the generator adds the -2i rotation term, so mode m picks up
        2i(m - 1).
        """
        m = self.grid.frequencies
        if self.kind == "scalar":
            return SphereField(self.grid, self.coeffs * (2j * m), self.kind)
        return SphereField(self.grid, self.coeffs * (2j * (m - 1))[None, :, None], self.kind)

    def zero_avg_primitive(self, rel_tol: float | None = None) -> "SphereField":
        """Solve (d/dt along the flow) F = self with zero fiber average.

        Requires (and checks) that the input has no invariant component.
        """
        if self.kind != "scalar":
            raise ValueError("primitive implemented for scalar fields")
        rel_tol = DEFAULTS.primitive_mean_rel_tol if rel_tol is None else rel_tol
        scale = float(np.abs(self.coeffs).max())
        mean = float(np.abs(self.coeffs[:, 0]).max())
        if scale > 0 and mean > rel_tol * scale:
            raise ValueError(f"fiber average {mean:.3e} is not negligible against {scale:.3e}")
        m = self.grid.frequencies.astype(np.float64)
        divisor = 2j * m
        divisor[0] = 1.0
        out = self.coeffs / divisor
        out[:, 0] = 0.0
        if self.grid.fiber_modes % 2 == 0:
            # the unpaired Nyquist cosine has no primitive in the band; for
            # real input, keeping it would leak an imaginary part
            out[:, self.grid.fiber_modes // 2] = 0.0
        return SphereField(self.grid, out, self.kind)

    # diagnostics --------------------------------------------------------

    def invariance_residual(self) -> float:
        """Sup norm of the non-invariant part of the samples."""
        return float((self - self.fiber_average()).sup_norm())

    def tangency_residual(self) -> float:
        if self.kind != "vector":
            raise ValueError("tangency applies to vector fields")
        vals = self.samples()
        z = self.grid.collocation()
        radial = np.sum(vals.real * z.real + vals.imag * z.imag, axis=-1)
        return float(np.abs(radial).max())

    def sup_norm(self) -> float:
        s = self.samples()
        if self.kind == "scalar":
            return float(np.abs(s).max())
        return float(np.linalg.norm(s, axis=-1).max())

    def l2_norm(self) -> float:
        s = self.samples()
        mag = np.abs(s) ** 2 if self.kind == "scalar" else np.sum(np.abs(s) ** 2, axis=-1)
        return math.sqrt(max(self.grid.quadrature_samples(mag), 0.0))

    def truncation_estimate(self) -> float:
        """Mass of the highest resolved fiber frequency relative to the total.

        A proxy for aliasing: data band-limited below the Nyquist frequency
        scores at roundoff, a saturated top mode signals an unresolved field.
        """
        mags = np.abs(self.coeffs)
        total = float(mags.max())
        if total == 0.0:
            return 0.0
        top = self.grid.fiber_modes // 2
        idx = np.abs(self.grid.frequencies) == top
        return float(mags[:, idx].max()) / total

    # algebra ------------------------------------------------------------

    def _binary(self, other, op):
        if np.isscalar(other) and self.kind == "scalar":
            # constants live in fiber mode zero
            coeffs = self.coeffs.copy()
            coeffs[:, 0] = op(coeffs[:, 0], other)
            return SphereField(self.grid, coeffs, self.kind)
        if isinstance(other, SphereField):
            if other.kind != self.kind or other.grid is not self.grid:
                raise ValueError("fields must share grid and kind")
            return SphereField(self.grid, op(self.coeffs, other.coeffs), self.kind)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (self - other) * (-1.0)

    def __mul__(self, factor):
        if np.isscalar(factor):
            return SphereField(self.grid, self.coeffs * factor, self.kind)
        if isinstance(factor, SphereField):
            # one factor must be scalar; reflected dispatch never fires for
            # same-type operands, so handle both orders here
            if factor.kind == "scalar":
                scal, other = factor, self
            elif self.kind == "scalar":
                scal, other = self, factor
            else:
                raise ValueError("cannot multiply two vector fields")
            s = scal.samples()
            o = other.samples()
            prod = o * s if other.kind == "scalar" else o * s[..., None]
            return SphereField.from_samples(self.grid, prod, other.kind)
        return NotImplemented

    __rmul__ = __mul__

    def contract(self, vector_field: "SphereField") -> "SphereField":
        """Real inner product against another vector field, as a scalar field.

        With covectors stored as dual vectors this is covector-vector pairing.
        """
        if self.kind != "vector" or vector_field.kind != "vector":
            raise ValueError("contract needs two vector fields")
        a = self.samples()
        b = vector_field.samples()
        vals = np.sum(a.real * b.real + a.imag * b.imag, axis=-1)
        return SphereField.from_samples(self.grid, vals, "scalar")

    def to_json_dict(self) -> dict:
        g = self.grid
        return {
            "base_nodes": [[float(c.real), float(c.imag)] for c in g.base_points.reshape(-1)],
            "weights": [float(w) for w in g.weights],
            "fiber_modes": int(g.fiber_modes),
            "kind": self.kind,
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coeffs.reshape(-1)],
        }


class HopfGrid:
    """Base representatives plus uniform fiber angles on S^{2n-1}.

    For n = 2 the base set is an equal-area Fibonacci family on the quotient
    2-sphere, lifted through a fixed gauge; quadrature weights make the
    constant integrate to the exact contact volume pi^n.  For n > 2 the
    representatives come from a seeded Sobol sequence pushed to the sphere;
    only averaging and quadrature contracts are supported there.
    """

    def __init__(self, n: int = 2, base_nodes: int | None = None,
                 fiber_modes: int | None = None, base_poly_degree: int | None = None,
                 seed: int = 0):
        base_nodes = DEFAULTS.base_nodes if base_nodes is None else base_nodes
        fiber_modes = DEFAULTS.fiber_modes if fiber_modes is None else fiber_modes
        if n < 2:
            raise ValueError("need n >= 2")
        if fiber_modes < 4 or fiber_modes % 2:
            raise ValueError("fiber_modes must be even and at least 4")
        self.n = n
        self.base_count = int(base_nodes)
        self.fiber_modes = int(fiber_modes)
        self.base_poly_degree = DEFAULTS.base_poly_degree if base_poly_degree is None \
            else base_poly_degree
        self.seed = seed
        if n == 2:
            self.base_s2 = fibonacci_sphere(self.base_count)
            self.base_points = hopf_lift(self.base_s2)
            self.weights = np.full(self.base_count, math.pi / self.base_count)
        else:
            from scipy.stats import qmc
            from scipy.special import ndtri
            sob = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
            u = sob.random(self.base_count)
            g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
            z = g[:, 0::2] + 1j * g[:, 1::2]
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            self.base_s2 = None
            self.base_points = z
            self.weights = np.full(self.base_count, math.pi ** (n - 1) / self.base_count)
        self.thetas = np.arange(self.fiber_modes) * math.pi / self.fiber_modes
        self.frequencies = np.fft.fftfreq(self.fiber_modes, d=1.0 / self.fiber_modes).astype(int)
        self._collocation = None
        self._interpolant = None

    def mode_index(self, m: int) -> int:
        idx = np.nonzero(self.frequencies == m)[0]
        if idx.size != 1:
            raise ValueError(f"frequency {m} not representable with {self.fiber_modes} modes")
        return int(idx[0])

    def collocation(self) -> np.ndarray:
        if self._collocation is None:
            phase = np.exp(2j * self.thetas)
            self._collocation = phase[None, :, None] * self.base_points[:, None, :]
        return self._collocation

    def collocation_real(self) -> np.ndarray:
        return complex_to_real(self.collocation())

    # quadrature ---------------------------------------------------------

    def quadrature_samples(self, samples) -> float:
        """Integrate fiber-sampled scalar data against the contact volume."""
        samples = np.asarray(samples)
        fiber_mean = samples.mean(axis=1)
        if np.iscomplexobj(fiber_mean):
            fiber_mean = fiber_mean.real
        return float(np.sum(self.weights * math.pi * fiber_mean))

    def quadrature(self, field) -> float:
        """Integrate a scalar field, callable, or sample array."""
        if isinstance(field, SphereField):
            if field.kind != "scalar":
                raise ValueError("quadrature integrates scalar fields")
            vals = field.coeffs[:, 0].real
            return float(np.sum(self.weights * math.pi * vals))
        if callable(field):
            return self.quadrature_samples(np.asarray(field(self.collocation()), dtype=np.float64))
        return self.quadrature_samples(field)

    # interpolation -------------------------------------------------------

    @property
    def interpolant(self) -> "SphereInterpolant":
        if self.n != 2:
            raise NotImplementedError("global interpolant implemented for n = 2")
        if self._interpolant is None:
            self._interpolant = SphereInterpolant(self)
        return self._interpolant

    def field_from_json_dict(self, d: dict) -> SphereField:
        coeffs = np.array([c[0] + 1j * c[1] for c in d["coefficients"]])
        kind = d.get("kind", "scalar")
        shape = (self.base_count, self.fiber_modes) if kind == "scalar" \
            else (self.base_count, self.fiber_modes, self.n)
        return SphereField(self, coeffs.reshape(shape), kind)


class SphereInterpolant:
    """Global least-squares polynomial representation of grid data.

    The basis is every ambient monomial of homogeneous degree D-1 or D in the
    four real coordinates.  Restricted to the sphere these span all
    polynomials of degree <= D (multiply lower-degree terms by powers of
    |z|^2 = 1), and no nonzero combination vanishes identically, so the
    design matrix has full column rank.  The QR factorization is cached;
    fitting extra right-hand sides costs one triangular solve each.
    """

    def __init__(self, grid: HopfGrid):
        d = grid.base_poly_degree
        if d < 2:
            raise ValueError("need polynomial degree >= 2")
        self.grid = grid
        self.exponents = np.array(homogeneous_exponents(4, d)
                                  + homogeneous_exponents(4, d - 1), dtype=np.int64)
        pts = grid.collocation_real().reshape(-1, 4)
        self._design_points = pts
        a = _monomial_matrix(pts, self.exponents)
        self._q, self._r = np.linalg.qr(a)
        self.condition = float(np.linalg.cond(self._r))

    @property
    def basis_size(self) -> int:
        return self.exponents.shape[0]

    def fit(self, samples) -> "PolyOnSphere":
        """samples: real array (B, T, ...) over collocation, or flat (B*T, ...)."""
        samples = np.asarray(samples, dtype=np.float64)
        flat = samples.reshape(self._design_points.shape[0], -1)
        coeff = np.linalg.solve(self._r, self._q.T @ flat)
        misfit = float(np.abs(self._design_points_eval(coeff) - flat).max())
        return PolyOnSphere(self.exponents, coeff, samples.shape[2:] if samples.ndim > 2 else (),
                            misfit)

    def _design_points_eval(self, coeff):
        return _monomial_matrix(self._design_points, self.exponents) @ coeff


class PolyOnSphere:
    """Fitted polynomial with analytic ambient gradient."""

    def __init__(self, exponents, coeff, value_shape, misfit):
        self.exponents = exponents
        self.coeff = coeff  # (M, prod(value_shape) or 1)
        self.value_shape = value_shape
        self.misfit = misfit

    def value(self, pts_real):
        pts = np.asarray(pts_real, dtype=np.float64)
        flat = pts.reshape(-1, 4)
        out = _monomial_matrix(flat, self.exponents) @ self.coeff
        if self.value_shape:
            return out.reshape(pts.shape[:-1] + self.value_shape)
        return out.reshape(pts.shape[:-1])

    def gradient(self, pts_real):
        """Ambient gradient, shape pts[:-1] + (4,) + value_shape."""
        pts = np.asarray(pts_real, dtype=np.float64)
        flat = pts.reshape(-1, 4)
        grads = _monomial_gradient(flat, self.exponents)  # (P, 4, M)
        out = np.einsum("pim,mv->piv", grads, self.coeff)
        if self.value_shape:
            return out.reshape(pts.shape[:-1] + (4,) + self.value_shape)
        return out.reshape(pts.shape[:-1] + (4,))

    def tangential_gradient(self, pts_real):
        """Gradient with the radial component removed (points assumed unit)."""
        pts = np.asarray(pts_real, dtype=np.float64)
        g = self.gradient(pts)
        if g.shape == pts.shape:  # scalar values
            radial = np.einsum("...i,...i->...", g, pts)
            return g - radial[..., None] * pts
        rad = np.einsum("...iv,...i->...v", g, pts)
        return g - rad[..., None, :] * pts[..., :, None]


def _power_tables(pts, max_deg):
    return [np.vander(pts[:, c], max_deg + 1, increasing=True) for c in range(pts.shape[1])]


def _monomial_matrix(pts, exponents):
    max_deg = int(exponents.max())
    pw = _power_tables(pts, max_deg)
    cols = np.empty((pts.shape[0], exponents.shape[0]))
    for m, e in enumerate(exponents):
        col = pw[0][:, e[0]]
        for c in range(1, len(e)):
            if e[c]:
                col = col * pw[c][:, e[c]]
        cols[:, m] = col
    return cols


def _monomial_gradient(pts, exponents):
    max_deg = int(exponents.max())
    pw = _power_tables(pts, max_deg)
    out = np.zeros((pts.shape[0], pts.shape[1], exponents.shape[0]))
    for m, e in enumerate(exponents):
        for c in range(len(e)):
            if e[c] == 0:
                continue
            col = np.full(pts.shape[0], float(e[c]))
            for c2 in range(len(e)):
                p = e[c2] - 1 if c2 == c else e[c2]
                if p:
                    col = col * pw[c2][:, p]
            out[:, c, m] = col
    return out


def fiber_average(field: SphereField) -> SphereField:
    return field.fiber_average()


def lie_reeb(field: SphereField) -> SphereField:
    return field.lie_reeb()


def zero_avg_primitive(field: SphereField) -> SphereField:
    return field.zero_avg_primitive()
