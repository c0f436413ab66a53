"""Fiberwise normal form of contact forms close to the round sphere.

A contact form near the round one can be written, after a diffeomorphism,
as  S alpha0 + eta + df  where S is invariant under the circle action, eta
annihilates the action generator, and f has zero fiber average.  The three
pieces are recovered here from grid data by exact Fourier operations along
the fibers plus a global polynomial interpolant for the transverse part of
df.  The invariant factor S descends to a function on the quotient; its
critical points label the fibers that survive as closed orbits, with period
pi times the critical value, and that prediction is checked against direct
shooting.

The diffeomorphism itself comes from a corrector scheme on the displacement
field: writing candidate conjugations as u = exp(U) with U a tangent field,
one solves

    P(U)^{-1} du[X0] - h P(U)^{-1} X(u) - V = 0

for (U, V, h) with U of zero fiber average, V invariant and orthogonal to
the generator, h invariant.  Here X is the perturbed Reeb field, X0 the
round one, and P(U) the derivative of the exponential map in its fiber
argument (Jacobi fields, closed form on the round sphere).  The
linearization at (0, 0, 1) is diagonal in fiber Fourier modes, so a
frozen-Jacobian Newton costs one residual evaluation per step.  At a zero
of the residual, h u^*X differs from X0 by a term that averages to zero
along fibers, which is what makes fibers over critical points of the
averaged h into closed orbits of X.

The module also hosts the volume identity: for beta = S alpha0 + eta + df
with eta annihilating the generator, the integral of beta ^ d beta equals
the integral of S^2 alpha0 ^ d alpha0 + 2 dS ^ alpha0 ^ eta + eta ^ d eta,
every discarded term being exact.  Synthetic polynomial fields with exact
derivatives drive that test, including the vanishing of the defect density
built from d(alpha0 ^ eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._poly import AmbientPoly, invariant_quadratics, random_poly
from .config import DEFAULTS
from .hopf import (HopfGrid, SphereField, as_complex, chart_point, fibonacci_sphere,
                   hopf_project, tangent_frames)
from .starshaped import RadialProfile, reeb_field_sphere
from .symplectic import complex_to_real, real_to_complex, standard_j


class InjectivityRadiusError(ValueError):
    pass


class CorrectorStagnationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# splitting


@dataclass
class SplitForm:
    """Components of a covector field on the sphere (stored as dual vectors).

    scale: invariant scalar, the factor in front of the round form
    transverse: dual-vector field annihilating the action generator
    potential: zero-fiber-average scalar whose differential closes the sum
    df: the differential of the potential as a dual-vector field
    """
    grid: HopfGrid
    scale: SphereField
    transverse: SphereField
    potential: SphereField
    df: SphereField
    diagnostics: dict = field(default_factory=dict)

    def reconstruct(self) -> SphereField:
        col = self.grid.collocation()
        alpha = SphereField.from_samples(self.grid, np.broadcast_to(0.5j * col, col.shape),
                                         "vector")
        return self.scale * alpha + self.transverse + self.df

    def scale_bounds(self) -> tuple[float, float]:
        vals = self.scale.coeffs[:, 0].real
        return float(vals.min()), float(vals.max())


def split_form(beta: SphereField, reeb_contraction: SphereField | None = None) -> SplitForm:
    """Split a covector field into invariant, transverse, and exact parts.

    If the caller knows the contraction beta(R0) to better accuracy than
    the stored samples provide (spectral fiber derivative of a pullback,
    say), passing it in makes the fiber bookkeeping exact: the returned
    transverse part annihilates the generator identically on collocation.
    """
    grid = beta.grid
    col = grid.collocation()
    r0 = SphereField.from_samples(grid, np.broadcast_to(2j * col, col.shape), "vector")
    beta_r = reeb_contraction if reeb_contraction is not None else beta.contract(r0)

    scale = beta_r.fiber_average()
    fiber_part = beta_r - scale
    potential = fiber_part.zero_avg_primitive()

    fit = grid.interpolant.fit(potential.real_samples().reshape(-1))
    grad_tan = fit.tangential_gradient(grid.collocation_real().reshape(-1, 4))
    df_vec = real_to_complex(grad_tan).reshape(col.shape)

    # align the fiber component of df with the exact primitive derivative;
    # the correction is a multiple of the generator's dual, so the transverse
    # remainder below annihilates the generator by construction
    fiber_samples = fiber_part.real_samples()
    contraction = np.sum(df_vec.real * (2j * col).real + df_vec.imag * (2j * col).imag,
                         axis=-1)
    fiber_defect = fiber_samples - contraction
    df_vec = df_vec + fiber_defect[..., None] * (0.5j * col)
    df_field = SphereField.from_samples(grid, df_vec, "vector")

    alpha = SphereField.from_samples(grid, np.broadcast_to(0.5j * col, col.shape), "vector")
    eta = beta - scale * alpha - df_field

    eta_reeb = float(np.abs(eta.contract(r0).samples()).max())
    recon = ((scale * alpha + eta + df_field) - beta).sup_norm()
    return SplitForm(
        grid=grid, scale=scale, transverse=eta, potential=potential, df=df_field,
        diagnostics={
            "interpolant_misfit": fit.misfit,
            "fiber_consistency": float(np.abs(fiber_defect).max()),
            "eta_reeb_contraction": eta_reeb,
            "reconstruction": float(recon),
            "scale_invariance": scale.invariance_residual(),
            "beta_tangency": beta.tangency_residual(),
        },
    )


# ---------------------------------------------------------------------------
# the invariant factor on the quotient


class BaseFunction:
    """Invariant scalar as a chartwise function on the quotient surface.

    Wraps the global polynomial fit of the invariant field.  Charts are the
    two affine charts of the quotient for n = 2: the fibers through the
    normalizations of (1, w) and (w, 1).  Chart derivatives are central
    differences of the smooth polynomial.
    """

    def __init__(self, scale: SphereField):
        self.grid = scale.grid
        if self.grid.n != 2:
            raise NotImplementedError("quotient charts implemented for n = 2")
        self.poly = self.grid.interpolant.fit(scale.real_samples().reshape(-1))
        vals = scale.coeffs[:, 0].real
        self.min = float(vals.min())
        self.max = float(vals.max())
        self.lift_residual = self.poly.misfit

    def value_sphere(self, z) -> np.ndarray:
        return self.poly.value(complex_to_real(as_complex(z)))

    def chart_points(self, chart: int, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.complex128)
        flat = w.reshape(-1)
        pts = np.empty(flat.shape + (2,), dtype=np.complex128)
        if chart == 0:
            pts[:, 0] = 1.0
            pts[:, 1] = flat
        elif chart == 1:
            pts[:, 0] = flat
            pts[:, 1] = 1.0
        else:
            raise ValueError("chart must be 0 or 1")
        pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
        return pts.reshape(w.shape + (2,))

    def value(self, chart: int, w) -> np.ndarray:
        return self.poly.value(complex_to_real(self.chart_points(chart, w)))

    def gradient(self, chart: int, w: complex, step: float = 1e-6) -> np.ndarray:
        probes = np.asarray(w) + np.array([step, -step, 1j * step, -1j * step])
        v = self.value(chart, probes)
        return np.array([(v[0] - v[1]) / (2 * step), (v[2] - v[3]) / (2 * step)])

    def hessian(self, chart: int, w: complex, step: float = 1e-4) -> np.ndarray:
        out = np.empty((2, 2))
        for i, d in enumerate((step, 1j * step)):
            gp = self.gradient(chart, w + d)
            gm = self.gradient(chart, w - d)
            out[:, i] = (gp - gm) / (2 * step)
        return 0.5 * (out + out.T)

    def chart_overlap_residual(self, count: int = 32) -> float:
        """Consistency of the two charts on the unit circle |w| = 1."""
        ws = np.exp(2j * math.pi * np.arange(count) / count)
        return float(np.abs(self.value(0, ws) - self.value(1, 1.0 / ws)).max())


def s_hat(split: SplitForm) -> BaseFunction:
    """Quotient representation of the invariant factor of a split form."""
    return BaseFunction(split.scale)


@dataclass
class CriticalFiber:
    chart: int
    coord: complex
    value: float
    grad_norm: float
    kind: str
    hessian_eigs: tuple[float, float]

    def sphere_point(self) -> np.ndarray:
        return chart_point(self.chart, self.coord)

    def to_json_dict(self) -> dict:
        return {
            "chart": int(self.chart),
            "coord": [float(self.coord.real), float(self.coord.imag)],
            "S_value": float(self.value),
            "grad_norm": float(self.grad_norm),
            "kind": self.kind,
            "hessian_eigs": [float(e) for e in self.hessian_eigs],
        }


def critical_fibers(base_fn: BaseFunction, grad_tol: float | None = None,
                    start_count: int = 96, max_newton: int = 60,
                    degenerate_span: float = 1e-9) -> tuple[list[CriticalFiber], bool]:
    """Locate critical points of the invariant factor on the quotient.

    Multistart damped Newton on the chart gradient.  Returns the
    deduplicated critical fibers and a degeneracy flag which is set when
    the function is constant to within degenerate_span (the round case:
    every fiber is critical and the list is meaningless).
    """
    grad_tol = DEFAULTS.critical_grad_tol if grad_tol is None else grad_tol
    span = base_fn.max - base_fn.min
    if span < degenerate_span * max(1.0, abs(base_fn.max)):
        return [], True

    starts = []
    for p in fibonacci_sphere(start_count):
        x, y, u = p
        # chart coordinates of the fiber over this quotient point
        if 1.0 + u > 0.45:
            starts.append((0, complex(x, -y) / (1.0 + u)))
        if 1.0 - u > 0.45:
            starts.append((1, complex(x, y) / (1.0 - u)))

    found: list[CriticalFiber] = []
    reps: list[np.ndarray] = []
    for chart, w0 in starts:
        w = complex(w0)
        ok = False
        for _ in range(max_newton):
            g = base_fn.gradient(chart, w)
            if np.linalg.norm(g) < grad_tol:
                ok = True
                break
            h = base_fn.hessian(chart, w)
            try:
                step = np.linalg.solve(h, -g)
            except np.linalg.LinAlgError:
                step = -g
            norm = np.linalg.norm(step)
            if norm > 0.4:
                step *= 0.4 / norm
            w = w + complex(step[0], step[1])
            if abs(w) > 3.0:
                break
        if not ok or abs(w) > 1.5:
            continue
        rep = hopf_project(chart_point(chart, w))
        if any(np.linalg.norm(rep - r) < 10 * DEFAULTS.critical_dedup_tol for r in reps):
            continue
        eigs = np.linalg.eigvalsh(base_fn.hessian(chart, w))
        scale = max(abs(eigs[0]), abs(eigs[1]), 1e-30)
        if min(abs(eigs)) < 1e-6 * scale:
            kind = "degenerate"
        elif eigs[0] > 0:
            kind = "min"
        elif eigs[1] < 0:
            kind = "max"
        else:
            kind = "saddle"
        found.append(CriticalFiber(
            chart=chart, coord=w, value=float(base_fn.value(chart, np.array([w]))[0]),
            grad_norm=float(np.linalg.norm(base_fn.gradient(chart, w))),
            kind=kind, hessian_eigs=(float(eigs[0]), float(eigs[1]))))
        reps.append(rep)
    found.sort(key=lambda c: c.value)
    return found, False


# ---------------------------------------------------------------------------
# round-sphere exponential map and its fiber derivative


def sphere_exp(x, u):
    """exp_x(u) = cos|u| x + sin|u| u/|u| for tangent u at unit x."""
    x = as_complex(x)
    u = np.asarray(u, dtype=np.complex128)
    r = np.sqrt(np.sum(u.real ** 2 + u.imag ** 2, axis=-1))
    _check_radius(r)
    sinc = np.sinc(r / math.pi)  # sin(r)/r, safe at r = 0
    return np.cos(r)[..., None] * x + sinc[..., None] * u


def _check_radius(r):
    worst = float(r.max()) if r.size else 0.0
    if worst >= DEFAULTS.exp_injectivity_radius:
        raise InjectivityRadiusError(
            f"displacement norm {worst:.3f} reaches the injectivity radius pi/2")


def _split_along(u, v):
    """Decompose tangent v into its component along u-hat and the rest."""
    r = np.sqrt(np.sum(u.real ** 2 + u.imag ** 2, axis=-1))
    safe = np.where(r > 0, r, 1.0)
    uhat = u / safe[..., None]
    a = np.sum(v.real * uhat.real + v.imag * uhat.imag, axis=-1)
    a = np.where(r > 0, a, 0.0)
    return r, uhat, a, v - a[..., None] * uhat


def jacobi_apply(x, u, v):
    """d exp_x(u) applied to the fiber variation v (Jacobi field at time 1)."""
    x = as_complex(x)
    r, uhat, a, w = _split_along(np.asarray(u, dtype=np.complex128),
                                 np.asarray(v, dtype=np.complex128))
    _check_radius(r)
    t1 = -np.sin(r)[..., None] * x + np.cos(r)[..., None] * uhat
    sinc = np.sinc(r / math.pi)
    return a[..., None] * t1 + sinc[..., None] * w


def jacobi_solve(x, u, xi):
    """Invert the fiber derivative of exp: the unique v with d exp(u)[v] = xi."""
    x = as_complex(x)
    u = np.asarray(u, dtype=np.complex128)
    xi = np.asarray(xi, dtype=np.complex128)
    r = np.sqrt(np.sum(u.real ** 2 + u.imag ** 2, axis=-1))
    _check_radius(r)
    safe = np.where(r > 0, r, 1.0)
    uhat = u / safe[..., None]
    t1 = -np.sin(r)[..., None] * x + np.cos(r)[..., None] * uhat
    b = np.sum(xi.real * t1.real + xi.imag * t1.imag, axis=-1)
    b = np.where(r > 0, b, 0.0)
    rest = xi - b[..., None] * t1
    sinc = np.sinc(r / math.pi)
    out = b[..., None] * uhat + rest / sinc[..., None]
    # at r = 0 the map is the identity on the tangent space
    return np.where((r > 0)[..., None], out, xi)


# ---------------------------------------------------------------------------
# the corrector scheme


@dataclass
class BottkolTriple:
    """Displacement, transverse obstruction, and time change (U, V, h).

    residual is the sup norm of the defining identity: for the linear
    solver that identity is  L_{X0} U - h X0 - V - W,  for the Newton
    scheme it is the full conjugation map evaluated at (U, V, h).
    """
    grid: HopfGrid
    displacement: SphereField
    transverse_obstruction: SphereField
    time_change: SphereField
    residual: float
    residual_history: list[float]
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def u(self) -> SphereField:
        return self.displacement

    @property
    def v(self) -> SphereField:
        return self.transverse_obstruction

    @property
    def h(self) -> SphereField:
        return self.time_change

    def diffeomorphism(self) -> "SphereDiffeo":
        return SphereDiffeo(self.grid, self.displacement)

    def theorem_residuals(self) -> dict:
        """How well the structural side conditions hold on the grid."""
        u_field = self.displacement
        v_field = self.transverse_obstruction
        col = self.grid.collocation()
        vbar = v_field.samples()
        x0 = 2j * col
        v_dot_x0 = np.abs(np.sum(vbar.real * x0.real + vbar.imag * x0.imag, axis=-1)).max()
        return {
            "displacement_average": u_field.fiber_average().sup_norm(),
            "obstruction_invariance": v_field.invariance_residual(),
            "obstruction_vs_generator": float(v_dot_x0),
            "time_change_invariance": self.time_change.invariance_residual(),
            "displacement_tangency": u_field.tangency_residual(),
        }


def _linear_corrector(grid: HopfGrid, w_samples: np.ndarray):
    """Solve  L_{X0} U - h X0 - V = W  with the structural side conditions.

    Exact in the fiber Fourier representation: the invariant part of W fixes
    h and V pointwise, the rest is divided mode by mode.
    """
    w_field = SphereField.from_samples(grid, w_samples, "vector")
    m = grid.frequencies
    coeffs = w_field.coeffs.copy()
    idx1 = grid.mode_index(1)

    divisor = 2j * (m - 1).astype(np.complex128)
    divisor[idx1] = 1.0
    u_coeffs = coeffs / divisor[None, :, None]
    u_coeffs[:, idx1, :] = 0.0

    wbar = np.zeros_like(coeffs)
    wbar[:, idx1, :] = coeffs[:, idx1, :]
    wbar_samples = SphereField(grid, wbar, "vector").samples()
    col = grid.collocation()
    x0 = 2j * col
    h_samples = -np.sum(wbar_samples.real * x0.real + wbar_samples.imag * x0.imag,
                        axis=-1) / 4.0
    v_samples = -wbar_samples - h_samples[..., None] * x0
    return (SphereField(grid, u_coeffs, "vector"),
            SphereField.from_samples(grid, v_samples, "vector"),
            SphereField.from_samples(grid, h_samples, "scalar"))


def bottkol_linear_solve(w_field: SphereField) -> BottkolTriple:
    """Solve the linearized conjugation equation for a given tangent field.

    The returned residual is the sup norm of L_{X0} U - h X0 - V - W with
    the Lie derivative taken spectrally, an independent check of the
    mode-by-mode division.
    """
    grid = w_field.grid
    u, v, h = _linear_corrector(grid, w_field.samples())
    col = grid.collocation()
    x0 = 2j * col
    resid = (u.lie_reeb().samples() - h.samples()[..., None] * x0
             - v.samples() - w_field.samples())
    resid_norm = float(np.linalg.norm(resid, axis=-1).max())
    return BottkolTriple(grid=grid, displacement=u, transverse_obstruction=v,
                         time_change=h, residual=resid_norm,
                         residual_history=[resid_norm], iterations=0, converged=True)


def _fiber_upsample(samples: np.ndarray, t_fine: int) -> np.ndarray:
    """Zero-pad the fiber spectrum: (B, T, ...) -> (B, t_fine, ...)."""
    t = samples.shape[1]
    coeffs = np.fft.fft(samples, axis=1) / t
    m = np.fft.fftfreq(t, 1.0 / t).astype(int)
    shape = list(samples.shape)
    shape[1] = t_fine
    fine = np.zeros(shape, dtype=np.complex128)
    fine[:, m % t_fine] = coeffs
    return np.fft.ifft(fine, axis=1) * t_fine


def _fiber_downsample(fine: np.ndarray, t_coarse: int) -> np.ndarray:
    """Truncate the fiber spectrum back to the coarse band."""
    t_fine = fine.shape[1]
    coeffs = np.fft.fft(fine, axis=1) / t_fine
    m = np.fft.fftfreq(t_coarse, 1.0 / t_coarse).astype(int)
    return np.fft.ifft(coeffs[:, m % t_fine], axis=1) * t_coarse


def bottkol_newton(profile: RadialProfile, grid: HopfGrid | None = None,
                   tol: float | None = None, max_iter: int | None = None) -> BottkolTriple:
    """Frozen-Jacobian Newton for the conjugation data (U, V, h).

    Starts at (0, 0, 1); each step evaluates the full nonlinear residual
    and feeds it to the diagonal linear corrector.  The conjugation map is
    evaluated on an oversampled fiber grid, then read off at the stored
    angles: the point map exp(U) is not band-limited, and evaluating its
    fiber derivative on the coarse grid hands the folded band-edge modes
    to the wrong divisor in the corrector, flooring the iteration near
    |U|^2.  Stops when the residual sup norm is below tol, stagnates, or
    the displacement leaves the injectivity radius.
    """
    grid = HopfGrid(n=profile.n) if grid is None else grid
    tol = DEFAULTS.bottkol_newton_tol if tol is None else tol
    max_iter = DEFAULTS.bottkol_max_iter if max_iter is None else max_iter
    x_fn = reeb_field_sphere(profile)
    shape = grid.collocation().shape

    stride = DEFAULTS.bottkol_dealias_factor
    t_fine = stride * grid.fiber_modes
    theta_f = np.arange(t_fine) * math.pi / t_fine
    col_f = np.exp(2j * theta_f)[None, :, None] * grid.base_points[:, None, :]
    m_fine = (2j * np.fft.fftfreq(t_fine, 1.0 / t_fine).astype(int))[None, :, None]

    u_s = np.zeros(shape, dtype=np.complex128)
    v_s = np.zeros(shape, dtype=np.complex128)
    h_s = np.ones(shape[:2])
    history: list[float] = []
    fine_norm = math.inf

    def residual(u_samples, v_samples, h_samples):
        u_f = _fiber_upsample(u_samples, t_fine)
        pts = sphere_exp(col_f, u_f)
        pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
        # fiber-spectral derivative of theta -> u(e^{2 i theta} z_b)
        du_x0 = np.fft.ifft(np.fft.fft(pts, axis=1) * m_fine, axis=1)
        x_at = x_fn(pts)
        lhs = jacobi_solve(col_f, u_f, du_x0)
        rhs = jacobi_solve(col_f, u_f, x_at)
        res_f = (lhs - _fiber_upsample(h_samples.astype(np.complex128),
                                       t_fine).real[..., None] * rhs
                 - _fiber_upsample(v_samples, t_fine))
        # samples at the stored angles, not a spectral truncation: sampling
        # keeps the residual pointwise consistent, so the corrector never
        # sees the half-lost tangency pairs at the band edge
        return res_f[:, ::stride], float(np.linalg.norm(res_f, axis=-1).max())

    converged = False
    res_s, fine_norm = residual(u_s, v_s, h_s)
    res_norm = float(np.linalg.norm(res_s, axis=-1).max())
    history.append(res_norm)
    for it in range(1, max_iter + 1):
        if res_norm < tol:
            converged = True
            break
        du, dv, dh = _linear_corrector(grid, res_s)
        u_s = u_s - du.samples()
        v_s = v_s - dv.samples()
        h_s = h_s - dh.real_samples()
        res_s, fine_norm = residual(u_s, v_s, h_s)
        res_norm = float(np.linalg.norm(res_s, axis=-1).max())
        history.append(res_norm)
        if len(history) >= 3 and res_norm > 2.0 * history[-2] and res_norm > 10 * tol:
            raise CorrectorStagnationError(
                f"residual grew from {history[-2]:.3e} to {res_norm:.3e}; "
                "the profile is outside the perturbative regime of the scheme")
    else:
        it = max_iter
        converged = res_norm < tol

    return BottkolTriple(
        grid=grid,
        displacement=SphereField.from_samples(grid, u_s, "vector"),
        transverse_obstruction=SphereField.from_samples(grid, v_s, "vector"),
        time_change=SphereField.from_samples(grid, h_s, "scalar"),
        residual=res_norm,
        residual_history=history,
        iterations=it,
        converged=converged,
        diagnostics={"dealiased_residual": fine_norm, "fiber_grid_fine": t_fine},
    )


class SphereDiffeo:
    """exp of a displacement field, evaluable off the grid via the interpolant."""

    def __init__(self, grid: HopfGrid, displacement: SphereField):
        self.grid = grid
        self.displacement = displacement
        samples = displacement.samples()
        # (B, T, 4) layout so the fit keeps the four components as values
        self._poly = grid.interpolant.fit(complex_to_real(samples))
        self.fit_misfit = self._poly.misfit

    def displacement_at(self, z) -> np.ndarray:
        # no tangential projection: the Newton displacement may carry a
        # small radial part, and on- and off-grid evaluation must agree
        z = as_complex(z)
        return real_to_complex(self._poly.value(complex_to_real(z)))

    def __call__(self, z) -> np.ndarray:
        z = as_complex(z)
        out = sphere_exp(z, self.displacement_at(z))
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def on_grid(self) -> np.ndarray:
        col = self.grid.collocation()
        out = sphere_exp(col, self.displacement.samples())
        return out / np.linalg.norm(out, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# pullback and the full normal form


def pullback_form(profile: RadialProfile, diffeo: SphereDiffeo):
    """Pull the form f^2 alpha0 back through the diffeomorphism.

    Transverse components come from central differences through the
    interpolated displacement; the fiber contraction is computed separately
    from the spectral fiber derivative, which is what the splitting uses as
    its exact contraction input.
    """
    grid = diffeo.grid
    col = grid.collocation()
    flat_col = col.reshape(-1, 2)
    step = DEFAULTS.pullback_fd_step

    images = diffeo.on_grid()
    f_at = profile.value(images.reshape(-1, 2)).reshape(images.shape[:2])
    alpha_dual_im = 0.5j * images

    cols = []
    for i in range(4):
        e = np.zeros(4)
        e[i] = step
        ec = real_to_complex(e)
        plus = (flat_col + ec) / np.linalg.norm(flat_col + ec, axis=-1, keepdims=True)
        minus = (flat_col - ec) / np.linalg.norm(flat_col - ec, axis=-1, keepdims=True)
        a_i = (diffeo(plus) - diffeo(minus)) / (2.0 * step)
        cols.append(a_i.reshape(col.shape))

    beta_real = np.empty(col.shape[:2] + (4,))
    for i, a_i in enumerate(cols):
        pair = np.sum(a_i.real * alpha_dual_im.real + a_i.imag * alpha_dual_im.imag,
                      axis=-1)
        beta_real[..., i] = (f_at ** 2) * pair
    beta_vec = real_to_complex(beta_real)
    radial = np.sum(beta_vec.real * col.real + beta_vec.imag * col.imag, axis=-1)
    beta_vec = beta_vec - radial[..., None] * col

    du_x0 = np.fft.ifft(np.fft.fft(images, axis=1)
                        * (2j * grid.frequencies)[None, :, None], axis=1)
    contraction = (f_at ** 2) * np.sum(du_x0.real * alpha_dual_im.real
                                       + du_x0.imag * alpha_dual_im.imag, axis=-1)
    # align the generator-dual component of beta with the spectral
    # contraction; the finite-difference tangent maps are the noisier route
    beta_r0 = np.sum(beta_vec.real * (2j * col).real + beta_vec.imag * (2j * col).imag,
                     axis=-1)
    beta_vec = beta_vec + (contraction - beta_r0)[..., None] * (0.5j * col)
    beta_field = SphereField.from_samples(grid, beta_vec, "vector")
    contraction_field = SphereField.from_samples(grid, contraction, "scalar")
    return beta_field, contraction_field


@dataclass
class NormalFormResult:
    profile: RadialProfile
    grid: HopfGrid
    mode: str
    split: SplitForm
    base: BaseFunction
    criticals: list[CriticalFiber]
    degenerate: bool
    corrector: BottkolTriple | None
    diffeo: SphereDiffeo | None
    orbit_rows: list[dict] = field(default_factory=list)

    def report(self) -> dict:
        s_min, s_max = self.split.scale_bounds()
        residuals = dict(self.split.diagnostics)
        if self.corrector is not None:
            residuals["corrector_residual"] = self.corrector.residual
            residuals.update(self.corrector.theorem_residuals())
        crit = []
        for c in self.criticals:
            row = c.to_json_dict()
            row["predicted_period"] = math.pi * c.value
            for orbit_row in self.orbit_rows:
                if orbit_row["chart"] == c.chart and \
                        abs(complex(*orbit_row["coord"]) - c.coord) < 1e-9:
                    row["period_found"] = orbit_row["period_found"]
                    row["period_error"] = orbit_row["period_error"]
                    row["fiber_distance"] = orbit_row["fiber_distance"]
            crit.append(row)
        return {
            "mode": self.mode,
            "S_stats": {"min": s_min, "max": s_max},
            "eta_norm": self.split.transverse.sup_norm(),
            "f_norm": self.split.potential.sup_norm(),
            "residuals": {k: float(v) for k, v in residuals.items()},
            "degenerate": bool(self.degenerate),
            "critical_fibers": crit,
        }


def normal_form(profile: RadialProfile, grid: HopfGrid | None = None,
                mode: str = "bottkol", shoot: bool = True,
                shoot_kwargs: dict | None = None) -> NormalFormResult:
    """Split the contact form of a profile into its normal-form pieces.

    mode "first-order": split f^2 alpha0 directly; the invariant factor is
    then correct to first order in the profile perturbation, which is the
    cheap route whose period predictions carry an O(eps^2) error (exact for
    invariant profiles).
    mode "bottkol": conjugate by the diffeomorphism from the corrector
    scheme first, so the critical fibers predict periods to the accuracy of
    the scheme itself.
    """
    grid = HopfGrid(n=profile.n) if grid is None else grid
    corrector = None
    diffeo = None
    if mode == "first-order":
        col = grid.collocation()
        f2 = profile.value(col.reshape(-1, 2)).reshape(col.shape[:2]) ** 2
        beta_vec = f2[..., None] * (0.5j * col)
        beta = SphereField.from_samples(grid, beta_vec, "vector")
        contraction = SphereField.from_samples(grid, f2, "scalar")
        split = split_form(beta, reeb_contraction=contraction)
    elif mode == "bottkol":
        corrector = bottkol_newton(profile, grid)
        diffeo = corrector.diffeomorphism()
        beta, contraction = pullback_form(profile, diffeo)
        split = split_form(beta, reeb_contraction=contraction)
    else:
        raise ValueError("mode must be 'first-order' or 'bottkol'")

    base = BaseFunction(split.scale)
    criticals, degenerate = critical_fibers(base)
    result = NormalFormResult(profile=profile, grid=grid, mode=mode, split=split,
                              base=base, criticals=criticals, degenerate=degenerate,
                              corrector=corrector, diffeo=diffeo)
    if shoot and not degenerate:
        result.orbit_rows = verify_variational_principle(
            profile, result, **(shoot_kwargs or {}))
    return result


def verify_variational_principle(profile: RadialProfile, nf: NormalFormResult,
                                 max_fibers: int | None = None) -> list[dict]:
    """Shoot from each predicted critical fiber and compare periods.

    The predicted closed orbit is (the image under the conjugation of) the
    fiber over a critical point, with period pi times the critical value.
    Each row records the prediction, the orbit the shooter actually locked
    onto, and the geometric distance between the found orbit and the
    predicted circle.
    """
    from .orbits import find_closed_orbit, orbit_samples

    rows = []
    crits = nf.criticals if max_fibers is None else nf.criticals[:max_fibers]
    for c in crits:
        z_b = c.sphere_point()
        circle = np.exp(2j * np.linspace(0, math.pi, DEFAULTS.orbit_sample_count,
                                         endpoint=False))[:, None] * z_b[None, :]
        if nf.diffeo is not None:
            circle = nf.diffeo(circle)
        seed_sphere = circle[0]
        seed = profile.boundary_point(seed_sphere)
        t_pred = math.pi * c.value
        orbit = find_closed_orbit(profile, seed, t_pred)
        row = {
            "chart": c.chart,
            "coord": [float(c.coord.real), float(c.coord.imag)],
            "S_value": c.value,
            "kind": c.kind,
            "period_predicted": t_pred,
            "period_found": orbit.period if orbit.converged else float("nan"),
            "period_error": abs(orbit.period - t_pred) if orbit.converged else float("inf"),
            "closure_residual": orbit.closure_residual,
            "converged": orbit.converged,
        }
        if orbit.converged:
            pts = orbit_samples(profile, orbit)
            pts_sphere = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
            d = np.linalg.norm(complex_to_real(pts_sphere)[:, None, :]
                               - complex_to_real(circle)[None, :, :], axis=-1)
            row["fiber_distance"] = float(max(d.min(axis=1).max(), d.min(axis=0).max()))
        else:
            row["fiber_distance"] = float("inf")
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# volume identity on synthetic fields


class PolyOneForm:
    """One-form on R^4 with polynomial coefficients and exact derivatives."""

    def __init__(self, comps: list[AmbientPoly]):
        if len(comps) != 4:
            raise ValueError("need 4 components")
        self.comps = comps

    def dual(self, pts: np.ndarray) -> np.ndarray:
        return np.stack([c(pts) for c in self.comps], axis=-1)

    def exterior_matrix(self, pts: np.ndarray) -> np.ndarray:
        """d of the form as the antisymmetric matrix B with B(u,v) = u^T B v."""
        out = np.zeros(pts.shape[:-1] + (4, 4))
        for i in range(4):
            for j in range(4):
                if i == j:
                    continue
                out[..., i, j] += self.comps[j].derivative(i)(pts)
        return out - np.swapaxes(out, -1, -2)


def _alpha0_polyform() -> PolyOneForm:
    x1 = AmbientPoly.coordinate(4, 0)
    y1 = AmbientPoly.coordinate(4, 1)
    x2 = AmbientPoly.coordinate(4, 2)
    y2 = AmbientPoly.coordinate(4, 3)
    half = 0.5
    return PolyOneForm([(-half) * y1, half * x1, (-half) * y2, half * x2])


def _generator_components() -> list[AmbientPoly]:
    """Real components of the action generator 2iz."""
    x1 = AmbientPoly.coordinate(4, 0)
    y1 = AmbientPoly.coordinate(4, 1)
    x2 = AmbientPoly.coordinate(4, 2)
    y2 = AmbientPoly.coordinate(4, 3)
    return [(-2.0) * y1, 2.0 * x1, (-2.0) * y2, 2.0 * x2]


def synthetic_split_fields(seed: int = 0, scale: float = 0.1):
    """Random (S, eta, f) satisfying the structural hypotheses exactly.

    S is a polynomial in the invariant quadratics (hence invariant), eta is
    a random polynomial one-form minus its generator contraction times the
    round form (hence annihilates the generator on the sphere), f is an
    arbitrary polynomial.  All derivatives are exact.
    """
    rng = np.random.default_rng(seed)
    l1, l2, l3 = invariant_quadratics()
    s = AmbientPoly.constant(4, 1.0)
    for q in (l1, l2, l3):
        s = s + float(rng.normal() * scale) * q
    for qa in (l1, l2, l3):
        for qb in (l1, l2, l3):
            s = s + float(rng.normal() * scale / 6.0) * (qa * qb)

    xi = [random_poly(4, 2, rng, scale=scale) for _ in range(4)]
    gen = _generator_components()
    phi = AmbientPoly.zero(4)
    for c, g in zip(xi, gen):
        phi = phi + c * g
    alpha = _alpha0_polyform()
    eta = PolyOneForm([c - phi * a for c, a in zip(xi, alpha.comps)])

    f = random_poly(4, 3, rng, scale=scale)
    return s, eta, f


def _wedge_1_2(a_vals: np.ndarray, b_mats: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """(a ^ B)(e1, e2, e3) for dual vectors a and antisymmetric matrices B."""
    e = frames  # (..., 3, 4)
    a_e = np.einsum("...k,...ik->...i", a_vals, e)
    b_pairs = np.einsum("...ik,...kl,...jl->...ij", e, b_mats, e)
    return (a_e[..., 0] * b_pairs[..., 1, 2]
            - a_e[..., 1] * b_pairs[..., 0, 2]
            + a_e[..., 2] * b_pairs[..., 0, 1])


def _wedge_1_1_1(a, b, c, frames) -> np.ndarray:
    rows = np.stack([np.einsum("...k,...ik->...i", v, frames) for v in (a, b, c)],
                    axis=-2)
    return np.linalg.det(rows)


def volume_identity_check(s_poly: AmbientPoly, eta: PolyOneForm, f_poly: AmbientPoly,
                          grid: HopfGrid) -> dict:
    """Evaluate both sides of the volume identity and the defect density.

    Everything is sampled on oriented orthonormal frames where the round
    volume form equals 1/2, turning 3-form values into densities that the
    grid quadrature integrates.  Also reported: the integral of the defect
    density -4 d(alpha0 ^ eta) evaluated on the same frames, which must
    vanish because the form is exact.
    """
    if grid.n != 2:
        raise NotImplementedError("volume identity evaluator implemented for n = 2")
    col = grid.collocation()
    flat = col.reshape(-1, 2)
    pts = complex_to_real(flat)
    e1, e2, e3 = tangent_frames(flat)
    frames = np.stack([complex_to_real(e1), complex_to_real(e2), complex_to_real(e3)],
                      axis=-2)

    j = standard_j(2)
    omega_mat = np.broadcast_to(j.T, pts.shape[:-1] + (4, 4))
    alpha_dual = complex_to_real(0.5j * flat)

    s_vals = s_poly(pts)
    ds = s_poly.grad(pts)
    eta_dual = eta.dual(pts)
    deta = eta.exterior_matrix(pts)
    df = f_poly.grad(pts)

    beta_dual = s_vals[..., None] * alpha_dual + eta_dual + df
    ds_wedge_alpha = (ds[..., :, None] * alpha_dual[..., None, :]
                      - alpha_dual[..., :, None] * ds[..., None, :])
    dbeta = ds_wedge_alpha + s_vals[..., None, None] * omega_mat + deta

    lhs_density = 2.0 * _wedge_1_2(beta_dual, dbeta, frames)
    rhs_density = (s_vals ** 2
                   + 4.0 * _wedge_1_1_1(ds, alpha_dual, eta_dual, frames)
                   + 2.0 * _wedge_1_2(eta_dual, deta, frames))
    defect_density = -4.0 * (_wedge_1_2(eta_dual, omega_mat, frames)
                             - _wedge_1_2(alpha_dual, deta, frames))

    shape = col.shape[:2]
    lhs = grid.quadrature_samples(lhs_density.reshape(shape))
    rhs = grid.quadrature_samples(rhs_density.reshape(shape))
    defect = grid.quadrature_samples(defect_density.reshape(shape))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rel_err": abs(lhs - rhs) / max(abs(lhs), 1e-300),
        "defect_integral": defect,
        "defect_abs_scale": float(np.abs(defect_density).max()),
        "volume_scale": abs(lhs),
    }
