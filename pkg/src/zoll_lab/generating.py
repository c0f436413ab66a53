"""Symplectomorphisms of C^n from scalar generating functions.

The midpoint rule used here couples a map phi to a function S through

    i (z - phi(z)) = grad S((z + phi(z)) / 2),

with gradients taken in the real metric and embedded back into C^n.  When
sup |Hess S| < 2 the right side is a contraction in phi(z) and the fixed
point defines a symplectomorphism; conversely a map with sup |dphi - id| < 2
determines S up to a constant by integrating the midpoint one-form.  The
Jacobian of the fixed-point map is the Cayley transform of J Hess S / 2,
which is symplectic exactly whenever the Hessian estimate is symmetric; the
library therefore differentiates through the Cayley form rather than through
finite differences of phi itself.

The module also builds the loop-straightening generating function: given a
closed loop of the same action as the reference circle t -> (e^{2 pi i t},
0, ..., 0), it produces an S whose map carries the loop pointwise onto the
circle.  The cutoff profile is fixed (plateaus [1/2, 3/2] and [0, 1],
supports [1/4, 2] and [0, 2], glued from exp(-1/t)), so the construction has
no tuning knobs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._poly import AmbientPoly
from .config import DEFAULTS
from .symplectic import complex_to_real, real_to_complex, standard_j


class HessianBoundError(ValueError):
    pass


class PicardDivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# generating functions


class GeneratingFunction:
    """Scalar function on C^n with gradient and Hessian access.

    Analytic derivatives are used when available; otherwise central
    differences with step fd_scale * (1 + |z|).
    """

    def __init__(self, n: int, value, gradient=None, hessian=None,
                 fd_scale: float | None = None, label: str = ""):
        self.n = n
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.fd_scale = DEFAULTS.genfun_fd_scale if fd_scale is None else fd_scale
        self.label = label

    @classmethod
    def from_poly(cls, poly: AmbientPoly, label: str = "") -> "GeneratingFunction":
        n = poly.dim // 2
        return cls(n,
                   lambda z: poly(complex_to_real(z)),
                   gradient=lambda z: real_to_complex(poly.grad(complex_to_real(z))),
                   hessian=lambda z: poly.hess(complex_to_real(z)),
                   label=label or "poly")

    @classmethod
    def quadratic_radial(cls, n: int, c: float) -> "GeneratingFunction":
        """S = c |z|^2, whose map is the rotation by 2 arctan c."""
        exps = []
        for i in range(2 * n):
            e = [0] * (2 * n)
            e[i] = 2
            exps.append((tuple(e), c))
        return cls.from_poly(AmbientPoly.from_terms(2 * n, exps), label=f"{c:g}|z|^2")

    def value(self, z) -> np.ndarray:
        return np.asarray(self._value(np.asarray(z, dtype=np.complex128)), dtype=np.float64)

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        if self._gradient is not None:
            return np.asarray(self._gradient(z), dtype=np.complex128)
        x = complex_to_real(z)
        h = self.fd_scale * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
        out = np.empty_like(x)
        for i in range(2 * self.n):
            e = np.zeros(2 * self.n)
            e[i] = 1.0
            out[..., i] = (self.value(real_to_complex(x + h * e))
                           - self.value(real_to_complex(x - h * e))) / (2.0 * h[..., 0])
        return real_to_complex(out)

    def hessian(self, z) -> np.ndarray:
        """Real 2n x 2n Hessian, symmetrized."""
        z = np.asarray(z, dtype=np.complex128)
        if self._hessian is not None:
            h = np.asarray(self._hessian(z), dtype=np.float64)
            return 0.5 * (h + np.swapaxes(h, -1, -2))
        x = complex_to_real(z)
        step = self.fd_scale * (1.0 + np.linalg.norm(x, axis=-1))
        dim = 2 * self.n
        out = np.empty(x.shape[:-1] + (dim, dim))
        for i in range(dim):
            ei = np.zeros(dim)
            ei[i] = 1.0
            gp = complex_to_real(self.gradient(real_to_complex(x + step[..., None] * ei)))
            gm = complex_to_real(self.gradient(real_to_complex(x - step[..., None] * ei)))
            out[..., i, :] = (gp - gm) / (2.0 * step[..., None])
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def hessian_sup(self, radius: float = 2.5, count: int = 512, seed: int = 11,
                    extra_points=None) -> float:
        """Largest Hessian operator norm over a ball probe cloud."""
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((count, 2 * self.n))
        x *= (radius * rng.random((count, 1)) ** (1.0 / (2 * self.n))
              / np.linalg.norm(x, axis=1, keepdims=True))
        pts = real_to_complex(x)
        if extra_points is not None:
            pts = np.concatenate([pts, np.asarray(extra_points, dtype=np.complex128)])
        h = self.hessian(pts)
        return float(np.abs(np.linalg.eigvalsh(h)).max())


# ---------------------------------------------------------------------------
# the fixed-point map


class GeneratedMap:
    """Symplectomorphism defined by a generating function via the midpoint rule."""

    def __init__(self, gen: GeneratingFunction, check_bound: bool = True,
                 probe_radius: float = 2.5):
        self.gen = gen
        self.n = gen.n
        self.hessian_probe_sup = gen.hessian_sup(radius=probe_radius) if check_bound else None
        if check_bound and self.hessian_probe_sup >= DEFAULTS.hessian_bound:
            raise HessianBoundError(
                f"sup |Hess S| = {self.hessian_probe_sup:.3f} >= 2, no contraction certificate")

    def _picard(self, anchor, start, sign):
        """Solve w = anchor + sign * i * grad S((anchor + w)/2)."""
        w = np.array(start, dtype=np.complex128)
        anchor = np.asarray(anchor, dtype=np.complex128)
        tol = DEFAULTS.picard_tol
        last = np.inf
        for _ in range(DEFAULTS.picard_max_iter):
            new = anchor + sign * 1j * self.gen.gradient((anchor + w) / 2.0)
            step = float(np.abs(new - w).max())
            w = new
            if step < tol:
                return w
            if step > 4.0 * last and step > 1e-6:
                raise PicardDivergenceError(f"fixed point diverging, step {step:.3e}")
            last = step
        raise PicardDivergenceError(
            f"no fixed point after {DEFAULTS.picard_max_iter} iterations, step {step:.3e}")

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return self._picard(z, z, +1.0)

    def inverse_apply(self, w):
        w = np.asarray(w, dtype=np.complex128)
        return self._picard(w, w, -1.0)

    def jacobian(self, z) -> np.ndarray:
        """Cayley form (I - J H/2)^{-1} (I + J H/2) at the midpoint.

        Symplectic to machine precision because the Hessian is symmetrized,
        independent of its discretization error.
        """
        z = np.asarray(z, dtype=np.complex128)
        mid = (z + self(z)) / 2.0
        h = self.gen.hessian(mid)
        j = standard_j(self.n)
        a = np.einsum("ij,...jk->...ik", j, h) / 2.0
        eye = np.eye(2 * self.n)
        return np.linalg.solve(eye - a, eye + a)

    def jacobian_fd(self, z, step: float | None = None) -> np.ndarray:
        """Plain finite-difference Jacobian, for cross-checks only."""
        step = 1e-6 if step is None else step
        z = np.asarray(z, dtype=np.complex128)
        x = complex_to_real(z)
        dim = 2 * self.n
        out = np.empty(x.shape[:-1] + (dim, dim))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1.0
            fp = complex_to_real(self(real_to_complex(x + step * e)))
            fm = complex_to_real(self(real_to_complex(x - step * e)))
            out[..., :, i] = (fp - fm) / (2.0 * step)
        return out

    def symplectic_defect(self, points) -> float:
        points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
        j = standard_j(self.n)
        worst = 0.0
        for p in points:
            d = self.jacobian(p)
            worst = max(worst, float(np.abs(d.T @ j @ d - j).max()))
        return worst

    def roundtrip_defect(self, points) -> float:
        points = np.asarray(points, dtype=np.complex128)
        return float(np.abs(self.inverse_apply(self(points)) - points).max())


def map_from_generating(gen: GeneratingFunction | AmbientPoly,
                        check_bound: bool = True) -> GeneratedMap:
    if isinstance(gen, AmbientPoly):
        gen = GeneratingFunction.from_poly(gen)
    return GeneratedMap(gen, check_bound=check_bound)


# ---------------------------------------------------------------------------
# map -> generating function


class RecoveredGenerating:
    """Generating function of a given map, by integrating the midpoint form.

    grad S at a midpoint m is i (z - phi(z)) where z solves m = (z + phi(z))/2;
    S is then the radial line integral from the origin, fixed by S(0) = 0.
    """

    def __init__(self, phi, n: int, gl_nodes: int = 96):
        self.phi = phi
        self.n = n
        nodes, weights = np.polynomial.legendre.leggauss(gl_nodes)
        self._nodes = 0.5 * (nodes + 1.0)
        self._weights = 0.5 * weights

    def _z_from_mid(self, mids):
        """Invert the midpoint map by the contraction z = m - (phi(z) - z)/2."""
        z = np.array(mids, dtype=np.complex128)
        for _ in range(DEFAULTS.picard_max_iter):
            new = mids - (self.phi(z) - z) / 2.0
            step = float(np.abs(new - z).max())
            z = new
            if step < DEFAULTS.picard_tol:
                return z
        raise PicardDivergenceError(f"midpoint inversion stalled at step {step:.3e}")

    def gradient(self, mids):
        z = self._z_from_mid(np.asarray(mids, dtype=np.complex128))
        return 1j * (z - self.phi(z))

    def value(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
        out = np.empty(points.shape[0])
        for i, p in enumerate(points):
            path = self._nodes[:, None] * p[None, :]
            grads = self.gradient(path)
            integrand = np.sum(grads.real * p.real[None, :] + grads.imag * p.imag[None, :],
                               axis=-1)
            out[i] = float(np.sum(self._weights * integrand))
        return out


def recover_generating(phi, n: int, probe_radius: float = 1.5, probe_count: int = 256,
                       seed: int = 3) -> RecoveredGenerating:
    """Build S from phi, after checking the sup |dphi - id| < 2 smallness."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((probe_count, 2 * n))
    x *= probe_radius * rng.random((probe_count, 1)) ** (1.0 / (2 * n)) \
        / np.linalg.norm(x, axis=1, keepdims=True)
    pts = real_to_complex(x)
    h = 1e-6
    worst = 0.0
    for p in pts[:32]:
        xr = complex_to_real(p)
        d = np.empty((2 * n, 2 * n))
        for i in range(2 * n):
            e = np.zeros(2 * n)
            e[i] = 1.0
            d[:, i] = complex_to_real(phi(real_to_complex(xr + h * e))
                                      - phi(real_to_complex(xr - h * e))) / (2 * h)
        worst = max(worst, float(np.linalg.norm(d - np.eye(2 * n), 2)))
    if worst >= 2.0:
        raise HessianBoundError(f"sup |dphi - id| = {worst:.3f} >= 2 on probes")
    return RecoveredGenerating(phi, n)


# ---------------------------------------------------------------------------
# loop straightening


def _smooth_step(t):
    """C-infinity step built from exp(-1/t): 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    def bump(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out
    a = bump(t)
    b = bump(1.0 - t)
    return a / (a + b)


def cutoff_radial(r):
    """1 on [1/2, 3/2], 0 outside [1/4, 2]."""
    r = np.asarray(r, dtype=np.float64)
    rise = _smooth_step((r - 0.25) / 0.25)
    fall = 1.0 - _smooth_step((r - 1.5) / 0.5)
    return rise * fall


def cutoff_transverse(u):
    """1 on [0, 1], 0 beyond 2."""
    return 1.0 - _smooth_step(np.asarray(u, dtype=np.float64) - 1.0)


@dataclass
class StraighteningResult:
    generating: GeneratingFunction
    map: GeneratedMap
    action: float
    pairing_residual: float     # mean of the periodicity integrand, must vanish
    hessian_sup: float
    plateau_hessian_sup: float
    diagnostics: dict = field(default_factory=dict)


class _LoopChart:
    """Tubular coordinates p = r gamma1(t) + (0, w) around the averaged loop."""

    def __init__(self, gamma1_fn, d_gamma1_fn):
        self.gamma1 = gamma1_fn
        self.d_gamma1 = d_gamma1_fn
        ts = np.linspace(0.0, 1.0, 1024, endpoint=False)
        self._first_min = float(np.abs(self.gamma1(ts)[:, 0]).min())
        if self._first_min < 0.1:
            raise ValueError("averaged loop too close to the first-coordinate zero set")

    def solve(self, p):
        """Return (r, t, w) with p1 = r * gamma1_1(t); r <= 0 marks the S = 0 zone."""
        p1 = p[0]
        if abs(p1) < 0.2 * self._first_min:
            return 0.0, 0.0, None
        t = math.atan2(p1.imag, p1.real) / (2.0 * math.pi) % 1.0
        for _ in range(60):
            g1 = complex(self.gamma1(np.array([t]))[0, 0])
            dg1 = complex(self.d_gamma1(np.array([t]))[0, 0])
            # want Im(p1 * conj(g1 e^{i phase correction})) = 0 with positive Re
            val = (p1 * np.conj(g1)).imag
            der = (p1 * np.conj(dg1)).imag
            if abs(der) < 1e-14:
                break
            step = -val / der
            step = max(-0.2, min(0.2, step))
            t = (t + step) % 1.0
            if abs(step) < 1e-15:
                break
        g1 = complex(self.gamma1(np.array([t]))[0, 0])
        r = (p1 * np.conj(g1)).real / abs(g1) ** 2
        if r <= 0.0:
            return 0.0, 0.0, None
        gam = self.gamma1(np.array([t]))[0]
        w = p[1:] - r * gam[1:]
        return r, t, w


def loop_straightening(gamma, samples: int = 512,
                       action_tol: float | None = None) -> StraighteningResult:
    """Generating function carrying a closed loop onto the reference circle.

    gamma: callable t -> C^n points, 1-periodic, enclosing the same action pi
    as the circle gamma0(t) = (e^{2 pi i t}, 0, ..., 0).  The construction
    follows the tubular-chart recipe: spectral primitives along the loop for
    the longitudinal part, a linear pull toward the circle transversally,
    all cut off at fixed radii.  The returned map satisfies
    phi(gamma(t)) = gamma0(t) wherever the fixed point iteration converges;
    the global contraction certificate is reported, not enforced, because
    near the loop the Hessian is small even when the far cutoff zones exceed
    the bound.
    """
    action_tol = DEFAULTS.loop_action_tol if action_tol is None else action_tol
    ts = np.arange(samples) / samples
    g = np.asarray(gamma(ts), dtype=np.complex128)
    if g.shape[0] != samples:
        raise ValueError("gamma(ts) must return one point per parameter")
    n = g.shape[1]

    # spectral derivative helpers on 1-periodic data
    freqs = np.fft.fftfreq(samples, d=1.0 / samples)
    def deriv(vals):
        return np.fft.ifft(np.fft.fft(vals, axis=0) * (2j * math.pi * freqs)[:, None], axis=0)

    g0 = np.zeros_like(g)
    g0[:, 0] = np.exp(2j * math.pi * ts)
    action = _loop_action(g, deriv(g))
    if abs(action - math.pi) > max(action_tol, 1e-12 * samples):
        raise ValueError(f"loop action {action:.12f} differs from pi; rescale the loop first")

    g1 = 0.5 * (g + g0)
    delta = 1j * (g - g0)
    dg1 = deriv(g1)
    pairing = np.sum(delta.real * dg1.real + delta.imag * dg1.imag, axis=1)
    pairing_residual = float(abs(pairing.mean()))
    # longitudinal primitive: zero-mean integrand integrated spectrally
    coef = np.fft.fft(pairing - pairing.mean())
    with np.errstate(divide="ignore", invalid="ignore"):
        prim = coef / (2j * math.pi * freqs)
    prim[0] = 0.0
    s_vals = np.fft.ifft(prim).real
    s_vals -= s_vals[0]

    # trig interpolants for the t-dependent ingredients
    def trig_eval(vals_fft, t):
        phases = np.exp(2j * math.pi * np.outer(np.atleast_1d(t), freqs))
        return (phases @ vals_fft) / samples

    g1_fft = np.fft.fft(g1, axis=0)
    dg1_fft = np.fft.fft(dg1, axis=0)
    delta_fft = np.fft.fft(delta, axis=0)
    s_fft = np.fft.fft(s_vals)

    gamma1_fn = lambda t: trig_eval(g1_fft, t)
    d_gamma1_fn = lambda t: trig_eval(dg1_fft, t)
    chart = _LoopChart(gamma1_fn, d_gamma1_fn)

    def s_value_single(p):
        r, t, w = chart.solve(np.asarray(p, dtype=np.complex128))
        if w is None:
            return 0.0
        chi1 = float(cutoff_radial(r))
        if chi1 == 0.0:
            return 0.0
        wn = float(np.linalg.norm(w))
        chi2 = float(cutoff_transverse(wn))
        if chi2 == 0.0:
            return 0.0
        ta = np.array([t])
        d_here = trig_eval(delta_fft, ta)[0]
        g1_here = trig_eval(g1_fft, ta)[0]
        s_here = float(trig_eval(s_fft[:, None], ta)[0, 0].real)
        long_term = (r - 1.0) * float(np.sum(d_here.real * g1_here.real
                                             + d_here.imag * g1_here.imag))
        trans_term = float(np.sum(d_here[1:].real * w.real + d_here[1:].imag * w.imag))
        return chi1 * chi2 * (s_here + long_term + trans_term)

    def s_value(pts):
        pts = np.asarray(pts, dtype=np.complex128)
        flat = pts.reshape(-1, n)
        return np.array([s_value_single(p) for p in flat]).reshape(pts.shape[:-1])

    gen = GeneratingFunction(n, s_value, label="loop straightening")
    phi = GeneratedMap(gen, check_bound=False)
    mid_pts = 0.5 * (g + g0)
    hessian_sup = gen.hessian_sup(radius=2.2, count=192, seed=5)
    plateau = float(np.abs(np.linalg.eigvalsh(gen.hessian(mid_pts[::16]))).max())
    phi.hessian_probe_sup = hessian_sup
    return StraighteningResult(
        generating=gen, map=phi, action=action,
        pairing_residual=pairing_residual,
        hessian_sup=hessian_sup, plateau_hessian_sup=plateau,
        diagnostics={"samples": samples, "loop_offset_sup": float(np.abs(g - g0).max())},
    )


def _loop_action(points, velocities) -> float:
    """Integral of the primitive (1/2) sum (x dy - y dx) over the sampled loop."""
    lam = 0.5 * np.sum((1j * points).real * velocities.real
                       + (1j * points).imag * velocities.imag, axis=1)
    return float(lam.mean())
