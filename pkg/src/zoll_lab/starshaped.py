"""Starshaped domains and their contact data.

A domain is described by a positive radial profile f on the unit sphere: the
boundary is the graph {f(z) z : |z| = 1}.  The associated 2-homogeneous
Hamiltonian H(p) = |p|^2 / f(p/|p|)^2 equals 1 on the boundary, and with the
primitive lambda0 = (1/2) sum (x dy - y dx) the Reeb field of the restricted
form is exactly J grad H, no normalization needed.  The same dynamics can be
pulled back to the unit sphere, where the Reeb field of f^2 alpha0 has the
closed form (R0 - 2i P_xi grad f / f) / f^2 with P_xi the Hermitian
projection onto the contact plane.
"""

from __future__ import annotations

import math

import numpy as np

from ._poly import AmbientPoly, _exponent_table, invariant_quadratics, random_poly
from .config import DEFAULTS
from .hopf import HopfGrid, SphereField, as_complex, check_on_sphere, fibonacci_sphere, hopf_lift
from .symplectic import complex_to_real, real_to_complex


class NonPositiveProfileError(ValueError):
    pass


class OffBoundaryError(ValueError):
    pass


def _probe_cloud(n: int, count: int = 4096, seed: int = 7) -> np.ndarray:
    """Deterministic point cloud on S^{2n-1} used for sup/inf estimates."""
    if n == 2:
        base = hopf_lift(fibonacci_sphere(count // 8))
        phases = np.exp(2j * np.arange(8) * math.pi / 8)
        pts = (phases[None, :, None] * base[:, None, :]).reshape(-1, 2)
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    return pts


class RadialProfile:
    """Positive function on S^{2n-1}, polynomial or ellipsoidal.

    Polynomial profiles are f = 1 + g with g a real polynomial in the 2n
    ambient coordinates; the polynomial itself serves as the smooth ambient
    extension used for gradients.  Ellipsoid profiles with semiaxes r_j are
    f = q^{-1/2} for the quadratic q = sum |z_j|^2 / r_j^2, so the domain is
    the exact ellipsoid.
    """

    def __init__(self, n: int, kind: str, poly: AmbientPoly | None = None,
                 radii=None, label: str = ""):
        self.n = n
        self.kind = kind
        self.poly = poly
        self.radii = None if radii is None else np.asarray(radii, dtype=np.float64)
        self.label = label or kind
        self._bounds = None
        lo, _ = self.min_max()
        if lo <= DEFAULTS.profile_positivity_floor:
            raise NonPositiveProfileError(f"profile minimum {lo:.3e} is not positive")

    # constructors -------------------------------------------------------

    @classmethod
    def round(cls, n: int = 2) -> "RadialProfile":
        return cls(n, "poly", poly=AmbientPoly.constant(2 * n, 1.0), label="round")

    @classmethod
    def from_terms(cls, n: int, terms, label: str = "") -> "RadialProfile":
        """terms: iterable of (exponent multi-index over 2n real coords, coefficient)."""
        pert = AmbientPoly.from_terms(2 * n, terms)
        return cls(n, "poly", poly=AmbientPoly.constant(2 * n, 1.0) + pert,
                   label=label or "poly")

    @classmethod
    def random_perturbation(cls, n: int, eps: float, degree: int = 4,
                            seed: int = 0) -> "RadialProfile":
        """f = 1 + eps * g with g a random polynomial normalized to sup 1."""
        rng = np.random.default_rng(seed)
        g = random_poly(2 * n, degree, rng, min_degree=1)
        sup = float(np.abs(g(complex_to_real(_probe_cloud(n)))).max())
        if sup == 0.0:
            raise ValueError("degenerate random draw")
        pert = (eps / sup) * g
        return cls(n, "poly", poly=AmbientPoly.constant(2 * n, 1.0) + pert,
                   label=f"random(seed={seed},eps={eps:g})")

    @classmethod
    def random_invariant(cls, eps: float, degree: int = 4, seed: int = 0) -> "RadialProfile":
        """Circle-invariant f = 1 + eps * g, g built from the quadratic invariants.

        Invariant profiles are the decidable family: the perturbed form is
        Zoll exactly when g is constant on the sphere, and every critical
        fiber carries a closed orbit of period pi f^2 on the nose.  n = 2.
        """
        rng = np.random.default_rng(seed)
        basis = invariant_quadratics()
        g = AmbientPoly.zero(4)
        for order in range(1, max(1, degree // 2) + 1):
            for combo in _exponent_table(3, order):
                if sum(combo) != order:
                    continue
                term = AmbientPoly.constant(4, rng.standard_normal())
                for q, e in zip(basis, combo):
                    for _ in range(e):
                        term = term * q
                g = g + term
        sup = float(np.abs(g(complex_to_real(_probe_cloud(2)))).max())
        if sup == 0.0:
            raise ValueError("degenerate random draw")
        pert = (eps / sup) * g
        return cls(2, "poly", poly=AmbientPoly.constant(4, 1.0) + pert,
                   label=f"invariant(seed={seed},eps={eps:g})")

    @classmethod
    def ellipsoid(cls, radii) -> "RadialProfile":
        radii = np.asarray(radii, dtype=np.float64)
        n = radii.size
        terms = []
        for j in range(n):
            for c in (2 * j, 2 * j + 1):
                e = [0] * (2 * n)
                e[c] = 2
                terms.append((tuple(e), 1.0 / radii[j] ** 2))
        q = AmbientPoly.from_terms(2 * n, terms)
        return cls(n, "ellipsoid", poly=q, radii=radii,
                   label="ellipsoid(" + ",".join(f"{r:g}" for r in radii) + ")")

    @classmethod
    def from_json_dict(cls, d: dict) -> "RadialProfile":
        kind = d.get("type", "poly")
        if kind == "ellipsoid":
            return cls.ellipsoid(d["radii"])
        n = int(d["n"])
        terms = [(tuple(int(e) for e in t["exponents"]), float(t["coefficient"]))
                 for t in d.get("terms", [])]
        return cls.from_terms(n, terms, label=d.get("label", ""))

    def to_json_dict(self) -> dict:
        if self.kind == "ellipsoid":
            return {"type": "ellipsoid", "radii": [float(r) for r in self.radii]}
        pert = self.poly - AmbientPoly.constant(2 * self.n, 1.0)
        return {"type": "poly", "n": self.n,
                "terms": [{"exponents": list(e), "coefficient": c}
                          for e, c in pert.terms() if c != 0.0]}

    # evaluation ----------------------------------------------------------

    def value(self, z) -> np.ndarray:
        """f at sphere points (complex (..., n) or interleaved real)."""
        x = complex_to_real(as_complex(z))
        if self.kind == "poly":
            return self.poly(x)
        return self.poly(x) ** -0.5

    def gradient(self, z) -> np.ndarray:
        """Ambient gradient of the extension, as a complex vector."""
        x = complex_to_real(as_complex(z))
        if self.kind == "poly":
            g = self.poly.grad(x)
        else:
            q = self.poly(x)
            g = -0.5 * q[..., None] ** -1.5 * self.poly.grad(x)
        return real_to_complex(g)

    def min_max(self) -> tuple[float, float]:
        if self._bounds is None:
            vals = self.value(_probe_cloud(self.n))
            self._bounds = (float(vals.min()), float(vals.max()))
        return self._bounds

    def boundary_point(self, z) -> np.ndarray:
        """Radial graph map z -> f(z) z from the sphere to the boundary."""
        z = check_on_sphere(z)
        return self.value(z)[..., None] * z

    def field_on_grid(self, grid: HopfGrid) -> SphereField:
        return SphereField.from_callable(grid, self.value, "scalar")

    def __repr__(self):
        return f"RadialProfile({self.label}, n={self.n})"


class StarshapedDomain:
    """2-homogeneous Hamiltonian picture of a radial profile."""

    def __init__(self, profile: RadialProfile):
        self.profile = profile
        self.n = profile.n

    def h_value(self, p) -> np.ndarray:
        p = as_complex(p)
        r = np.linalg.norm(p, axis=-1)
        zhat = p / r[..., None]
        return r ** 2 / self.profile.value(zhat) ** 2

    def h_gradient(self, p) -> np.ndarray:
        """Gradient of H, complex representation.

        H = |p|^2 g(p/|p|) with g = f^{-2}; only tangential sphere data of g
        enters, so any smooth extension of f gives the same result.
        """
        p = as_complex(p)
        r = np.linalg.norm(p, axis=-1)[..., None]
        zhat = p / r
        f = self.profile.value(zhat)[..., None]
        gf = self.profile.gradient(zhat)
        gval = f ** -2.0
        ggrad = -2.0 * f ** -3.0 * gf
        radial = np.sum(ggrad.real * zhat.real + ggrad.imag * zhat.imag, axis=-1)[..., None]
        gtan = ggrad - radial * zhat
        return 2.0 * gval * p + (r ** 2) * gtan / r

    def reeb_ambient(self, p) -> np.ndarray:
        """Reeb field on the boundary (Hamiltonian field of H), J grad H = i grad H."""
        return 1j * self.h_gradient(p)

    def h_hessian_fd(self, p, step: float | None = None) -> np.ndarray:
        """Central-difference Hessian in real coordinates, for diagnostics."""
        p = np.atleast_2d(complex_to_real(as_complex(p)))
        step = DEFAULTS.genfun_fd_scale * (1.0 + np.linalg.norm(p, axis=-1)) if step is None \
            else np.full(p.shape[0], step)
        dim = p.shape[-1]
        out = np.empty(p.shape[:-1] + (dim, dim))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1.0
            gp = complex_to_real(self.h_gradient(real_to_complex(p + step[:, None] * e)))
            gm = complex_to_real(self.h_gradient(real_to_complex(p - step[:, None] * e)))
            out[..., i, :] = (gp - gm) / (2.0 * step[:, None])
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def check_on_boundary(self, p, tol: float | None = None):
        tol = DEFAULTS.hypersurface_tol if tol is None else tol
        h = self.h_value(p)
        worst = float(np.abs(h - 1.0).max())
        if worst > tol:
            raise OffBoundaryError(f"point off the boundary: |H - 1| = {worst:.3e}")

    def project_to_boundary(self, p) -> np.ndarray:
        """Exact radial projection onto {H = 1}: p / sqrt(H(p))."""
        p = as_complex(p)
        return p / np.sqrt(self.h_value(p))[..., None]


def reeb_field_sphere(profile: RadialProfile):
    """Reeb field of f^2 alpha0 on the unit sphere, as a callable on points.

    Closed form (R0 - 2i P_xi grad f / f) / f^2; conjugate to the boundary
    Reeb dynamics through the radial graph map.
    """
    def field(z):
        z = as_complex(z)
        f = profile.value(z)[..., None]
        gf = profile.gradient(z)
        herm = np.sum(gf * np.conj(z), axis=-1)[..., None]
        gxi = gf - herm * z
        return (2j * z - 2j * gxi / f) / f ** 2
    return field


def contact_volume(profile: RadialProfile, grid: HopfGrid | None = None) -> float:
    """Volume of the contact form f^2 alpha0, equal to the integral of f^{2n}.

    The wedge power of f^2 alpha0 collapses pointwise to f^{2n} times the
    round volume form because alpha ^ alpha = 0 kills every df cross term.
    """
    if grid is None:
        grid = HopfGrid(n=profile.n)
    vals = profile.value(grid.collocation()) ** (2 * profile.n)
    return grid.quadrature_samples(vals)


def ellipsoid_data(radii) -> dict:
    """Closed forms for the ellipsoid: spectrum basics, volume, systolic ratio."""
    radii = np.asarray(radii, dtype=np.float64)
    n = radii.size
    periods = math.pi * radii ** 2
    volume = math.pi ** n * float(np.prod(radii ** 2))
    t_min = float(periods.min())
    seeds = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        seeds[j, j] = radii[j]
    return {
        "periods": [float(t) for t in periods],
        "t_min": t_min,
        "volume": volume,
        "rho_sys": t_min ** n / volume,
        "orbit_seeds": seeds,
    }
