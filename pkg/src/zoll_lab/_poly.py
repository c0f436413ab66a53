"""Real multivariate polynomials with analytic derivatives.

Shared engine for profile perturbations, synthetic test fields, and the
global sphere interpolant.  Everything is stored as an exponent table plus
a coefficient vector, so sums, products, and partial derivatives stay exact.
"""

from __future__ import annotations

import numpy as np


class AmbientPoly:
    """Polynomial in ``dim`` real ambient coordinates.

    Terms are rows of an integer exponent matrix; duplicate rows are merged
    on construction.  Evaluation broadcasts over any leading shape.
    """

    def __init__(self, dim: int, exponents, coeffs):
        exponents = np.atleast_2d(np.asarray(exponents, dtype=np.int64))
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        if exponents.shape[0] != coeffs.shape[0]:
            raise ValueError("exponent rows and coefficients disagree")
        if exponents.shape[1] != dim:
            raise ValueError(f"exponent rows must have length {dim}")
        if np.any(exponents < 0):
            raise ValueError("negative exponents are not allowed")
        uniq, inv = np.unique(exponents, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inv.ravel(), coeffs)
        keep = np.abs(merged) > 0.0
        if not np.any(keep):
            uniq = np.zeros((1, dim), dtype=np.int64)
            merged = np.zeros(1)
            keep = np.array([True])
        self.dim = dim
        self.exponents = uniq[keep]
        self.coeffs = merged[keep]
        self._partials: tuple | None = None

    @classmethod
    def zero(cls, dim: int) -> "AmbientPoly":
        return cls(dim, np.zeros((1, dim), dtype=np.int64), [0.0])

    @classmethod
    def constant(cls, dim: int, c: float) -> "AmbientPoly":
        return cls(dim, np.zeros((1, dim), dtype=np.int64), [float(c)])

    @classmethod
    def coordinate(cls, dim: int, i: int) -> "AmbientPoly":
        e = np.zeros((1, dim), dtype=np.int64)
        e[0, i] = 1
        return cls(dim, e, [1.0])

    @classmethod
    def from_terms(cls, dim: int, terms) -> "AmbientPoly":
        """terms: iterable of (exponent tuple, coefficient)."""
        exps = [t[0] for t in terms]
        cfs = [t[1] for t in terms]
        if not exps:
            return cls.zero(dim)
        return cls(dim, exps, cfs)

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max())

    def terms(self):
        return [(tuple(int(e) for e in row), float(c))
                for row, c in zip(self.exponents, self.coeffs)]

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.shape[-1] != self.dim:
            raise ValueError(f"points must have last axis {self.dim}")
        # power tables per coordinate; float ** int on full monomial grids is
        # the hot spot when this sits inside an ODE right-hand side
        flat = pts.reshape(-1, self.dim)
        mono = np.ones((flat.shape[0], self.exponents.shape[0]))
        for i in range(self.dim):
            col = self.exponents[:, i]
            emax = int(col.max())
            if emax == 0:
                continue
            pw = np.empty((flat.shape[0], emax + 1))
            pw[:, 0] = 1.0
            np.cumprod(np.broadcast_to(flat[:, i][:, None],
                                       (flat.shape[0], emax)), axis=1, out=pw[:, 1:])
            mono *= pw[:, col]
        return (mono @ self.coeffs).reshape(pts.shape[:-1])

    def derivative(self, i: int) -> "AmbientPoly":
        e = self.exponents
        mask = e[:, i] > 0
        if not np.any(mask):
            return AmbientPoly.zero(self.dim)
        new_e = e[mask].copy()
        new_c = self.coeffs[mask] * new_e[:, i]
        new_e[:, i] -= 1
        return AmbientPoly(self.dim, new_e, new_c)

    def _first_partials(self) -> tuple:
        # instances are immutable once built, so the lazy cache is safe
        if self._partials is None:
            self._partials = tuple(self.derivative(i) for i in range(self.dim))
        return self._partials

    def grad(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = np.empty(pts.shape)
        for i, d in enumerate(self._first_partials()):
            out[..., i] = d(pts)
        return out

    def hess(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = np.empty(pts.shape[:-1] + (self.dim, self.dim))
        firsts = self._first_partials()
        for i in range(self.dim):
            seconds = firsts[i]._first_partials()
            for j in range(i, self.dim):
                v = seconds[j](pts)
                out[..., i, j] = v
                if j != i:
                    out[..., j, i] = v
        return out

    def __add__(self, other):
        other = self._coerce(other)
        return AmbientPoly(self.dim,
                           np.vstack([self.exponents, other.exponents]),
                           np.concatenate([self.coeffs, other.coeffs]))

    def __sub__(self, other):
        other = self._coerce(other)
        return self + (-1.0) * other

    def __mul__(self, other):
        if np.isscalar(other):
            return AmbientPoly(self.dim, self.exponents, self.coeffs * other)
        other = self._coerce(other)
        exps = (self.exponents[:, None, :] + other.exponents[None, :, :])
        cfs = self.coeffs[:, None] * other.coeffs[None, :]
        return AmbientPoly(self.dim, exps.reshape(-1, self.dim), cfs.ravel())

    __rmul__ = __mul__

    def _coerce(self, other):
        if np.isscalar(other):
            return AmbientPoly.constant(self.dim, float(other))
        if not isinstance(other, AmbientPoly) or other.dim != self.dim:
            raise TypeError("operands must share the ambient dimension")
        return other

    def __repr__(self):
        return f"AmbientPoly(dim={self.dim}, n_terms={len(self.coeffs)}, degree={self.degree})"


def random_poly(dim: int, degree: int, rng, scale: float = 1.0,
                min_degree: int = 0) -> AmbientPoly:
    """Random polynomial with iid normal coefficients over all monomials
    of total degree in [min_degree, degree]."""
    exps = [e for e in _exponent_table(dim, degree) if sum(e) >= min_degree]
    coeffs = rng.standard_normal(len(exps)) * scale / max(1, len(exps)) ** 0.5
    return AmbientPoly(dim, np.array(exps, dtype=np.int64), coeffs)


def _exponent_table(dim: int, degree: int):
    """All exponent tuples with total degree <= degree, lexicographic."""
    if dim == 1:
        return [(d,) for d in range(degree + 1)]
    out = []
    for d in range(degree + 1):
        for rest in _exponent_table(dim - 1, degree - d):
            if d + sum(rest) <= degree:
                out.append((d,) + rest)
    return out


def homogeneous_exponents(dim: int, degree: int):
    """Exponent tuples with total degree exactly ``degree``."""
    return [e for e in _exponent_table(dim, degree) if sum(e) == degree]


def invariant_quadratics() -> list[AmbientPoly]:
    """The three quadratic invariants of the circle action on C^2."""
    x1 = AmbientPoly.coordinate(4, 0)
    y1 = AmbientPoly.coordinate(4, 1)
    x2 = AmbientPoly.coordinate(4, 2)
    y2 = AmbientPoly.coordinate(4, 3)
    l1 = 2.0 * (x1 * x2 + y1 * y2)
    l2 = 2.0 * (y1 * x2 - x1 * y2)
    l3 = x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2
    return [l1, l2, l3]
