"""Linear symplectic algebra on R^{2n}.

Coordinates are interleaved as (x1, y1, ..., xn, yn), so the standard complex
structure J acts as multiplication by i on each pair and the standard form is
omega(u, v) = <J u, v>.  Subspaces are held as orthonormalized bases; the
anisotropy weight of an even-dimensional subspace is evaluated with the
permutation expansion of omega^k, which is exact and affordable for k <= 3.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
import math

import numpy as np
from scipy.linalg import expm

from .config import DEFAULTS


class DimensionMismatchError(ValueError):
    pass


class DegenerateSubspaceError(ValueError):
    pass


def standard_j(n: int) -> np.ndarray:
    """Matrix of multiplication by i in interleaved real coordinates."""
    j = np.zeros((2 * n, 2 * n))
    for k in range(n):
        j[2 * k, 2 * k + 1] = -1.0
        j[2 * k + 1, 2 * k] = 1.0
    return j


def omega0(u, v) -> np.ndarray:
    """Standard symplectic form, broadcasting over leading axes."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape[-1] != v.shape[-1] or u.shape[-1] % 2:
        raise DimensionMismatchError("arguments must share an even last axis")
    ju = np.empty_like(u)
    ju[..., 0::2] = -u[..., 1::2]
    ju[..., 1::2] = u[..., 0::2]
    return np.sum(ju * v, axis=-1)


def real_to_complex(v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] % 2:
        raise DimensionMismatchError("real vectors must have even length")
    return v[..., 0::2] + 1j * v[..., 1::2]


def complex_to_real(z):
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def unitary_as_real(u: np.ndarray) -> np.ndarray:
    """Real 2n x 2n representation of a complex n x n matrix."""
    u = np.asarray(u, dtype=np.complex128)
    n = u.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[0::2, 0::2] = u.real
    out[1::2, 1::2] = u.real
    out[0::2, 1::2] = -u.imag
    out[1::2, 0::2] = u.imag
    return out


def random_unitary(n: int, rng) -> np.ndarray:
    """Haar-ish unitary from QR of a complex Gaussian matrix."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def modified_gram_schmidt(basis: np.ndarray, rel_floor: float | None = None) -> np.ndarray:
    """Orthonormalize columns, two passes, raising on near dependence."""
    rel_floor = DEFAULTS.gram_rel_floor if rel_floor is None else rel_floor
    b = np.array(basis, dtype=np.float64)
    if b.ndim != 2:
        raise DimensionMismatchError("basis must be a 2d array of columns")
    scale = np.linalg.norm(b, axis=0).max()
    if scale == 0.0:
        raise DegenerateSubspaceError("zero basis")
    q = np.empty_like(b)
    for i in range(b.shape[1]):
        v = b[:, i].copy()
        for _ in range(2):  # re-orthogonalization pass for stability
            for j in range(i):
                v -= (q[:, j] @ v) * q[:, j]
        norm = np.linalg.norm(v)
        if norm <= math.sqrt(rel_floor) * scale:
            raise DegenerateSubspaceError(
                f"column {i} is dependent on the previous ones (residual {norm:.2e})")
        q[:, i] = v / norm
    return q


class Subspace:
    """Even-dimensional linear subspace of R^{2n}, stored orthonormalized."""

    def __init__(self, basis, rel_floor: float | None = None):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2:
            raise DimensionMismatchError("basis must have shape (2n, 2k)")
        if basis.shape[0] % 2 or basis.shape[1] % 2:
            raise DimensionMismatchError("ambient and subspace dimensions must be even")
        if basis.shape[1] > basis.shape[0]:
            raise DimensionMismatchError("more columns than ambient dimension")
        gram = basis.T @ basis
        eig = np.linalg.eigvalsh(gram)
        rel_floor = DEFAULTS.gram_rel_floor if rel_floor is None else rel_floor
        if eig[0] <= rel_floor * max(eig[-1], 1e-300):
            raise DegenerateSubspaceError(
                f"basis nearly dependent: gram eigenvalue ratio {eig[0] / eig[-1]:.2e}")
        self.raw_basis = basis
        self.onb = modified_gram_schmidt(basis, rel_floor)

    @property
    def n(self) -> int:
        return self.raw_basis.shape[0] // 2

    @property
    def k(self) -> int:
        return self.raw_basis.shape[1] // 2

    def projector_orthogonal(self) -> np.ndarray:
        return self.onb @ self.onb.T

    def contains(self, v, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=np.float64)
        res = v - self.projector_orthogonal() @ v
        return float(np.linalg.norm(res)) <= tol * max(1.0, np.linalg.norm(v))


@lru_cache(maxsize=8)
def _signed_permutations(two_k: int):
    """List of (sign, index tuple) over S_{2k}; parity by inversion count."""
    out = []
    for p in permutations(range(two_k)):
        inv = sum(1 for a in range(two_k) for b in range(a + 1, two_k) if p[a] > p[b])
        out.append((-1.0 if inv % 2 else 1.0, p))
    return out


def omega_power(vectors: np.ndarray) -> float:
    """Evaluate omega^k on 2k vectors via the permutation expansion.

    vectors: array (2n, 2k), columns are the arguments in order.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    two_k = vectors.shape[1]
    if two_k % 2:
        raise DimensionMismatchError("need an even number of vectors")
    k = two_k // 2
    if k > 3:
        raise NotImplementedError("permutation expansion supported for k <= 3")
    pair = np.empty((two_k, two_k))
    for a in range(two_k):
        pair[a] = omega0(np.broadcast_to(vectors[:, a], (two_k, vectors.shape[0])),
                         vectors.T)
    total = 0.0
    for sign, p in _signed_permutations(two_k):
        term = 1.0
        for i in range(k):
            term *= pair[p[2 * i], p[2 * i + 1]]
        total += sign * term
    return total / (2.0 ** k)


def wirtinger_weight(subspace: Subspace | np.ndarray) -> float:
    """Anisotropy weight: |omega^k on an orthonormal basis| / k!.

    Equals 1 exactly on complex subspaces and 0 on isotropic-pair spans;
    always lies in [0, 1] up to roundoff.
    """
    if not isinstance(subspace, Subspace):
        subspace = Subspace(subspace)
    k = subspace.k
    val = omega_power(subspace.onb) / math.factorial(k)
    return abs(val)


def symplectic_projector(subspace: Subspace | np.ndarray) -> np.ndarray:
    """Projector onto the subspace along its omega-orthogonal complement.

    Exists only when omega restricts nondegenerately; otherwise the pairing
    matrix is singular and DegenerateSubspaceError is raised.
    """
    if not isinstance(subspace, Subspace):
        subspace = Subspace(subspace)
    b = subspace.onb
    j = standard_j(subspace.n)
    pairing = b.T @ j.T @ b
    # the pairing matrix is antisymmetric 2k x 2k; singular <-> omega degenerate on V
    if abs(np.linalg.det(pairing)) < 1e-12:
        raise DegenerateSubspaceError("omega restricts degenerately, no symplectic projector")
    return b @ np.linalg.solve(pairing, b.T @ j.T)


def complex_subspace_distance(subspace: Subspace | np.ndarray) -> float:
    """Spectral norm of (I - Pi) J Pi for the orthogonal projector Pi.

    Zero iff the subspace is J-invariant, i.e. a complex subspace.
    """
    if not isinstance(subspace, Subspace):
        subspace = Subspace(subspace)
    pi = subspace.projector_orthogonal()
    j = standard_j(subspace.n)
    residual = (np.eye(2 * subspace.n) - pi) @ j @ pi
    return float(np.linalg.norm(residual, 2))


def is_complex_subspace(subspace: Subspace | np.ndarray, tol: float | None = None) -> bool:
    tol = DEFAULTS.complex_subspace_tol if tol is None else tol
    return complex_subspace_distance(subspace) < tol


class LinearSymplectomorphism:
    """Invertible linear map validated against Phi^T J Phi = J."""

    def __init__(self, matrix, tol: float | None = None):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise DimensionMismatchError("matrix must be square of even size")
        tol = DEFAULTS.symplectic_matrix_tol if tol is None else tol
        n = matrix.shape[0] // 2
        j = standard_j(n)
        defect = np.abs(matrix.T @ j @ matrix - j).max()
        if defect > tol:
            raise ValueError(f"matrix is not symplectic: defect {defect:.3e} > {tol:.1e}")
        self.matrix = matrix
        self.n = n
        self.symplectic_defect = float(defect)

    def __call__(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.matrix.T

    def inverse(self) -> "LinearSymplectomorphism":
        j = standard_j(self.n)
        return LinearSymplectomorphism(j.T @ self.matrix.T @ j, tol=10 * DEFAULTS.symplectic_matrix_tol)

    def apply_to_subspace(self, subspace: Subspace) -> Subspace:
        return Subspace(self.matrix @ subspace.raw_basis)

    def pullback_subspace(self, subspace: Subspace) -> Subspace:
        return self.inverse().apply_to_subspace(subspace)


def random_symplectic(n: int, spread: float = 1.0, seed: int | None = None,
                      rng=None) -> LinearSymplectomorphism:
    """exp(J S) for a random symmetric S with entries uniform in [-spread, spread]."""
    if rng is None:
        rng = np.random.default_rng(seed)
    a = rng.uniform(-spread, spread, size=(2 * n, 2 * n))
    s = 0.5 * (a + a.T)
    phi = expm(standard_j(n) @ s)
    return LinearSymplectomorphism(phi, tol=max(DEFAULTS.symplectic_matrix_tol,
                                                1e-12 * np.exp(2 * n * spread)))
