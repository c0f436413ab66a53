"""Shadow volumes of symplectic balls on even-dimensional subspaces.

The shadow of a domain on a symplectic 2k-subspace V is its image under the
projection P_V along the symplectic orthogonal complement, measured with the
restriction of omega^k (that is, k! w(V) times Lebesgue measure in an
orthonormal basis of V).  For a linear symplectomorphism Phi the shadow of
the unit ball is an explicit ellipsoid, its omega-volume is pi^k divided by
the anisotropy weight of Phi^{-1}(V), and two independent routes to that
number are kept side by side here:

  * a geometric closed form (ellipsoid determinant),
  * Monte Carlo counting with the membership test "the least-norm preimage
    of the point under P_V Phi lies in the ball", which is the minimum of
    |x| over the symplectic-orthogonal fiber.

A box-counting variant accepts arbitrary (nonlinear) maps, at much coarser
accuracy, for probing how far the lower bound pi^k survives C^3-small
nonlinear perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .config import DEFAULTS
from .symplectic import (DegenerateSubspaceError, LinearSymplectomorphism, Subspace,
                         symplectic_projector, wirtinger_weight)


def ball_sample(n: int, count: int, rng) -> np.ndarray:
    """Uniform points of the unit ball in R^{2n}."""
    x = rng.standard_normal((count, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = rng.random(count) ** (1.0 / (2 * n))
    return x * r[:, None]


def random_symplectic_subspace(n: int, k: int, rng,
                               weight_floor: float | None = None,
                               max_tries: int = 200) -> Subspace:
    """Random 2k-subspace with anisotropy weight above the floor.

    Gaussian bases concentrate near weights small enough to make projector
    conditioning painful; resampling below the floor keeps Monte Carlo
    comparisons meaningful without biasing the equality tests, which build
    their subspaces explicitly.
    """
    floor = DEFAULTS.shadow_floor if weight_floor is None else weight_floor
    for _ in range(max_tries):
        basis = rng.standard_normal((2 * n, 2 * k))
        try:
            sub = Subspace(basis)
        except DegenerateSubspaceError:
            continue
        if wirtinger_weight(sub) >= floor:
            return sub
    raise RuntimeError(f"no subspace with weight >= {floor} in {max_tries} draws")


def _shadow_matrix(phi: LinearSymplectomorphism, subspace: Subspace) -> np.ndarray:
    """Coordinates of P_V Phi in an orthonormal basis of V: a 2k x 2n matrix."""
    p = symplectic_projector(subspace)
    return subspace.onb.T @ p @ phi.matrix


def shadow_volume_formula(phi: LinearSymplectomorphism, subspace: Subspace) -> float:
    """Theorem route: pi^k / w(Phi^{-1} V)."""
    k = subspace.k
    w_pre = wirtinger_weight(phi.pullback_subspace(subspace))
    if w_pre <= 0.0:
        raise DegenerateSubspaceError("preimage subspace is not symplectic")
    return math.pi ** k / w_pre


def shadow_volume_ellipsoid(phi: LinearSymplectomorphism, subspace: Subspace) -> float:
    """Geometric route: the shadow is the ellipsoid {c : c^T M^{-1} c <= 1}
    with M = A A^T for A = P_V Phi in orthonormal V-coordinates, so its
    omega-volume is w(V) pi^k sqrt(det M)."""
    k = subspace.k
    a = _shadow_matrix(phi, subspace)
    m = a @ a.T
    det = float(np.linalg.det(m))
    return wirtinger_weight(subspace) * math.pi ** k * math.sqrt(max(det, 0.0))


@dataclass
class ShadowMC:
    exact: float
    mc: float
    stderr: float
    w: float
    w_preimage: float
    samples: int
    seed: int
    box_volume: float
    hit_fraction: float

    def to_json_dict(self) -> dict:
        return {key: (float(v) if isinstance(v, (int, float)) else v)
                for key, v in asdict(self).items()}


def _bounding_box(points: np.ndarray, margin: float) -> tuple[np.ndarray, np.ndarray]:
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    pad = margin * (hi - lo)
    return lo - pad, hi + pad


def shadow_volume_mc(phi: LinearSymplectomorphism, subspace: Subspace,
                     samples: int | None = None, seed: int = 0) -> ShadowMC:
    """Monte Carlo estimate of the shadow omega-volume of the unit ball.

    Membership of a point of V: the least-norm preimage under P_V Phi must
    lie in the ball, equivalently c^T (A A^T)^{-1} c <= 1.  The sample box
    comes from directional support probes with a safety margin.
    """
    samples = DEFAULTS.mc_default_samples if samples is None else samples
    rng = np.random.default_rng(seed)
    k = subspace.k
    a = _shadow_matrix(phi, subspace)
    minv = np.linalg.inv(a @ a.T)

    # support probes: max <c, d> over the shadow is |A^T d|
    dirs = rng.standard_normal((DEFAULTS.bounding_directions, 2 * k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    support = np.linalg.norm(dirs @ a, axis=1)
    probe_pts = dirs * support[:, None]
    lo, hi = _bounding_box(probe_pts, DEFAULTS.bounding_margin)
    box_volume = float(np.prod(hi - lo))

    pts = lo + rng.random((samples, 2 * k)) * (hi - lo)
    quad = np.einsum("si,ij,sj->s", pts, minv, pts)
    hits = quad <= 1.0
    frac = float(hits.mean())
    leb = box_volume * frac
    stderr_leb = box_volume * math.sqrt(max(frac * (1.0 - frac), 1e-300) / samples)
    wv = wirtinger_weight(subspace)
    scale = math.factorial(k) * wv
    return ShadowMC(
        exact=shadow_volume_formula(phi, subspace),
        mc=scale * leb,
        stderr=scale * stderr_leb,
        w=wv,
        w_preimage=wirtinger_weight(phi.pullback_subspace(subspace)),
        samples=samples,
        seed=seed,
        box_volume=box_volume,
        hit_fraction=frac,
    )


def shadow_volume_nonlinear_mc(phi_map, n: int, subspace: Subspace,
                               samples: int | None = None, seed: int = 0,
                               cells_per_axis: int | None = None) -> dict:
    """Box-counting shadow volume for an arbitrary map of the unit ball.

    phi_map takes complex points (..., n) and returns their images.  Images
    are projected symplectically to V and binned; the shadow volume is the
    count of occupied cells times the cell volume, times k! w(V).  Accuracy
    is limited by the grid (k = 1 uses the standard 200 cells per axis; for
    k = 2 the resolution is scaled down so the sample budget can populate
    the 4-dimensional grid, which keeps the estimate meaningful but coarse).
    """
    samples = DEFAULTS.mc_default_samples if samples is None else samples
    rng = np.random.default_rng(seed)
    k = subspace.k
    if cells_per_axis is None:
        if k == 1:
            cells_per_axis = DEFAULTS.nonlinear_grid_per_axis
        else:
            cells_per_axis = int(max(8, min(64, (samples / 10.0) ** (1.0 / (2 * k)))))
    p = symplectic_projector(subspace)
    q = subspace.onb

    from .symplectic import complex_to_real, real_to_complex
    x = ball_sample(n, samples, rng)
    images = phi_map(real_to_complex(x))
    coords = complex_to_real(np.asarray(images, dtype=np.complex128)) @ p.T @ q

    probe = coords[:min(DEFAULTS.bounding_directions, samples)]
    lo, hi = _bounding_box(probe, DEFAULTS.bounding_margin)
    width = hi - lo
    cell_volume = float(np.prod(width / cells_per_axis))

    idx = np.floor((coords - lo) / width * cells_per_axis).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < cells_per_axis), axis=1)
    idx = idx[inside]
    flat = np.zeros(len(idx), dtype=np.int64)
    for d in range(2 * k):
        flat = flat * cells_per_axis + idx[:, d]
    occupied = np.unique(flat).size
    wv = wirtinger_weight(subspace)
    vol = math.factorial(k) * wv * occupied * cell_volume
    return {
        "volume": float(vol),
        "occupied_cells": int(occupied),
        "cells_per_axis": int(cells_per_axis),
        "cell_volume": cell_volume,
        "samples": int(samples),
        "seed": int(seed),
        "w": float(wv),
        "clipped_fraction": float(1.0 - inside.mean()),
    }


def equality_case_check(phi: LinearSymplectomorphism, subspace: Subspace,
                        probes: int = 200, seed: int = 0) -> dict:
    """Probe the set identity behind the equality case of the shadow bound.

    When Phi^{-1}(V) is a complex subspace the shadow of the ball is exactly
    Phi(B intersect Phi^{-1}(V)).  Both containments are probed: points of
    the ball inside Phi^{-1}(V) must be fixed by the projection after
    mapping, and an arbitrary ball point must project to the image of its
    own component in Phi^{-1}(V), which the complex case keeps inside the
    ball.  The shadow volume itself must come out as pi^k.
    """
    from .symplectic import complex_subspace_distance

    pre = phi.pullback_subspace(subspace)
    dist = complex_subspace_distance(pre)
    if dist > 1e-8:
        raise ValueError(f"equality case needs a complex preimage subspace; "
                         f"distance {dist:.3e}")
    rng = np.random.default_rng(seed)
    n, k = phi.n, subspace.k
    p_v = symplectic_projector(subspace)
    p_pre = symplectic_projector(pre)

    # direction 1: z in B cap Phi^{-1}(V)  =>  P_V Phi z = Phi z
    disc = ball_sample(k, probes, rng) @ pre.onb.T
    img = phi(disc)
    defect_inside = float(np.abs(img @ p_v.T - img).max())

    # direction 2: any z in B  =>  P_V Phi z = Phi z1 with z1 = P_{pre} z in B
    z = ball_sample(n, probes, rng)
    z1 = z @ p_pre.T
    defect_split = float(np.abs(phi(z) @ p_v.T - phi(z1)).max())
    radius_excess = float(max(np.linalg.norm(z1, axis=1).max() - 1.0, 0.0))

    vol = shadow_volume_formula(phi, subspace)
    defect = max(defect_inside, defect_split)
    return {
        "complex_distance": dist,
        "projection_defect": defect,
        "radius_excess": radius_excess,
        "shadow_volume": vol,
        "volume_gap": abs(vol - math.pi ** k),
        "passes": bool(defect < 1e-8 and radius_excess < 1e-9
                       and abs(vol - math.pi ** k) < 1e-8 * math.pi ** k),
    }


def coercivity_profile(phi: LinearSymplectomorphism, subspace_family) -> list[float]:
    """Shadow volumes along a family of subspaces, for divergence probes."""
    return [shadow_volume_formula(phi, v) for v in subspace_family]
