"""Shadow volumes of the ball: exact routes, Monte Carlo, equality cases."""

import math

import numpy as np
import pytest

from zoll_lab.generating import GeneratedMap, GeneratingFunction, cutoff_radial
from zoll_lab.shadows import (ball_sample, coercivity_profile,
                              equality_case_check, random_symplectic_subspace,
                              shadow_volume_ellipsoid, shadow_volume_formula,
                              shadow_volume_mc, shadow_volume_nonlinear_mc)
from zoll_lab.symplectic import (DegenerateSubspaceError,
                                 LinearSymplectomorphism, Subspace,
                                 complex_to_real, random_symplectic,
                                 real_to_complex, unitary_as_real,
                                 wirtinger_weight)

COMPLEX_LINE = Subspace(np.eye(4)[:, :2])
IDENTITY = LinearSymplectomorphism(np.eye(4))


def random_unitary_map(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(a)
    return LinearSymplectomorphism(unitary_as_real(q))


# --------------------------------------------------------------------------
# sampling


def test_ball_sample_distribution():
    rng = np.random.default_rng(0)
    x = ball_sample(2, 50_000, rng)
    r = np.linalg.norm(x, axis=1)
    assert r.max() <= 1.0
    # uniform ball in R^4: P(|x| <= s) = s^4, so E r = 4/5
    assert abs(r.mean() - 0.8) < 0.005


def test_random_subspace_respects_weight_floor():
    rng = np.random.default_rng(1)
    for _ in range(20):
        sub = random_symplectic_subspace(3, 2, rng, weight_floor=0.2)
        assert wirtinger_weight(sub) >= 0.2


# --------------------------------------------------------------------------
# exact routes


def test_identity_shadow_is_pi():
    assert shadow_volume_formula(IDENTITY, COMPLEX_LINE) == math.pi
    assert abs(shadow_volume_ellipsoid(IDENTITY, COMPLEX_LINE) - math.pi) < 1e-14


def test_stretch_with_complex_preimage():
    # diag(2, 1/2, 1/2, 2) in (x1, y1, x2, y2): the shadow on the first
    # complex line is the area-pi ellipse with semiaxes 2 and 1/2
    stretch = LinearSymplectomorphism(np.diag([2.0, 0.5, 0.5, 2.0]))
    assert abs(shadow_volume_formula(stretch, COMPLEX_LINE) - math.pi) < 1e-14
    assert abs(shadow_volume_ellipsoid(stretch, COMPLEX_LINE) - math.pi) < 1e-14
    pre = stretch.pullback_subspace(COMPLEX_LINE)
    assert abs(wirtinger_weight(pre) - 1.0) < 1e-12


def test_lower_bound_and_route_agreement():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(1, n))
        phi = random_symplectic(n, spread=0.8, rng=rng)
        sub = random_symplectic_subspace(n, k, rng)
        exact = shadow_volume_formula(phi, sub)
        geo = shadow_volume_ellipsoid(phi, sub)
        assert exact >= math.pi ** k - 1e-9
        assert abs(exact - geo) <= 1e-8 * exact


def test_lagrangian_subspace_rejected():
    lagrangian = Subspace(np.eye(4)[:, [0, 2]])
    with pytest.raises(DegenerateSubspaceError):
        shadow_volume_formula(IDENTITY, lagrangian)


def test_unitary_equivariance():
    u = random_unitary_map(2, 3)
    phi = random_symplectic(2, spread=0.8, seed=9)
    sub = random_symplectic_subspace(2, 1, np.random.default_rng(3))
    lhs = shadow_volume_formula(LinearSymplectomorphism(u.matrix @ phi.matrix),
                                Subspace(u.matrix @ sub.raw_basis))
    rhs = shadow_volume_formula(phi, sub)
    assert abs(lhs - rhs) <= 1e-12 * rhs


# --------------------------------------------------------------------------
# Monte Carlo cross-checks


def test_mc_matches_exact_value():
    rng = np.random.default_rng(21)
    for i in range(8):
        n = 2 + (i % 2)
        k = 1 + (i % 2)
        phi = random_symplectic(n, spread=0.7, rng=rng)
        sub = random_symplectic_subspace(n, k, rng)
        r = shadow_volume_mc(phi, sub, samples=200_000, seed=100 + i)
        assert abs(r.mc - r.exact) <= max(3.0 * r.stderr, 0.015 * r.exact)
        assert r.exact >= math.pi ** k - 1e-9


def test_mc_stderr_scaling():
    r1 = shadow_volume_mc(IDENTITY, COMPLEX_LINE, samples=40_000, seed=4)
    r2 = shadow_volume_mc(IDENTITY, COMPLEX_LINE, samples=160_000, seed=4)
    assert 1.8 < r1.stderr / r2.stderr < 2.2


def test_mc_deterministic_and_serializable():
    phi = random_symplectic(2, spread=0.6, seed=5)
    sub = random_symplectic_subspace(2, 1, np.random.default_rng(6))
    a = shadow_volume_mc(phi, sub, samples=50_000, seed=8)
    b = shadow_volume_mc(phi, sub, samples=50_000, seed=8)
    assert a.mc == b.mc and a.hit_fraction == b.hit_fraction
    d = a.to_json_dict()
    assert set(d) == {"exact", "mc", "stderr", "w", "w_preimage", "samples",
                      "seed", "box_volume", "hit_fraction"}


# --------------------------------------------------------------------------
# coercivity and the equality case


def lagrangian_tilt_family(tvals):
    """Complex line tilted toward span(e_x1, e_x2) as t -> pi/2."""
    for t in tvals:
        b = np.zeros((4, 2))
        b[0, 0] = 1.0
        b[1, 1] = math.cos(t)
        b[2, 1] = math.sin(t)
        yield Subspace(b)


def test_coercivity_blows_up_near_lagrangian():
    prof = coercivity_profile(IDENTITY, lagrangian_tilt_family([0.0, 0.5, 1.0, 1.4, 1.54]))
    assert all(b > a for a, b in zip(prof, prof[1:]))
    assert abs(prof[0] - math.pi) < 1e-12
    assert prof[-1] > 10.0 * math.pi


def test_equality_case_identity():
    r = equality_case_check(IDENTITY, COMPLEX_LINE)
    assert r["passes"]
    assert r["projection_defect"] == 0.0
    assert r["volume_gap"] == 0.0


def test_equality_case_unitary():
    u = random_unitary_map(2, 3)
    r = equality_case_check(u, Subspace(u.matrix @ COMPLEX_LINE.raw_basis))
    assert r["passes"]
    assert r["projection_defect"] < 1e-12


def test_equality_case_pulled_line():
    phi = random_symplectic(2, spread=0.8, seed=9)
    r = equality_case_check(phi, phi.apply_to_subspace(COMPLEX_LINE))
    assert r["passes"]
    assert r["complex_distance"] < 1e-12
    assert r["projection_defect"] < 1e-10


def test_equality_case_rejects_non_complex_preimage():
    lagrangian = Subspace(np.eye(4)[:, [0, 2]])
    with pytest.raises(ValueError, match="complex preimage"):
        equality_case_check(IDENTITY, lagrangian)


# --------------------------------------------------------------------------
# nonlinear Monte Carlo


def test_nonlinear_mc_identity():
    r = shadow_volume_nonlinear_mc(lambda z: z, 2, COMPLEX_LINE,
                                   samples=1_000_000, seed=1)
    assert abs(r["volume"] - math.pi) <= 0.03 * math.pi
    assert r["clipped_fraction"] == 0.0


def test_nonlinear_mc_linear_map_matches_exact():
    phi = random_symplectic(2, spread=0.6, seed=2)
    wrapped = lambda z: real_to_complex(phi(complex_to_real(np.asarray(z))))
    r = shadow_volume_nonlinear_mc(wrapped, 2, COMPLEX_LINE,
                                   samples=1_000_000, seed=3)
    exact = shadow_volume_formula(phi, COMPLEX_LINE)
    assert abs(r["volume"] - exact) <= 0.03 * exact


def test_nonlinear_mc_generating_field_lower_bound():
    # compactly supported perturbation of the identity; the collar of the
    # cutoff breaks the global contraction certificate, so the bound check
    # is skipped and the finite difference step is widened to keep the
    # fixed point iteration above its cancellation noise floor
    def sval(z):
        z = np.asarray(z, dtype=np.complex128)
        rr = np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))
        return (0.05 * np.sin(z[..., 0].real) * np.abs(z[..., 1]) ** 2
                * cutoff_radial(rr))

    gen = GeneratingFunction(2, sval, fd_scale=1e-3, label="sin cutoff")
    gmap = GeneratedMap(gen, check_bound=False)
    r = shadow_volume_nonlinear_mc(gmap, 2, COMPLEX_LINE,
                                   samples=1_000_000, seed=5)
    assert r["volume"] >= math.pi * (1.0 - 0.03)
    assert r["clipped_fraction"] == 0.0
