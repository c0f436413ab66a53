"""Generating functions: midpoint maps, recovery, loop straightening."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zoll_lab._poly import random_poly
from zoll_lab.generating import (GeneratedMap, GeneratingFunction,
                                 HessianBoundError, PicardDivergenceError,
                                 loop_straightening, map_from_generating,
                                 recover_generating)


# --------------------------------------------------------------------------
# oracles
#
# Rotation: for S = c |z|^2 the midpoint equation w = z + i grad S((z+w)/2)
# is linear, w = z (1 + ic)/(1 - ic) = z e^{2i arctan c}.  The closed form is
# checked against the defining equation directly before it is used.
#
# Loop action: spectral velocity plus the primitive (1/2) sum (x dy - y dx),
# validated on circles with known enclosed action.


def rotation_oracle(c, z):
    return np.asarray(z) * (1.0 + 1j * c) / (1.0 - 1j * c)


def loop_action_fft(points):
    m = points.shape[0]
    freqs = np.fft.fftfreq(m, d=1.0 / m)
    vel = np.fft.ifft(np.fft.fft(points, axis=0) * (2j * math.pi * freqs)[:, None],
                      axis=0)
    lam = 0.5 * np.sum((1j * points).real * vel.real
                       + (1j * points).imag * vel.imag, axis=1)
    return float(lam.mean())


def circle_loop(ts, n=2, radius=1.0):
    out = np.zeros(ts.shape + (n,), dtype=complex)
    out[:, 0] = radius * np.exp(2j * np.pi * ts)
    return out


def test_rotation_oracle_solves_midpoint_equation():
    rng = np.random.default_rng(0)
    for c in (0.3, 0.7, -0.5):
        z = rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2))
        w = rotation_oracle(c, z)
        # grad of c|z|^2 as a complex vector is 2c m
        resid = np.abs(w - (z + 1j * 2.0 * c * (z + w) / 2.0)).max()
        assert resid < 1e-14
        assert np.abs(w - z * np.exp(2j * math.atan(c))).max() < 1e-14


def test_loop_action_oracle_closed_forms():
    ts = np.arange(512) / 512
    assert abs(loop_action_fft(circle_loop(ts, radius=1.3)) - math.pi * 1.69) < 1e-12
    double = np.zeros((512, 2), dtype=complex)
    double[:, 1] = 0.2 * np.exp(4j * np.pi * ts)
    assert abs(loop_action_fft(double) - 2.0 * math.pi * 0.04) < 1e-12


# --------------------------------------------------------------------------
# generating functions


def test_quadratic_radial_derivatives():
    gen = GeneratingFunction.quadratic_radial(2, 0.4)
    rng = np.random.default_rng(1)
    z = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
    assert np.abs(gen.value(z) - 0.4 * np.sum(np.abs(z) ** 2, axis=-1)).max() < 1e-14
    assert np.abs(gen.gradient(z) - 0.8 * z).max() < 1e-13
    assert np.abs(gen.hessian(z) - 0.8 * np.eye(4)).max() < 1e-13
    # constant Hessian makes the probe sup exact
    assert abs(gen.hessian_sup() - 0.8) < 1e-12


def test_fd_gradient_matches_analytic():
    rng = np.random.default_rng(2)
    poly = random_poly(4, 3, rng, scale=0.1)
    full = GeneratingFunction.from_poly(poly)
    fd_only = GeneratingFunction(2, full._value)
    z = 0.7 * (rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2)))
    assert np.abs(full.gradient(z) - fd_only.gradient(z)).max() < 1e-8
    assert np.abs(full.hessian(z) - fd_only.hessian(z)).max() < 1e-5


# --------------------------------------------------------------------------
# the map


@pytest.mark.parametrize("c", [0.3, 0.7])
def test_rotation_closed_form(c):
    phi = map_from_generating(GeneratingFunction.quadratic_radial(2, c))
    rng = np.random.default_rng(3)
    z = rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2))
    assert np.abs(phi(z) - z * np.exp(2j * math.atan(c))).max() < 1e-8
    assert np.abs(phi.inverse_apply(z) - z * np.exp(-2j * math.atan(c))).max() < 1e-8
    assert phi.roundtrip_defect(z) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-0.8, max_value=0.8))
def test_rotation_closed_form_property(c):
    phi = map_from_generating(GeneratingFunction.quadratic_radial(2, c),
                              check_bound=False)
    z = np.array([[0.9 + 0.1j, -0.4 + 0.6j], [0.2 - 1.1j, 0.0 + 0.8j]])
    assert np.abs(phi(z) - rotation_oracle(c, z)).max() < 1e-10


def test_hessian_bound_rejection():
    gen = GeneratingFunction.quadratic_radial(2, 1.1)
    with pytest.raises(HessianBoundError):
        GeneratedMap(gen)
    # without the certificate the object still builds
    GeneratedMap(gen, check_bound=False)


def test_picard_divergence_detected():
    phi = GeneratedMap(GeneratingFunction.quadratic_radial(2, 9.0),
                       check_bound=False)
    with pytest.raises(PicardDivergenceError):
        phi(np.array([0.5 + 0j, 0.1j]))


def test_picard_contraction_is_geometric():
    # for S = c|z|^2 the iteration error contracts by exactly c each step
    c = 0.9
    gen = GeneratingFunction.quadratic_radial(2, c)
    z = np.array([0.7 + 0.2j, -0.3 + 0.5j])
    w = z.copy()
    steps = []
    for _ in range(40):
        new = z + 1j * gen.gradient((z + w) / 2.0)
        steps.append(float(np.abs(new - w).max()))
        w = new
    ratios = [steps[i + 1] / steps[i] for i in range(len(steps) - 1)]
    assert max(ratios) < c + 1e-9
    assert min(ratios) > c - 1e-9


def test_polynomial_map_roundtrip_and_jacobian():
    rng = np.random.default_rng(7)
    poly = random_poly(4, 4, rng, scale=0.02, min_degree=1)
    phi = map_from_generating(poly)
    pts = 0.6 * (rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2)))
    assert phi.roundtrip_defect(pts) < 1e-12
    assert phi.symplectic_defect(pts[:6]) < 1e-8
    assert np.abs(phi.jacobian(pts[0]) - phi.jacobian_fd(pts[0])).max() < 1e-7


# --------------------------------------------------------------------------
# recovery


def test_recover_rotation_generating_function():
    theta = 0.4
    rec = recover_generating(lambda z: np.exp(1j * theta) * np.asarray(z), 2)
    c = math.tan(theta / 2.0)
    rng = np.random.default_rng(9)
    pts = 0.8 * (rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)))
    exact = c * np.sum(np.abs(pts) ** 2, axis=-1)
    assert np.abs(rec.value(pts) - exact).max() < 1e-10
    assert np.abs(rec.gradient(pts) - 2.0 * c * pts).max() < 1e-10


def test_roundtrip_sup_norm():
    rng = np.random.default_rng(7)
    poly = random_poly(4, 4, rng, scale=0.02, min_degree=1)
    gen = GeneratingFunction.from_poly(poly)
    rec = recover_generating(map_from_generating(gen), 2)
    pts = 0.6 * (rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2)))
    assert np.abs(gen.value(pts) - rec.value(pts)).max() < 1e-7


def test_recover_rejects_large_map():
    with pytest.raises(HessianBoundError):
        recover_generating(lambda z: 3.5 * np.asarray(z), 2)


# --------------------------------------------------------------------------
# loop straightening


EPS_LOOP = 0.01
R_LOOP = math.sqrt(1.0 - 2.0 * EPS_LOOP ** 2)   # restores enclosed action pi


def gamma0(t):
    return circle_loop(np.atleast_1d(t))


def gamma_eps(t):
    t = np.atleast_1d(t)
    out = np.zeros(t.shape + (2,), dtype=complex)
    out[:, 0] = R_LOOP * np.exp(2j * np.pi * t)
    out[:, 1] = EPS_LOOP * np.exp(4j * np.pi * t)
    return out


@pytest.fixture(scope="module")
def straightened():
    return loop_straightening(gamma_eps)


def test_straighten_reference_circle_gives_identity():
    res = loop_straightening(gamma0)
    assert res.hessian_sup == 0.0
    assert res.pairing_residual == 0.0
    ts = np.arange(64) / 64
    assert np.abs(res.map(gamma0(ts)) - gamma0(ts)).max() == 0.0


def test_straighten_maps_loop_to_circle(straightened):
    ts = np.arange(256) / 256
    mapped = straightened.map(gamma_eps(ts))
    assert np.abs(mapped - gamma0(ts)).max() < 1e-6
    assert straightened.pairing_residual < 1e-10
    assert abs(straightened.action - math.pi) < 1e-12
    # Hessian stays small on the plateau around the loop even though the
    # cutoff collars exceed it
    assert straightened.plateau_hessian_sup < 0.5


def test_straighten_symplectic_near_loop(straightened):
    ts = np.arange(8) / 8
    mids = 0.5 * (gamma_eps(ts) + gamma0(ts))
    assert straightened.map.symplectic_defect(mids) < 1e-8


def test_straighten_compact_support(straightened):
    far = np.array([[3.0 + 0j, 0j],
                    [0.02 + 0.01j, 0.6 + 0j],
                    [1.0 + 0j, 2.7 + 0j]])
    assert np.abs(straightened.generating.value(far)).max() == 0.0
    assert np.abs(straightened.map(far) - far).max() == 0.0


def test_straighten_preserves_loop_actions(straightened):
    rng = np.random.default_rng(5)
    ts = np.arange(256) / 256
    for _ in range(2):
        pert = np.zeros((256, 2), dtype=complex)
        for mode in (-2, -1, 1, 2, 3):
            coef = 0.03 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
            pert += coef * np.exp(2j * np.pi * mode * ts)[:, None]
        loop = gamma0(ts) + pert
        before = loop_action_fft(loop)
        after = loop_action_fft(straightened.map(loop))
        assert abs(after - before) < 1e-7


def test_straighten_rejects_wrong_action():
    with pytest.raises(ValueError, match="action"):
        loop_straightening(lambda t: 1.1 * gamma0(t))
