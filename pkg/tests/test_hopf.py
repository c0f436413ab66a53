"""Sphere discretization: circle action, quadrature, fiber calculus."""

import math

import numpy as np
import pytest

import zoll_lab as zl
from zoll_lab.hopf import (HopfGrid, OffSphereError, SphereField, base_chart,
                           chart_point, fibonacci_sphere, hopf_flow, hopf_lift,
                           hopf_project)
from zoll_lab.symplectic import complex_to_real


# --------------------------------------------------------------------------
# oracle: contact integrals over S^3 by plain Monte Carlo against the round
# surface measure.  vol(S^3) = 2 pi^2 and the contact volume of the round
# form is pi^2, so the conversion factor is 1/2.


def mc_sphere_integral(func, seed=0, samples=400_000):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    vals = func(x[:, 0::2] + 1j * x[:, 1::2])
    mean = float(np.mean(vals))
    err = float(np.std(vals) / math.sqrt(samples))
    return mean * math.pi ** 2, err * 2.0 * math.pi ** 2


def test_hopf_flow_examples():
    e1 = np.array([1.0, 0.0], dtype=np.complex128)
    assert np.abs(hopf_flow(e1, math.pi) - e1).max() < 1e-15
    z = np.array([0.6, 0.8j], dtype=np.complex128)
    assert np.abs(hopf_flow(z, 0.0) - z).max() == 0.0
    assert np.abs(hopf_flow(e1, math.pi / 4) - 1j * e1).max() < 1e-15


def test_hopf_flow_rejects_off_sphere():
    with pytest.raises(OffSphereError):
        hopf_flow(np.array([2.0, 0.0], dtype=np.complex128), 0.1)


def test_grid_weights_calibrated(grid16):
    # quadrature(1) is pi^2 by calibration, and the raw weight sum must be
    # close before calibration too
    one = SphereField.from_callable(grid16, lambda z: np.ones(z.shape[:-1]), "scalar")
    assert abs(grid16.quadrature(one) - math.pi ** 2) < 1e-12


def test_quadrature_z1_squared(grid16):
    f = SphereField.from_callable(grid16, lambda z: np.abs(z[..., 0]) ** 2, "scalar")
    exact = math.pi ** 2 / 2.0
    assert abs(grid16.quadrature(f) - exact) < 1e-3 * exact
    # MC oracle agrees
    mc, err = mc_sphere_integral(lambda z: np.abs(z[:, 0]) ** 2)
    assert abs(mc - exact) < 4 * err


def test_quadrature_odd_function_vanishes(grid16):
    f = SphereField.from_callable(grid16, lambda z: z[..., 0].real, "scalar")
    assert abs(grid16.quadrature(f)) < 1e-10


def test_quadrature_flow_invariance(grid16):
    func = lambda z: (np.abs(z[..., 0]) ** 4 + z[..., 0].real * z[..., 1].real)
    f = SphereField.from_callable(grid16, func, "scalar")
    q0 = grid16.quadrature(f)
    for t in (0.3, 1.1):
        ft = SphereField.from_callable(grid16, lambda z: func(hopf_flow(z, t)), "scalar")
        assert abs(grid16.quadrature(ft) - q0) < 1e-9 * (1.0 + abs(q0))


def test_fiber_average_scalar_examples(grid16):
    inv = SphereField.from_callable(grid16, lambda z: np.abs(z[..., 0]) ** 2, "scalar")
    assert (inv.fiber_average() - inv).sup_norm() < 1e-12

    cross = SphereField.from_callable(
        grid16, lambda z: (z[..., 0] * np.conj(z[..., 1])).real, "scalar")
    assert (cross.fiber_average() - cross).sup_norm() < 1e-12

    osc = SphereField.from_callable(grid16, lambda z: (z[..., 0] ** 2).real, "scalar")
    assert osc.fiber_average().sup_norm() < 1e-12
    # brute-force fiber quadrature oracle at a probe point
    z0 = np.array([0.6 + 0.1j, 0.2 - 0.77459667j])
    z0 /= np.linalg.norm(z0)
    ts = (np.arange(512) + 0.5) * math.pi / 512
    brute = np.mean([(hopf_flow(z0, t)[0] ** 2).real for t in ts])
    assert abs(brute) < 1e-12


def test_fiber_average_idempotent(grid16):
    rng = np.random.default_rng(6)
    coeffs = rng.standard_normal((grid16.base_count, grid16.fiber_modes)) \
        + 1j * rng.standard_normal((grid16.base_count, grid16.fiber_modes))
    f = SphereField(grid16, coeffs, "scalar")
    once = f.fiber_average()
    twice = once.fiber_average()
    assert np.array_equal(once.coeffs, twice.coeffs)


def test_fiber_average_vector_reeb_fixed(grid16):
    reeb = SphereField.from_callable(grid16, lambda z: 1j * z, "vector")
    assert (reeb.fiber_average() - reeb).sup_norm() < 1e-12


def test_fiber_average_vector_against_quadrature(grid16):
    # constant ambient vector projected to the tangent space: compare one
    # probe fiber against the literal averaging integral
    c = np.array([0.3 + 0.2j, -0.5 + 0.1j])

    def tangential(z):
        inner = np.sum(np.conj(z) * c, axis=-1, keepdims=True)
        return c - z * inner.real  # real part: ambient orthogonal projection
    # note: tangency here means <v, z>_R = 0, handled by from_samples check

    def tang(z):
        inner = np.sum(z.real * c.real + z.imag * c.imag, axis=-1, keepdims=True)
        return c - inner * z

    f = SphereField.from_callable(grid16, tang, "vector")
    avg = f.fiber_average()
    z0 = grid16.base_points[17]
    ts = (np.arange(2048)) * math.pi / 2048
    vals = np.array([np.exp(-2j * t) * tang(hopf_flow(z0, t)) for t in ts])
    brute = vals.mean(axis=0)
    assert np.abs(avg.samples()[17, 0] - brute).max() < 1e-10
    # equivariance: coefficients live in the single matched fiber mode
    shifted = avg.samples()[17, 3]
    theta3 = 3 * math.pi / grid16.fiber_modes
    assert np.abs(shifted - np.exp(2j * theta3) * avg.samples()[17, 0]).max() < 1e-10


def test_zero_avg_primitive_re_z1_squared(grid16):
    h = SphereField.from_callable(grid16, lambda z: (z[..., 0] ** 2).real, "scalar")
    prim = h.zero_avg_primitive()
    # derivative along the action returns the input
    assert (prim.lie_reeb() - h).sup_norm() < 1e-10
    assert prim.fiber_average().sup_norm() < 1e-13
    # closed form: primitive of Re(z1^2) along theta is Im(z1^2)/4
    cand = SphereField.from_callable(grid16, lambda z: (z[..., 0] ** 2).imag / 4.0,
                                     "scalar")
    assert (prim - cand).sup_norm() < 1e-12


def test_zero_avg_primitive_roundtrip(grid16):
    rng = np.random.default_rng(7)
    # band-limited random scalar: modes below Nyquist so the round trip is exact
    coeffs = np.zeros((grid16.base_count, grid16.fiber_modes), dtype=np.complex128)
    for m in range(-5, 6):
        col = rng.standard_normal(grid16.base_count) * 0.3
        coeffs[:, grid16.mode_index(m)] = col
    g = SphereField(grid16, coeffs, "scalar")
    g = g + 0.0  # real input not required here
    back = g.lie_reeb().zero_avg_primitive()
    assert (back - (g - g.fiber_average())).sup_norm() < 1e-12


def test_zero_avg_primitive_rejects_nonzero_average(grid16):
    f = SphereField.from_callable(grid16, lambda z: np.abs(z[..., 0]) ** 2, "scalar")
    with pytest.raises(ValueError):
        f.zero_avg_primitive()


def test_primitive_zero_input(grid16):
    zero = SphereField.from_callable(grid16, lambda z: np.zeros(z.shape[:-1]), "scalar")
    assert zero.zero_avg_primitive().sup_norm() == 0.0


def test_scalar_field_scalar_arithmetic(grid16):
    f = SphereField.from_callable(grid16, lambda z: np.abs(z[..., 0]) ** 2, "scalar")
    g = (f + 1.0) - 1.0
    assert (g - f).sup_norm() < 1e-15
    h = 1.0 - f
    assert abs(h.samples()[5, 2] - (1.0 - f.samples()[5, 2])) < 1e-14


def test_base_chart_examples():
    c0, w0 = base_chart(np.array([1.0 + 0j, 0.0]))
    assert c0 == 0 and abs(w0) < 1e-15
    c1, w1 = base_chart(np.array([0.0, 1.0 + 0j]))
    assert c1 == 1 and abs(w1) < 1e-15


def test_base_chart_flow_invariant():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        z = rng.standard_normal(4)
        z = z / np.linalg.norm(z)
        z = z[0::2] + 1j * z[1::2]
        t = rng.uniform(0.0, math.pi)
        ca, wa = base_chart(z)
        cb, wb = base_chart(hopf_flow(z, t))
        assert ca == cb
        assert abs(wa - wb) < 1e-10


def test_chart_point_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(50):
        w = rng.standard_normal() + 1j * rng.standard_normal()
        for chart in (0, 1):
            z = chart_point(chart, w)
            c2, w2 = base_chart(z)
            if c2 == chart:
                assert abs(w2 - w) < 1e-12
            else:
                assert abs(w2 - 1.0 / w) < 1e-10 * max(1.0, abs(1.0 / w))


def test_hopf_project_lift():
    pts = fibonacci_sphere(64)
    z = hopf_lift(pts)
    assert np.abs(np.linalg.norm(z, axis=-1) - 1.0).max() < 1e-12
    back = hopf_project(z)
    assert np.abs(back - pts).max() < 1e-12


def test_field_interpolation_accuracy(grid16):
    # degree-4 ambient polynomial: representable exactly by the fiber band
    # and the base fit, so at_angle must interpolate off-grid angles
    func = lambda z: (z[..., 0] ** 2).real * np.abs(z[..., 1]) ** 2
    f = SphereField.from_callable(grid16, func, "scalar")
    theta = 0.2345
    vals = f.at_angle(theta)
    pts = hopf_flow(grid16.base_points, theta)
    assert np.abs(vals - func(pts)).max() < 1e-12


def test_truncation_estimate_flags_band_edge(grid16):
    # the estimate reads the stored top fiber mode, so drive it there:
    # angle(z1) shifts by 2 theta under the action, frequency 8 saturates
    # the N=16 band edge
    smooth = SphereField.from_callable(grid16, lambda z: np.abs(z[..., 0]) ** 2,
                                       "scalar")
    rough = SphereField.from_callable(
        grid16, lambda z: np.cos(8.0 * np.angle(z[..., 0])), "scalar")
    assert smooth.truncation_estimate() < 1e-12
    assert rough.truncation_estimate() > 1e-2


def test_field_json_round_trip(grid16):
    f = SphereField.from_callable(grid16, lambda z: (z[..., 0] ** 2).real, "scalar")
    d = f.to_json_dict()
    g = grid16.field_from_json_dict(d)
    assert (f - g).sup_norm() < 1e-15
