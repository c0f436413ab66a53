"""Central numerical defaults.

Every tolerance, step size, and resolution knob used across the package is
defined here, in one frozen block, so experiments stay comparable and the
test suite can reference the same numbers the library uses.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Defaults:
    # linear symplectic algebra
    symplectic_matrix_tol: float = 1e-10   # |Phi^T J Phi - J|_max for matrices
    symplectic_map_tol: float = 1e-8       # pointwise Jacobian test for nonlinear maps
    gram_rel_floor: float = 1e-12          # relative eigenvalue floor before a basis counts as degenerate
    complex_subspace_tol: float = 1e-8     # distance below which a subspace counts as complex

    # generating functions
    hessian_bound: float = 2.0             # contraction threshold for sup |Hess S|
    picard_max_iter: int = 200
    picard_tol: float = 1e-13              # fixed point stop, absolute step size
    genfun_fd_scale: float = 1e-5          # gradient/Hessian step is this * (1 + |z|)
    loop_straighten_tol: float = 1e-6      # pointwise |phi(gamma(t)) - gamma0(t)| target
    loop_action_tol: float = 1e-9          # closed loops must carry action pi before straightening

    # sphere grids
    base_nodes: int = 2000
    fiber_modes: int = 16
    base_poly_degree: int = 10
    on_sphere_tol: float = 1e-12           # |(|z| - 1)| for points fed to sphere ops
    tangency_tol: float = 1e-10
    fiber_average_tol: float = 1e-10       # residual invariance after averaging
    primitive_mean_rel_tol: float = 1e-8   # relative mode-0 content allowed in zero_avg_primitive input
    quadrature_rel_tol: float = 1e-3       # grid integrals vs closed forms

    # starshaped domains / contact data
    hypersurface_tol: float = 1e-9         # |H - 1| for points claimed to lie on the boundary
    profile_positivity_floor: float = 1e-9

    # orbit tools
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-12
    energy_drift_tol: float = 1e-10
    orbit_closure_tol: float = 1e-8
    shooting_fd_step: float = 1e-6
    shooting_max_iter: int = 40
    dedup_hausdorff_tol: float = 1e-4
    dedup_sample_count: int = 256          # polyline sagitta must sit below the tol
    orbit_sample_count: int = 64
    zoll_flag_count: int = 10              # this many orbits at one period -> degenerate window
    zoll_flag_spread: float = 1e-6

    # normal form
    pullback_fd_step: float = 1e-5
    split_invariant_tol: float = 1e-10     # representation identities after splitting
    split_consistency_tol: float = 1e-8    # interpolant vs spectral fiber derivative
    bottkol_linear_tol: float = 1e-9
    bottkol_newton_tol: float = 1e-9
    bottkol_max_iter: int = 20
    bottkol_dealias_factor: int = 4        # fiber oversampling for the nonlinear residual
    exp_injectivity_radius: float = 1.5707963267948966  # pi/2, displacement fields must stay below
    critical_grad_tol: float = 1e-8
    critical_dedup_tol: float = 1e-5
    volume_identity_rel_tol: float = 1e-3

    # shadows
    mc_default_samples: int = 200_000
    nonlinear_grid_per_axis: int = 200     # box counting resolution for k=1
    bounding_directions: int = 10_000
    bounding_margin: float = 0.05
    shadow_floor: float = 0.15             # resample random subspaces below this shadow weight


DEFAULTS = Defaults()
