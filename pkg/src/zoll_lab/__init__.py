"""Numerical laboratory for Reeb dynamics near the round contact sphere.

Capabilities, one module each:
  symplectic  linear symplectic algebra, Wirtinger weight, projectors
  hopf        S^{2n-1} as a circle bundle: grids, fields, fiber calculus
  starshaped  radial profiles, induced contact forms, Reeb fields, volume
  orbits      trajectory integration, closed-orbit shooting, systolic ratio
  normalform  splitting into invariant/transverse/exact parts, corrector
              scheme, critical fibers, volume identity
  generating  generating functions of symplectomorphisms, loop straightening
  shadows     symplectic shadows of balls, exact volume vs Monte Carlo
  cli         batch experiment commands (zoll-lab entry point)
"""

from .config import DEFAULTS, Defaults
from .generating import (GeneratedMap, GeneratingFunction, StraighteningResult,
                         loop_straightening, map_from_generating, recover_generating)
from .hopf import (HopfGrid, SphereField, alpha0_value, base_chart, chart_point,
                   fiber_average, fibonacci_sphere, hopf_flow, hopf_lift, hopf_project,
                   lie_reeb, reeb_round, zero_avg_primitive)
from .normalform import (BaseFunction, BottkolTriple, CriticalFiber, NormalFormResult,
                         SphereDiffeo, SplitForm, bottkol_linear_solve, bottkol_newton,
                         critical_fibers, normal_form, s_hat, split_form,
                         synthetic_split_fields, verify_variational_principle,
                         volume_identity_check)
from .orbits import (OrbitResult, SpectrumWindow, SystolicReport, find_closed_orbit,
                     integrate_reeb, orbit_distance, orbit_samples,
                     scan_short_spectrum, systolic_ratio, t_max_short)
from .shadows import (ShadowMC, ball_sample, coercivity_profile,
                      equality_case_check, random_symplectic_subspace,
                      shadow_volume_ellipsoid, shadow_volume_formula,
                      shadow_volume_mc, shadow_volume_nonlinear_mc)
from .starshaped import (RadialProfile, StarshapedDomain, contact_volume,
                         ellipsoid_data, reeb_field_sphere)
from .symplectic import (LinearSymplectomorphism, Subspace, complex_subspace_distance,
                         complex_to_real, is_complex_subspace, omega0, omega_power,
                         random_symplectic, random_unitary, real_to_complex,
                         standard_j, symplectic_projector, wirtinger_weight)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
