"""Reeb orbits on starshaped boundaries: integration, shooting, spectra.

The flow is integrated in the 2-homogeneous Hamiltonian picture, where the
boundary is an energy level and radial rescaling projects exactly back onto
it.  Closed orbits are located by a damped Newton method on a local section:
unknowns are two transverse offsets and the period, residuals are the
components of flow(x, T) - x along the section and the flow direction.  To
keep scans affordable every Newton sweep integrates one stacked ODE system
(all seeds, their finite-difference columns, and their period columns at
once) with time rescaled per member so each reaches its own period at s = 1.

Periods near pi of perturbations of the round sphere form the short prime
spectrum; a scan returns the deduplicated orbits found in a window around
pi together with coverage diagnostics.  Completeness of the list is not
certified, only probed by seeding density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, solve_ivp

from .config import DEFAULTS
from .hopf import as_complex
from .starshaped import RadialProfile, StarshapedDomain, contact_volume
from .symplectic import complex_to_real, real_to_complex


class ShootingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# integration


def _domain_of(profile) -> StarshapedDomain:
    return profile if isinstance(profile, StarshapedDomain) else StarshapedDomain(profile)


def integrate_reeb(profile, z0, t_final: float, rtol: float | None = None,
                   atol: float | None = None, record: bool = False,
                   project_steps: bool = True):
    """Flow a boundary point for time t_final along the Reeb field.

    Each accepted step is radially projected back onto {H = 1}; the maximal
    energy drift seen before projection is reported and checked.
    """
    domain = _domain_of(profile)
    rtol = DEFAULTS.ode_rtol if rtol is None else rtol
    atol = DEFAULTS.ode_atol if atol is None else atol
    z0 = as_complex(z0)
    domain.check_on_boundary(z0)

    def rhs(_t, y):
        z = real_to_complex(y)
        return complex_to_real(1j * domain.h_gradient(z))

    stepper = DOP853(rhs, 0.0, complex_to_real(z0), t_bound=float(t_final),
                     rtol=rtol, atol=atol)
    drift_max = 0.0
    times = [0.0]
    states = [complex_to_real(z0)]
    while stepper.status == "running":
        msg = stepper.step()
        if msg is not None and stepper.status == "failed":
            raise ShootingError(f"integrator failed: {msg}")
        z = real_to_complex(stepper.y)
        h = float(domain.h_value(z))
        drift_max = max(drift_max, abs(h - 1.0))
        if project_steps:
            stepper.y = complex_to_real(domain.project_to_boundary(z))
            stepper.f = rhs(stepper.t, stepper.y)
        if record:
            times.append(stepper.t)
            states.append(stepper.y.copy())
    if drift_max > 1e4 * DEFAULTS.energy_drift_tol:
        raise ShootingError(f"energy drift {drift_max:.3e} exceeds budget")
    endpoint = real_to_complex(stepper.y)
    if not record:
        return endpoint
    return {"endpoint": endpoint, "times": np.array(times),
            "states": np.array(states), "drift_max": drift_max}


def _flow_batch(domain: StarshapedDomain, starts: np.ndarray, times: np.ndarray,
                t_eval=None, segments: int = 4, rtol: float | None = None,
                atol: float | None = None):
    """Flow many points, each by its own time, as one stacked system.

    Time is rescaled so every member reaches its target at s = 1; the state
    is radially projected onto the boundary between segments.  Returns the
    endpoints, or the trajectory samples at the fractions in t_eval.
    """
    rtol = DEFAULTS.ode_rtol if rtol is None else rtol
    atol = DEFAULTS.ode_atol if atol is None else atol
    starts = np.atleast_2d(np.asarray(starts, dtype=np.complex128))
    times = np.asarray(times, dtype=np.float64)
    m, n = starts.shape

    def rhs(_s, y):
        z = real_to_complex(y.reshape(m, 2 * n))
        v = 1j * domain.h_gradient(z) * times[:, None]
        return complex_to_real(v).ravel()

    if t_eval is not None:
        sol = solve_ivp(rhs, (0.0, 1.0), complex_to_real(starts).ravel(),
                        method="DOP853", rtol=rtol, atol=atol,
                        t_eval=np.asarray(t_eval, dtype=np.float64))
        if not sol.success:
            raise ShootingError(sol.message)
        # states: (len(t_eval), m, n)
        return real_to_complex(sol.y.T.reshape(len(sol.t), m, 2 * n))

    y = complex_to_real(starts).ravel()
    edges = np.linspace(0.0, 1.0, segments + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise ShootingError(sol.message)
        z = real_to_complex(sol.y[:, -1].reshape(m, 2 * n))
        y = complex_to_real(domain.project_to_boundary(z)).ravel()
    return real_to_complex(y.reshape(m, 2 * n))


# ---------------------------------------------------------------------------
# closed orbits


@dataclass
class OrbitResult:
    seed: np.ndarray
    period: float
    closure_residual: float
    iterations: int
    converged: bool
    floquet_multipliers: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        d = {
            "seed": [[float(c.real), float(c.imag)] for c in self.seed],
            "period": float(self.period),
            "closure_residual": float(self.closure_residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if self.floquet_multipliers is not None:
            d["floquet_multipliers"] = [[float(m.real), float(m.imag)]
                                        for m in self.floquet_multipliers]
        return d


def _section_frames(domain: StarshapedDomain, x: np.ndarray):
    """Flow direction, normal, and a 2-frame spanning the section at each point."""
    grad = domain.h_gradient(x)
    reeb = 1j * grad
    rhat = complex_to_real(reeb)
    rhat /= np.linalg.norm(rhat, axis=-1, keepdims=True)
    nhat = complex_to_real(grad)
    nhat -= np.sum(nhat * rhat, axis=-1, keepdims=True) * rhat
    nhat /= np.linalg.norm(nhat, axis=-1, keepdims=True)
    frames = []
    for i in range(x.shape[0]):
        proj = np.eye(2 * x.shape[1]) - np.outer(rhat[i], rhat[i]) - np.outer(nhat[i], nhat[i])
        vals, vecs = np.linalg.eigh(proj)
        frames.append(vecs[:, -2:])
    return rhat, nhat, np.array(frames)


def _newton_closed_orbits(domain: StarshapedDomain, seeds: np.ndarray,
                          guesses: np.ndarray, tol: float, max_iter: int):
    """Batched shooting; returns per-seed (point, period, residual, iters, ok)."""
    x = domain.project_to_boundary(np.atleast_2d(as_complex(seeds)))
    t = np.array(guesses, dtype=np.float64)
    nseeds, n = x.shape
    active = np.ones(nseeds, dtype=bool)
    residual = np.full(nseeds, np.inf)
    iters = np.zeros(nseeds, dtype=int)
    ht = 1e-6

    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa, ta = x[idx], t[idx]
        hs = DEFAULTS.shooting_fd_step * (1.0 + np.linalg.norm(xa, axis=1))
        rhat, _nhat, frames = _section_frames(domain, xa)
        e1 = real_to_complex(frames[:, :, 0])
        e2 = real_to_complex(frames[:, :, 1])
        batch = np.concatenate([
            xa,
            domain.project_to_boundary(xa + hs[:, None] * e1),
            domain.project_to_boundary(xa + hs[:, None] * e2),
            xa,
        ])
        btimes = np.concatenate([ta, ta, ta, ta + ht])
        ends = _flow_batch(domain, batch, btimes)
        k = len(idx)

        def res(endpts, base):
            delta = complex_to_real(endpts - base)
            r1 = np.sum(delta * frames[:, :, 0], axis=1)
            r2 = np.sum(delta * frames[:, :, 1], axis=1)
            r3 = np.sum(delta * rhat, axis=1)
            return np.stack([r1, r2, r3], axis=1)

        r0 = res(ends[:k], xa)
        r_e1 = res(ends[k:2 * k], domain.project_to_boundary(xa + hs[:, None] * e1))
        r_e2 = res(ends[2 * k:3 * k], domain.project_to_boundary(xa + hs[:, None] * e2))
        r_t = res(ends[3 * k:], xa)
        full = np.linalg.norm(complex_to_real(ends[:k] - xa), axis=1)
        residual[idx] = full
        iters[idx] += 1

        done = full < tol
        if done.any():
            active[idx[done]] = False
        move = ~done
        if not move.any():
            continue
        for j_local in np.nonzero(move)[0]:
            jac = np.stack([
                (r_e1[j_local] - r0[j_local]) / hs[j_local],
                (r_e2[j_local] - r0[j_local]) / hs[j_local],
                (r_t[j_local] - r0[j_local]) / ht,
            ], axis=1)
            try:
                step, *_ = np.linalg.lstsq(jac, -r0[j_local], rcond=None)
            except np.linalg.LinAlgError:
                active[idx[j_local]] = False
                continue
            limit = 0.5
            scale = min(1.0, limit / max(np.abs(step).max(), 1e-12)) \
                if np.abs(step).max() > limit else 1.0
            step = step * scale
            i_global = idx[j_local]
            newx = x[i_global] + step[0] * e1[j_local] + step[1] * e2[j_local]
            x[i_global] = domain.project_to_boundary(newx)
            t[i_global] += step[2]
            if not (0.05 < t[i_global] < 50.0):
                active[i_global] = False
                residual[i_global] = np.inf

    converged = residual < tol
    return x, t, residual, iters, converged


def find_closed_orbit(profile, seed, period_guess: float,
                      tol: float | None = None, max_iter: int | None = None,
                      compute_monodromy: bool = False) -> OrbitResult:
    """Shoot for a closed orbit from one seed on (or radially over) the boundary."""
    domain = _domain_of(profile)
    tol = DEFAULTS.orbit_closure_tol if tol is None else tol
    max_iter = DEFAULTS.shooting_max_iter if max_iter is None else max_iter
    x, t, res, iters, ok = _newton_closed_orbits(
        domain, np.atleast_2d(as_complex(seed)), np.array([period_guess]), tol, max_iter)
    floquet = None
    if ok[0] and compute_monodromy:
        floquet = _floquet(domain, x[0], t[0])
    return OrbitResult(seed=x[0], period=float(t[0]), closure_residual=float(res[0]),
                       iterations=int(iters[0]), converged=bool(ok[0]),
                       floquet_multipliers=floquet)


def _floquet(domain: StarshapedDomain, x: np.ndarray, period: float) -> np.ndarray:
    """Eigenvalues of the finite-difference monodromy in ambient coordinates."""
    n = x.shape[0]
    h = DEFAULTS.shooting_fd_step
    cols = []
    base = np.tile(x, (4 * n + 1, 1)).astype(np.complex128)
    for i in range(2 * n):
        e = np.zeros(2 * n)
        e[i] = h
        base[1 + 2 * i] += real_to_complex(e)
        base[2 + 2 * i] -= real_to_complex(e)
    ends = _flow_batch(domain, base, np.full(4 * n + 1, period))
    mono = np.empty((2 * n, 2 * n))
    for i in range(2 * n):
        mono[:, i] = complex_to_real(ends[1 + 2 * i] - ends[2 + 2 * i]) / (2 * h)
    return np.linalg.eigvals(mono)


def orbit_samples(profile, orbit: OrbitResult, count: int | None = None) -> np.ndarray:
    """Points along a found orbit, for geometric comparisons."""
    count = DEFAULTS.orbit_sample_count if count is None else count
    domain = _domain_of(profile)
    fracs = np.arange(count) / count
    traj = _flow_batch(domain, orbit.seed[None, :], np.array([orbit.period]), t_eval=fracs)
    return traj[:, 0, :]


def hausdorff(points_a: np.ndarray, points_b: np.ndarray) -> float:
    d = np.linalg.norm(points_a[:, None, :] - points_b[None, :, :], axis=-1)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _points_to_closed_polyline(points: np.ndarray, loop: np.ndarray) -> float:
    """Largest distance from the points to the closed polyline through loop.

    Plain point-set Hausdorff cannot identify two samplings of one orbit:
    a phase offset between equal-time grids already costs half the sample
    spacing.  Chord interpolation reduces that to the sagitta, which is
    quadratically small in the spacing.
    """
    seg_a = loop
    seg_b = np.roll(loop, -1, axis=0)
    d = seg_b - seg_a
    den = np.einsum("jk,jk->j", d, d)
    den[den == 0.0] = 1.0
    rel = points[:, None, :] - seg_a[None, :, :]
    t = np.clip(np.einsum("ijk,jk->ij", rel, d) / den[None, :], 0.0, 1.0)
    gap = rel - t[:, :, None] * d[None, :, :]
    return float(np.sqrt(np.einsum("ijk,ijk->ij", gap, gap).min(axis=1)).max())


def orbit_distance(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """Symmetric curve distance between two sampled closed orbits."""
    return max(_points_to_closed_polyline(samples_a, samples_b),
               _points_to_closed_polyline(samples_b, samples_a))


# ---------------------------------------------------------------------------
# spectra and systolic quantities


@dataclass
class SpectrumWindow:
    center: float
    halfwidth: float
    orbits: list
    zoll_degenerate: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def periods(self) -> np.ndarray:
        return np.array([o.period for o in self.orbits])

    def t_min(self) -> float:
        if not self.orbits:
            raise ShootingError("no orbits found in the window")
        return float(self.periods.min())

    def t_max(self) -> float:
        if not self.orbits:
            raise ShootingError("no orbits found in the window")
        return float(self.periods.max())


def scan_short_spectrum(profile, seed_count: int = 24, window: float = 0.6,
                        extra_seeds=None, period_guesses=None,
                        tol: float | None = None,
                        dedup_tol: float | None = None) -> SpectrumWindow:
    """Find closed orbits with period near pi and deduplicate them.

    Seeds are lifted from an equal-area set on the quotient sphere and
    pushed to the boundary; callers may add their own (for instance fibers
    of critical points).  Orbits whose period leaves (pi - window,
    pi + window) are discarded.  If many orbits land on one period the
    window is flagged as degenerate (a continuum, as for the round form).
    """
    from .hopf import fibonacci_sphere, hopf_lift

    domain = _domain_of(profile)
    tol = DEFAULTS.orbit_closure_tol if tol is None else tol
    dedup_tol = DEFAULTS.dedup_hausdorff_tol if dedup_tol is None else dedup_tol

    base = hopf_lift(fibonacci_sphere(seed_count))
    seeds = domain.profile.boundary_point(base)
    if extra_seeds is not None:
        extra = np.atleast_2d(as_complex(extra_seeds))
        seeds = np.concatenate([seeds, domain.project_to_boundary(extra)])
    if period_guesses is None:
        zhat = seeds / np.linalg.norm(seeds, axis=1, keepdims=True)
        period_guesses = math.pi * domain.profile.value(zhat) ** 2
    else:
        period_guesses = np.broadcast_to(np.asarray(period_guesses, dtype=np.float64),
                                         (seeds.shape[0],)).copy()

    x, t, res, iters, ok = _newton_closed_orbits(
        domain, seeds, period_guesses, tol, DEFAULTS.shooting_max_iter)

    in_window = ok & (np.abs(t - math.pi) < window)
    found = [OrbitResult(seed=x[i], period=float(t[i]), closure_residual=float(res[i]),
                         iterations=int(iters[i]), converged=True)
             for i in np.nonzero(in_window)[0]]

    # deduplicate geometrically
    unique: list[OrbitResult] = []
    reps: list[int] = []
    if found:
        fracs = np.arange(DEFAULTS.dedup_sample_count) / DEFAULTS.dedup_sample_count
        starts = np.array([o.seed for o in found])
        times = np.array([o.period for o in found])
        traj = _flow_batch(domain, starts, times, t_eval=fracs)
        samples = [complex_to_real(traj[:, i, :]) for i in range(len(found))]
        for i, orb in enumerate(found):
            dup = None
            for u_i in range(len(unique)):
                if orbit_distance(samples[i], samples[reps[u_i]]) < dedup_tol:
                    dup = u_i
                    break
            if dup is None:
                unique.append(orb)
                reps.append(i)
            elif orb.closure_residual < unique[dup].closure_residual:
                unique[dup] = orb
                reps[dup] = i

    periods = np.array([o.period for o in unique]) if unique else np.array([])
    zoll_flag = bool(len(unique) >= DEFAULTS.zoll_flag_count
                     and periods.size and float(np.ptp(periods)) < DEFAULTS.zoll_flag_spread)
    return SpectrumWindow(
        center=math.pi, halfwidth=window, orbits=unique, zoll_degenerate=zoll_flag,
        diagnostics={
            "seeds_attempted": int(seeds.shape[0]),
            "seeds_converged": int(ok.sum()),
            "in_window": int(in_window.sum()),
            "mean_newton_iterations": float(iters[ok].mean()) if ok.any() else float("nan"),
        },
    )


@dataclass
class SystolicReport:
    t_min: float
    volume: float
    rho: float
    zoll_degenerate: bool
    orbit_count: int
    margin: float   # 1 - rho; the round value of rho is exactly 1

    def to_json_dict(self) -> dict:
        return {k: (float(v) if not isinstance(v, (bool, int)) else v)
                for k, v in self.__dict__.items()}


def systolic_ratio(profile, grid=None, scan: SpectrumWindow | None = None,
                   **scan_kwargs) -> SystolicReport:
    """T_min^n / volume from a short-spectrum scan and the contact volume."""
    if scan is None:
        scan = scan_short_spectrum(profile, **scan_kwargs)
    vol = contact_volume(profile, grid=grid)
    n = profile.n if isinstance(profile, RadialProfile) else profile.profile.n
    t_min = scan.t_min()
    rho = t_min ** n / vol
    return SystolicReport(t_min=t_min, volume=vol, rho=rho,
                          zoll_degenerate=scan.zoll_degenerate,
                          orbit_count=len(scan.orbits), margin=1.0 - rho)


def t_max_short(profile, tau: float, scan: SpectrumWindow | None = None,
                guess_factors=(0.8, 1.0, 1.2, 1.45), seed_count: int = 16) -> float:
    """Largest period of found short orbits inside (0, tau].

    The scan shoots each seed at several period guesses so that orbits a
    moderate factor away from pi (ellipsoid-like spectra) are reachable.
    """
    if scan is None:
        from .hopf import fibonacci_sphere, hopf_lift
        domain = _domain_of(profile)
        base = hopf_lift(fibonacci_sphere(seed_count))
        seeds = np.tile(domain.profile.boundary_point(base), (len(guess_factors), 1))
        guesses = np.repeat(math.pi * np.asarray(guess_factors), seed_count)
        x, t, res, iters, ok = _newton_closed_orbits(
            domain, seeds, guesses, DEFAULTS.orbit_closure_tol, DEFAULTS.shooting_max_iter)
        periods = t[ok & (t > 0.05) & (t <= tau)]
    else:
        periods = scan.periods[scan.periods <= tau]
    if periods.size == 0:
        raise ShootingError(f"no orbit with period in (0, {tau}] was found")
    return float(periods.max())
