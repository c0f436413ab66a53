"""Batch experiment commands behind the zoll-lab entry point.

Every command reads one JSON config file, optionally overridden by flags,
runs standalone, and writes CSV or JSON into the output directory.  Outputs
are deterministic for a fixed config and seed, so runs can be compared
bitwise against golden files.

Exit codes: 0 success, 2 a measured quantity violated its tolerance,
3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

log = logging.getLogger("zoll_lab.cli")

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_CONFIG = 3

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = {
    "systolic-scan": ["seed", "eps", "T_min", "volume", "rho", "zoll_flag", "margin"],
    "spectrum": ["group", "seed_re1", "seed_im1", "seed_re2", "seed_im2",
                 "period", "residual", "predicted_period", "prediction_error"],
}

_MISSING = object()


class ConfigError(Exception):
    pass


def _walk(cfg: dict, path: str):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return _MISSING
        node = node[part]
    return node


def _get(cfg: dict, path: str, kind=None, default=_MISSING, choices=None):
    """Fetch a config value with a key-path error message."""
    val = _walk(cfg, path)
    if val is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"{path}: required key is missing")
        return default
    if kind is not None:
        if kind is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if not isinstance(val, kind) or (kind is not bool and isinstance(val, bool)):
            raise ConfigError(
                f"{path}: expected {kind.__name__}, got {type(val).__name__}")
    if choices is not None and val not in choices:
        raise ConfigError(f"{path}: must be one of {sorted(choices)}, got {val!r}")
    return val


# key schemas; a key mapping to a dict is a nested object, None is a leaf
_GRID_KEYS = {"base_nodes": None, "fiber_modes": None, "base_poly_degree": None}
_PROFILE_KEYS = {"type": None, "n": None, "radii": None, "terms": None,
                 "eps": None, "seed": None, "degree": None, "label": None}
_SCAN_KEYS = {"seed_count": None, "window": None}
CONFIG_KEYS = {
    "systolic-scan": {"out": None, "tolerance": None, "scan": _SCAN_KEYS,
                      "grid": _GRID_KEYS, "profile": _PROFILE_KEYS,
                      "family": {"count": None, "eps": None, "degree": None,
                                 "seed": None, "n": None}},
    "spectrum": {"out": None, "profile": _PROFILE_KEYS, "scan": _SCAN_KEYS,
                 "mode": None, "grid": _GRID_KEYS},
    "volume-check": {"out": None, "trials": None, "seed": None, "scale": None,
                     "tolerance": None, "grid": _GRID_KEYS},
    "shadow": {"out": None, "n": None, "k": None, "count": None, "samples": None,
               "seed": None, "spread": None, "tolerance": None},
    "genfun-roundtrip": {"out": None, "n": None, "rotation_coefficient": None,
                         "poly": {"degree": None, "scale": None}, "seed": None,
                         "probes": None,
                         "tolerances": {"rotation": None, "roundtrip": None,
                                        "symplectic": None}},
    "bottkol-check": {"out": None, "seed": None, "grid": _GRID_KEYS,
                      "newton": {"eps": None, "degree": None, "seed": None,
                                 "tol": None, "max_iter": None},
                      "tolerances": {"linear": None, "reeb_exactness": None,
                                     "constraints": None}},
    "normal-form": {"out": None, "profile": _PROFILE_KEYS, "mode": None,
                    "shoot": None, "grid": _GRID_KEYS,
                    "tolerances": {"reconstruction": None, "period": None}},
}


def _check_keys(node: dict, allowed: dict, prefix: str = "") -> None:
    """Reject keys no reader will look at; a typo must not pick a default."""
    for key, val in node.items():
        here = f"{prefix}{key}"
        if key not in allowed:
            raise ConfigError(f"{here}: unknown key")
        sub = allowed[key]
        if isinstance(sub, dict) and isinstance(val, dict):
            _check_keys(val, sub, here + ".")


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _profile_from_config(spec, seed_override=None, eps_override=None):
    from .starshaped import RadialProfile

    if not isinstance(spec, dict):
        raise ConfigError("profile: expected an object")
    kind = _get(spec, "type", str, choices={"round", "ellipsoid", "poly", "random"})
    if kind == "round":
        return RadialProfile.round(_get(spec, "n", int, 2))
    if kind == "ellipsoid":
        radii = _get(spec, "radii", list)
        if not radii or any(not isinstance(r, (int, float)) or r <= 0 for r in radii):
            raise ConfigError("profile.radii: expected a list of positive numbers")
        return RadialProfile.ellipsoid([float(r) for r in radii])
    if kind == "poly":
        _get(spec, "n", int)
        _get(spec, "terms", list)
        try:
            return RadialProfile.from_json_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"profile.terms: {exc}") from exc
    eps = eps_override if eps_override is not None else _get(spec, "eps", float)
    seed = seed_override if seed_override is not None else _get(spec, "seed", int, 0)
    return RadialProfile.random_perturbation(
        _get(spec, "n", int, 2), eps, degree=_get(spec, "degree", int, 4), seed=seed)


def _grid_from_config(cfg: dict, n: int):
    from .hopf import HopfGrid

    return HopfGrid(
        n=n,
        base_nodes=_get(cfg, "grid.base_nodes", int, None),
        fiber_modes=_get(cfg, "grid.fiber_modes", int, None),
        base_poly_degree=_get(cfg, "grid.base_poly_degree", int, None),
    )


def _out_dir(cfg: dict, opts) -> str:
    out = opts.out or _get(cfg, "out", str, ".")
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    log.info("wrote %s (%d rows)", path, len(rows))


def _write_json(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)


# ---------------------------------------------------------------------------
# commands


def cmd_systolic_scan(cfg: dict, opts) -> int:
    from .orbits import scan_short_spectrum, systolic_ratio

    tol = _get(cfg, "tolerance", float, 1e-3)
    seed_count = _get(cfg, "scan.seed_count", int, 24)
    window = _get(cfg, "scan.window", float, 0.6)

    jobs = []
    if _walk(cfg, "family") is not _MISSING:
        count = _get(cfg, "family.count", int)
        eps_list = [opts.eps] if opts.eps is not None else _get(cfg, "family.eps", list)
        if not eps_list or any(not isinstance(e, (int, float)) or e <= 0 for e in eps_list):
            raise ConfigError("family.eps: expected a list of positive numbers")
        degree = _get(cfg, "family.degree", int, 4)
        seed0 = opts.seed if opts.seed is not None else _get(cfg, "family.seed", int, 0)
        n = _get(cfg, "family.n", int, 2)
        from .starshaped import RadialProfile
        for i in range(count):
            for eps in eps_list:
                jobs.append((seed0 + i, float(eps),
                             RadialProfile.random_perturbation(n, float(eps),
                                                               degree=degree,
                                                               seed=seed0 + i)))
    elif _walk(cfg, "profile") is not _MISSING:
        profile = _profile_from_config(cfg["profile"], seed_override=opts.seed,
                                       eps_override=opts.eps)
        jobs.append((opts.seed if opts.seed is not None else 0, opts.eps or 0.0, profile))
    else:
        raise ConfigError("profile (or family): required key is missing")

    grids = {}
    rows = []
    violations = 0
    for seed, eps, profile in jobs:
        if profile.n not in grids:
            grids[profile.n] = _grid_from_config(cfg, profile.n)
        scan = scan_short_spectrum(profile, seed_count=seed_count, window=window)
        rep = systolic_ratio(profile, grid=grids[profile.n], scan=scan)
        rows.append([seed, eps, rep.t_min, rep.volume, rep.rho,
                     int(rep.zoll_degenerate), rep.margin])
        log.info("profile %s: T_min=%.9f rho=%.9f orbits=%d",
                 profile.label, rep.t_min, rep.rho, rep.orbit_count)
        if rep.rho > 1.0 + tol:
            violations += 1
            log.warning("systolic ratio %.6f exceeds 1 + %g", rep.rho, tol)

    _write_csv(os.path.join(_out_dir(cfg, opts), "systolic_scan.csv"),
               CSV_COLUMNS["systolic-scan"], rows)
    return EXIT_TOLERANCE if violations else EXIT_OK


def cmd_spectrum(cfg: dict, opts) -> int:
    import numpy as np

    from .orbits import scan_short_spectrum

    profile = _profile_from_config(_get(cfg, "profile", dict),
                                   seed_override=opts.seed, eps_override=opts.eps)
    seed_count = _get(cfg, "scan.seed_count", int, 24)
    window = _get(cfg, "scan.window", float, 0.6)
    mode = _get(cfg, "mode", str, "first-order", {"first-order", "bottkol", "none"})

    predictions = []
    extra_seeds = None
    if mode != "none" and profile.kind == "poly":
        from .normalform import normal_form
        grid = _grid_from_config(cfg, profile.n)
        nf = normal_form(profile, grid, mode=mode, shoot=False)
        if not nf.degenerate:
            predictions = [math.pi * c.value for c in nf.criticals]
            pts = np.array([c.sphere_point() for c in nf.criticals])
            if nf.diffeo is not None:
                pts = nf.diffeo(pts)
            extra_seeds = profile.boundary_point(pts)
            log.info("predicted periods: %s",
                     ", ".join(f"{p:.9f}" for p in predictions))

    scan = scan_short_spectrum(profile, seed_count=seed_count, window=window,
                               extra_seeds=extra_seeds)
    rows = []
    for i, orbit in enumerate(scan.orbits):
        coords = [float(v) for c in orbit.seed for v in (c.real, c.imag)]
        if predictions:
            pred = min(predictions, key=lambda p: abs(p - orbit.period))
            pred_err = abs(pred - orbit.period)
        else:
            pred, pred_err = float("nan"), float("nan")
        rows.append([i] + coords + [orbit.period, orbit.closure_residual, pred, pred_err])
    header = CSV_COLUMNS["spectrum"] if profile.n == 2 else (
        ["group"] + [f"seed_{p}{j}" for j in range(1, profile.n + 1) for p in ("re", "im")]
        + ["period", "residual", "predicted_period", "prediction_error"])
    _write_csv(os.path.join(_out_dir(cfg, opts), "spectrum.csv"), header, rows)
    log.info("found %d distinct orbits (zoll_degenerate=%s)",
             len(scan.orbits), scan.zoll_degenerate)
    return EXIT_OK if scan.orbits else EXIT_TOLERANCE


def cmd_volume_check(cfg: dict, opts) -> int:
    from .normalform import synthetic_split_fields, volume_identity_check

    trials = _get(cfg, "trials", int, 10)
    seed0 = opts.seed if opts.seed is not None else _get(cfg, "seed", int, 0)
    scale = _get(cfg, "scale", float, 0.1)
    tol = _get(cfg, "tolerance", float, 1e-3)
    grid = _grid_from_config(cfg, 2)

    rows = []
    for i in range(trials):
        s_poly, eta, f_poly = synthetic_split_fields(seed=seed0 + i, scale=scale)
        res = volume_identity_check(s_poly, eta, f_poly, grid)
        res["seed"] = seed0 + i
        res["defect_ratio"] = abs(res["defect_integral"]) / res["volume_scale"]
        rows.append(res)
        log.info("trial %d: rel_err=%.3e defect_ratio=%.3e",
                 seed0 + i, res["rel_err"], res["defect_ratio"])

    max_rel = max(r["rel_err"] for r in rows)
    max_defect = max(r["defect_ratio"] for r in rows)
    ok = max_rel < tol and max_defect < tol
    report = {
        "command": "volume-check",
        "schema_version": CSV_SCHEMA_VERSION,
        "trials": trials,
        "scale": scale,
        "tolerance": tol,
        "rows": rows,
        "max_rel_err": max_rel,
        "max_defect_ratio": max_defect,
        "pass": ok,
    }
    _write_json(os.path.join(_out_dir(cfg, opts), "volume_check.json"), report)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_shadow(cfg: dict, opts) -> int:
    import numpy as np

    from .shadows import (random_symplectic_subspace, shadow_volume_ellipsoid,
                          shadow_volume_mc)
    from .symplectic import random_symplectic

    n = _get(cfg, "n", int, 2)
    k = _get(cfg, "k", int, 1)
    if not 1 <= k < n:
        raise ConfigError("k: need 1 <= k < n")
    count = _get(cfg, "count", int, 5)
    samples = opts.samples if opts.samples is not None else _get(
        cfg, "samples", int, 200_000)
    seed0 = opts.seed if opts.seed is not None else _get(cfg, "seed", int, 0)
    spread = _get(cfg, "spread", float, 1.0)
    rel_tol = _get(cfg, "tolerance", float, 0.015)

    rows = []
    failures = 0
    lower = math.pi ** k
    for i in range(count):
        rng = np.random.default_rng([seed0, i])
        phi = random_symplectic(n, spread=spread, rng=rng)
        sub = random_symplectic_subspace(n, k, rng)
        res = shadow_volume_mc(phi, sub, samples=samples, seed=seed0 + 7919 * i)
        row = res.to_json_dict()
        row["ellipsoid_route"] = shadow_volume_ellipsoid(phi, sub)
        row["lower_bound"] = lower
        gap = abs(res.exact - res.mc)
        row["mc_within_tolerance"] = bool(gap <= max(3.0 * res.stderr, rel_tol * res.exact))
        row["lower_bound_ok"] = bool(res.exact >= lower * (1.0 - 1e-9))
        row["routes_agree"] = bool(abs(row["ellipsoid_route"] - res.exact)
                                   <= 1e-8 * res.exact)
        rows.append(row)
        if not (row["mc_within_tolerance"] and row["lower_bound_ok"]
                and row["routes_agree"]):
            failures += 1
        log.info("trial %d: exact=%.6f mc=%.6f (+-%.6f)", i, res.exact, res.mc, res.stderr)

    report = {
        "command": "shadow",
        "schema_version": CSV_SCHEMA_VERSION,
        "n": n, "k": k, "count": count, "samples": samples, "seed": seed0,
        "rows": rows,
        "failures": failures,
        "pass": failures == 0,
    }
    _write_json(os.path.join(_out_dir(cfg, opts), "shadow.json"), report)
    return EXIT_OK if failures == 0 else EXIT_TOLERANCE


def cmd_genfun_roundtrip(cfg: dict, opts) -> int:
    import numpy as np

    from ._poly import random_poly
    from .generating import (GeneratingFunction, map_from_generating,
                             recover_generating)
    from .symplectic import real_to_complex

    n = _get(cfg, "n", int, 2)
    c = _get(cfg, "rotation_coefficient", float, 0.7)
    degree = _get(cfg, "poly.degree", int, 4)
    scale = _get(cfg, "poly.scale", float, 0.05)
    seed = opts.seed if opts.seed is not None else _get(cfg, "seed", int, 0)
    probe_count = _get(cfg, "probes", int, 128)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((probe_count, 2 * n))
    x *= 1.4 * rng.random((probe_count, 1)) ** (1.0 / (2 * n)) \
        / np.linalg.norm(x, axis=1, keepdims=True)
    probes = real_to_complex(x)

    rot = map_from_generating(GeneratingFunction.quadratic_radial(n, c))
    expected = np.exp(2j * math.atan(c)) * probes
    rotation_error = float(np.abs(rot(probes) - expected).max())

    poly = random_poly(2 * n, degree, rng, scale=scale, min_degree=1)
    gen = GeneratingFunction.from_poly(poly)
    phi = map_from_generating(gen)
    recovered = recover_generating(phi, n)
    roundtrip_sup = float(np.abs(gen.value(probes) - recovered.value(probes)).max())
    symplectic_defect = phi.symplectic_defect(probes[:16])
    map_roundtrip = phi.roundtrip_defect(probes)

    tols = {
        "rotation": _get(cfg, "tolerances.rotation", float, 1e-8),
        "roundtrip": _get(cfg, "tolerances.roundtrip", float, 1e-7),
        "symplectic": _get(cfg, "tolerances.symplectic", float, 1e-8),
    }
    ok = (rotation_error < tols["rotation"] and roundtrip_sup < tols["roundtrip"]
          and symplectic_defect < tols["symplectic"])
    report = {
        "command": "genfun-roundtrip",
        "schema_version": CSV_SCHEMA_VERSION,
        "n": n, "seed": seed,
        "rotation_coefficient": c,
        "rotation_error": rotation_error,
        "roundtrip_sup": roundtrip_sup,
        "symplectic_defect": symplectic_defect,
        "map_roundtrip": map_roundtrip,
        "hessian_probe_sup": phi.hessian_probe_sup,
        "tolerances": tols,
        "pass": ok,
    }
    _write_json(os.path.join(_out_dir(cfg, opts), "genfun_roundtrip.json"), report)
    for key in ("rotation_error", "roundtrip_sup", "symplectic_defect"):
        log.info("%s = %.3e", key, report[key])
    return EXIT_OK if ok else EXIT_TOLERANCE


def _random_band_limited_field(grid, seed: int):
    import numpy as np

    from ._poly import random_poly
    from .hopf import SphereField
    from .symplectic import real_to_complex

    rng = np.random.default_rng(seed)
    col = grid.collocation()
    pts = np.stack([col.real[..., 0], col.imag[..., 0],
                    col.real[..., 1], col.imag[..., 1]], axis=-1)
    comps = np.stack([random_poly(4, 2, rng)(pts) for _ in range(4)], axis=-1)
    vec = real_to_complex(comps)
    radial = np.sum(vec.real * col.real + vec.imag * col.imag, axis=-1)
    vec = vec - radial[..., None] * col
    return SphereField.from_samples(grid, vec, "vector")


def cmd_bottkol_check(cfg: dict, opts) -> int:
    import numpy as np

    from .hopf import SphereField
    from .normalform import bottkol_linear_solve, bottkol_newton

    seed = opts.seed if opts.seed is not None else _get(cfg, "seed", int, 0)
    lin_tol = _get(cfg, "tolerances.linear", float, 1e-9)
    exact_tol = _get(cfg, "tolerances.reeb_exactness", float, 1e-12)
    grid = _grid_from_config(cfg, 2)

    col = grid.collocation()
    reeb = SphereField.from_samples(grid, 2j * col, "vector")
    triple = bottkol_linear_solve(reeb)
    reeb_case = {
        "residual": triple.residual,
        "u_sup": triple.u.sup_norm(),
        "v_sup": triple.v.sup_norm(),
        "h_plus_one_sup": float(np.abs(triple.h.samples() + 1.0).max()),
    }
    random_field = _random_band_limited_field(grid, seed)
    random_case = {"residual": bottkol_linear_solve(random_field).residual}

    report = {
        "command": "bottkol-check",
        "schema_version": CSV_SCHEMA_VERSION,
        "seed": seed,
        "grid": {"base_nodes": grid.base_count, "fiber_modes": grid.fiber_modes},
        "reeb_input": reeb_case,
        "random_input": random_case,
    }
    ok = (reeb_case["residual"] < lin_tol and random_case["residual"] < lin_tol
          and max(reeb_case["u_sup"], reeb_case["v_sup"],
                  reeb_case["h_plus_one_sup"]) < exact_tol)

    if _walk(cfg, "newton") is not _MISSING:
        from .starshaped import RadialProfile
        eps = opts.eps if opts.eps is not None else _get(cfg, "newton.eps", float, 0.02)
        profile = RadialProfile.random_perturbation(
            2, eps, degree=_get(cfg, "newton.degree", int, 4),
            seed=_get(cfg, "newton.seed", int, seed))
        triple = bottkol_newton(profile, grid,
                                tol=_get(cfg, "newton.tol", float, None),
                                max_iter=_get(cfg, "newton.max_iter", int, None))
        hist = triple.residual_history
        drop = hist[0] / min(hist[:11]) if hist and min(hist[:11]) > 0 else float("inf")
        newton_report = {
            "profile": profile.label,
            "converged": triple.converged,
            "iterations": triple.iterations,
            "residual": triple.residual,
            "residual_history": hist,
            "drop_within_10": drop,
            "constraints": triple.theorem_residuals(),
        }
        report["newton"] = newton_report
        con_tol = _get(cfg, "tolerances.constraints", float, 1e-8)
        ok = ok and triple.converged and drop >= 1e4 \
            and max(newton_report["constraints"].values()) < con_tol
        log.info("newton: %d iterations, residual %.3e, drop %.2e",
                 triple.iterations, triple.residual, drop)

    report["pass"] = ok
    _write_json(os.path.join(_out_dir(cfg, opts), "bottkol_check.json"), report)
    log.info("linear residuals: reeb %.3e, random %.3e",
             reeb_case["residual"], random_case["residual"])
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_normal_form(cfg: dict, opts) -> int:
    from .normalform import normal_form

    profile = _profile_from_config(_get(cfg, "profile", dict),
                                   seed_override=opts.seed, eps_override=opts.eps)
    mode = _get(cfg, "mode", str, "bottkol", {"bottkol", "first-order"})
    shoot = _get(cfg, "shoot", bool, True)
    recon_tol = _get(cfg, "tolerances.reconstruction", float, 1e-8)
    grid = _grid_from_config(cfg, profile.n)

    nf = normal_form(profile, grid, mode=mode, shoot=shoot)
    report = nf.report()
    report["command"] = "normal-form"
    report["schema_version"] = CSV_SCHEMA_VERSION
    report["profile"] = profile.to_json_dict()

    ok = report["residuals"]["reconstruction"] < recon_tol
    period_tol = _get(cfg, "tolerances.period", float, None)
    if shoot and period_tol is not None and not nf.degenerate:
        worst = max((row["period_error"] for row in nf.orbit_rows), default=0.0)
        report["worst_period_error"] = worst
        ok = ok and worst < period_tol
    report["pass"] = ok
    _write_json(os.path.join(_out_dir(cfg, opts), "normal_form.json"), report)
    log.info("S range [%.9f, %.9f], reconstruction %.3e",
             report["S_stats"]["min"], report["S_stats"]["max"],
             report["residuals"]["reconstruction"])
    return EXIT_OK if ok else EXIT_TOLERANCE


COMMANDS = {
    "systolic-scan": cmd_systolic_scan,
    "spectrum": cmd_spectrum,
    "volume-check": cmd_volume_check,
    "shadow": cmd_shadow,
    "genfun-roundtrip": cmd_genfun_roundtrip,
    "bottkol-check": cmd_bottkol_check,
    "normal-form": cmd_normal_form,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zoll-lab",
        description="Numerical experiments on Reeb dynamics near the round contact sphere.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--samples", type=int, default=None,
                        help="override Monte Carlo sample count")
    parser.add_argument("--eps", type=float, default=None,
                        help="override perturbation size")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    opts = parser.parse_args(argv)

    threads = os.environ.get("ZOLL_LAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if opts.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(opts.config)
        _check_keys(cfg, CONFIG_KEYS[opts.command])
        return COMMANDS[opts.command](cfg, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
