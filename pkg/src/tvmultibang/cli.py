"""Batch command-line front end.

Subcommands:
    run            solve a scenario (optionally a beta sweep) and persist results
    validate       check a configuration without running
    export-design  write the ground-truth design and mesh tables only

Configuration comes from an optional key = value file plus flags; flags
override the file.  All defaults equal the reference experiment values.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .fileio import (load_custom_scenario, read_keyvalues, write_field_csv,
                     write_keyvalues, write_mesh_csv, write_psi_csv,
                     write_scenario, write_vtk)
from .kernels import MultibangLevels
from .optsys import objective_terms
from .pathfollow import MU_RULES, SOLVERS, RunLog, SolverParams, nu_continuation
from .scenarios import Scenario, build_scenario

CONFIG_KEYS = {
    "scenario": str, "nx": int, "ny": int,
    "xmin": float, "xmax": float, "ymin": float, "ymax": float,
    "beta": str, "alpha": float, "levels": str, "u_min": float,
    "noise_level": float, "seed": int, "out": str,
    "gamma0": float, "delta0": float, "nu": float, "nu_max": float,
    "tol_r": float, "tol_F": float, "sigma_min": float, "sigma_nm": float,
    "max_inner": int, "max_outer": int, "mu_rule": str, "solver": str,
    "vtk": int,
}

DEFAULTS = {
    "scenario": "example1", "nx": 64, "ny": 64,
    "xmin": -1.0, "xmax": 1.0, "ymin": -1.0, "ymax": 1.0,
    "beta": "0", "alpha": None, "levels": None, "u_min": 1.5,
    "noise_level": None, "seed": 0, "out": "out",
    "gamma0": 1e5, "delta0": 1e3, "nu": 0.8, "nu_max": 0.9999,
    "tol_r": None, "tol_F": 1e-5, "sigma_min": 1e-6, "sigma_nm": 1e-2,
    "max_inner": 50, "max_outer": 200, "mu_rule": "inv-delta",
    "solver": "reduced", "vtk": 0,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvmultibang",
        description="TV-regularized multi-bang diffusion coefficient reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--scenario", help="example1 | example2 | path to a custom scenario file")
        p.add_argument("--nx", type=int)
        p.add_argument("--ny", type=int)
        p.add_argument("--beta", help="TV weight, or comma list for a sweep")
        p.add_argument("--alpha", type=float)
        p.add_argument("--levels", help="comma list of desired values, first must be 0")
        p.add_argument("--u-min", dest="u_min", type=float)
        p.add_argument("--noise-level", dest="noise_level", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--gamma0", type=float)
        p.add_argument("--delta0", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--nu-max", dest="nu_max", type=float)
        p.add_argument("--tol-r", dest="tol_r", type=float)
        p.add_argument("--tol-f", dest="tol_F", type=float)
        p.add_argument("--sigma-min", dest="sigma_min", type=float)
        p.add_argument("--sigma-nm", dest="sigma_nm", type=float)
        p.add_argument("--max-inner", dest="max_inner", type=int)
        p.add_argument("--max-outer", dest="max_outer", type=int)
        p.add_argument("--mu-rule", dest="mu_rule", choices=MU_RULES)
        p.add_argument("--solver", choices=SOLVERS)
        p.add_argument("--vtk", action="store_const", const=1,
                       help="also write legacy ASCII VTK output")

    for name, hlp in (("run", "solve and persist results"),
                      ("validate", "check configuration without running"),
                      ("export-design", "write ground truth and mesh tables only")):
        p = sub.add_parser(name, help=hlp)
        add_common(p)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Layer defaults, config file, and flags (flags win)."""
    cfg = dict(DEFAULTS)
    if args.config:
        file_kv = read_keyvalues(args.config)
        for key, raw in file_kv.items():
            if key not in CONFIG_KEYS:
                raise ValueError(f"unknown configuration key '{key}'")
            cfg[key] = CONFIG_KEYS[key](raw)
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def parse_beta_list(cfg: dict) -> list[float]:
    return [float(tok) for tok in str(cfg["beta"]).split(",") if tok.strip() != ""]


def parse_levels(cfg: dict):
    if cfg["levels"] is None:
        return None
    return tuple(float(tok) for tok in str(cfg["levels"]).split(","))


def validate_config(cfg: dict) -> list[str]:
    """Human-readable diagnostics; empty means the configuration is runnable."""
    issues: list[str] = []
    scen = cfg["scenario"]
    if scen not in ("example1", "example2") and not os.path.exists(scen):
        issues.append(f"scenario '{scen}' is neither a named scenario nor a file")
    if cfg["nx"] < 1 or cfg["ny"] < 1:
        issues.append("nx and ny must be at least 1")
    if not (cfg["xmax"] > cfg["xmin"] and cfg["ymax"] > cfg["ymin"]):
        issues.append("invalid rectangle extents")
    try:
        betas = parse_beta_list(cfg)
        if not betas:
            issues.append("beta list is empty")
        if any(b < 0 for b in betas):
            issues.append("beta must be nonnegative")
    except ValueError:
        issues.append("beta list is not numeric")
    levels = None
    try:
        levels = parse_levels(cfg)
    except ValueError:
        issues.append("levels list is not numeric")
    if levels is not None:
        if levels[0] != 0.0:
            issues.append("u_1 must be 0")
        if len(levels) < 2:
            issues.append("need at least two levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            issues.append("levels must be strictly increasing")
    if cfg["u_min"] <= 0:
        issues.append("u_min must be positive")
    if cfg["alpha"] is not None and cfg["alpha"] <= 0:
        issues.append("alpha must be positive")
    if cfg["noise_level"] is not None and cfg["noise_level"] < 0:
        issues.append("noise_level must be nonnegative")
    params = solver_params_from(cfg, levels)
    issues.extend(params.validate())
    if not params.nu < params.nu_max:
        issues.append("nu must be strictly below nu_max")
    return issues


def solver_params_from(cfg: dict, levels) -> SolverParams:
    tol_r = cfg["tol_r"]
    if tol_r is None:
        top = levels[-1] if levels else default_levels_for(cfg["scenario"])[-1]
        tol_r = 1e-3 * top
    return SolverParams(gamma0=cfg["gamma0"], delta0=cfg["delta0"], nu=cfg["nu"],
                        nu_max=cfg["nu_max"], tol_r=tol_r, tol_F=cfg["tol_F"],
                        sigma_min=cfg["sigma_min"], sigma_nm=cfg["sigma_nm"],
                        max_inner=cfg["max_inner"], max_outer=cfg["max_outer"],
                        mu_rule=cfg["mu_rule"], solver=cfg["solver"])


def default_levels_for(name: str) -> tuple:
    if name == "example2":
        return (0.0, 0.1, 0.2)
    return (0.0, 0.25, 0.5, 0.75, 1.0)


def make_scenario(cfg: dict, beta: float) -> Scenario:
    name = cfg["scenario"]
    if name in ("example1", "example2"):
        return build_scenario(
            name, cfg["nx"], cfg["ny"], beta=beta, alpha=cfg["alpha"],
            levels=parse_levels(cfg), u_min=cfg["u_min"], seed=cfg["seed"],
            extents=(cfg["xmin"], cfg["xmax"], cfg["ymin"], cfg["ymax"]),
            noise_level=cfg["noise_level"])
    scenario = load_custom_scenario(name)
    if beta != scenario.beta:
        scenario.beta = beta
    return scenario


def level_fractions(u: np.ndarray, levels: MultibangLevels, tol: float = 1e-2):
    """Fraction of vertices within tol of each level, and of any level."""
    lv = levels.as_array()
    dists = np.abs(u[:, None] - lv[None, :])
    per_level = (dists <= tol).mean(axis=0)
    any_level = (dists.min(axis=1) <= tol).mean()
    return per_level, float(any_level)


def run_single(cfg: dict, beta: float, outdir: str) -> bool:
    os.makedirs(outdir, exist_ok=True)
    scenario = make_scenario(cfg, beta)
    data = scenario.problem()
    params = solver_params_from(cfg, scenario.levels.levels)
    log = RunLog()
    result = nu_continuation(data, params, log=log)

    mesh = scenario.mesh
    y, p, psi = result.zeta.y, result.zeta.p, result.zeta.psi
    write_field_csv(os.path.join(outdir, "u.csv"), mesh, result.u)
    write_field_csv(os.path.join(outdir, "y.csv"), mesh, y)
    write_field_csv(os.path.join(outdir, "p.csv"), mesh, p)
    write_field_csv(os.path.join(outdir, "q.csv"), mesh, result.q)
    write_field_csv(os.path.join(outdir, "u_true.csv"), mesh, scenario.u_true)
    write_field_csv(os.path.join(outdir, "z.csv"), mesh, scenario.z)
    write_psi_csv(os.path.join(outdir, "psi.csv"), mesh, psi)
    write_mesh_csv(outdir, mesh)
    if scenario.name != "custom":
        write_scenario(os.path.join(outdir, "scenario.txt"), scenario)
    if cfg["vtk"]:
        write_vtk(os.path.join(outdir, "fields.vtk"), mesh,
                  {"u": result.u, "y": y, "p": p, "q": result.q,
                   "u_true": scenario.u_true, "z": scenario.z})

    with open(os.path.join(outdir, "log.txt"), "w") as fh:
        fh.write("\n".join(log.to_text_lines()) + "\n")
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        fh.write(log.to_json() + "\n")

    tracking, ghat, tv, total = objective_terms(data, result.u)
    per_level, any_level = level_fractions(result.u, scenario.levels)
    meta = {
        "scenario": scenario.name,
        "nx": mesh.grid.nx, "ny": mesh.grid.ny,
        "xmin": mesh.grid.xmin, "xmax": mesh.grid.xmax,
        "ymin": mesh.grid.ymin, "ymax": mesh.grid.ymax,
        "n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
        "levels": list(scenario.levels.levels),
        "u_min": scenario.levels.shift,
        "alpha": scenario.alpha, "beta": beta,
        "noise_level": scenario.noise_level, "seed": scenario.seed,
        "gamma0": params.gamma0, "delta0": params.delta0,
        "nu": params.nu, "nu_max": params.nu_max,
        "tol_r": params.tol_r, "tol_F": params.tol_F,
        "sigma_min": params.sigma_min, "sigma_nm": params.sigma_nm,
        "max_inner": params.max_inner, "max_outer": params.max_outer,
        "mu_rule": params.mu_rule, "solver": params.solver,
        "converged": int(result.converged),
        "status": result.status,
        "nu_final": result.nu_final,
        "gamma_final": result.gamma_final, "delta_final": result.delta_final,
        "outer_iterations": len(log.outer_records),
        "inner_iterations": sum(len(r.inner_steps) for r in log.outer_records),
        "restarts": len(log.restart_records),
        "objective": total, "tracking": tracking,
        "multibang_integral": ghat, "tv": tv,
        "u_shifted_min": float(result.u.min()),
        "u_shifted_max": float(result.u.max()),
        "coeff_min": float(result.u.min() + scenario.levels.shift),
        "coeff_max": float(result.u.max() + scenario.levels.shift),
        "level_tolerance": 1e-2,
        "level_fraction_any": any_level,
    }
    for lv, frac in zip(scenario.levels.levels, per_level):
        meta[f"level_fraction_{lv:g}"] = float(frac)
    write_keyvalues(os.path.join(outdir, "meta.txt"), meta)
    print(f"[{outdir}] converged={bool(result.converged)} "
          f"gamma_final={result.gamma_final:.3e} objective={total:.6e}")
    return result.converged


def run_command(cfg: dict) -> int:
    issues = validate_config(cfg)
    if issues:
        for msg in issues:
            print("error:", msg, file=sys.stderr)
        return 2
    betas = parse_beta_list(cfg)
    ok = True
    if len(betas) == 1:
        ok = run_single(cfg, betas[0], cfg["out"])
    else:
        for beta in betas:
            sub = os.path.join(cfg["out"], f"beta_{beta:g}")
            ok = run_single(cfg, beta, sub) and ok
    return 0 if ok else 1


def export_design_command(cfg: dict) -> int:
    issues = validate_config(cfg)
    if issues:
        for msg in issues:
            print("error:", msg, file=sys.stderr)
        return 2
    beta = parse_beta_list(cfg)[0]
    scenario = make_scenario(cfg, beta)
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    mesh = scenario.mesh
    write_field_csv(os.path.join(outdir, "u_true.csv"), mesh, scenario.u_true)
    write_field_csv(os.path.join(outdir, "z.csv"), mesh, scenario.z)
    write_mesh_csv(outdir, mesh)
    write_keyvalues(os.path.join(outdir, "meta.txt"), {
        "scenario": scenario.name,
        "nx": mesh.grid.nx, "ny": mesh.grid.ny,
        "xmin": mesh.grid.xmin, "xmax": mesh.grid.xmax,
        "ymin": mesh.grid.ymin, "ymax": mesh.grid.ymax,
        "n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
        "levels": list(scenario.levels.levels),
        "u_min": scenario.levels.shift,
    })
    print(f"[{outdir}] wrote design tables for {scenario.name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    if args.command == "validate":
        issues = validate_config(cfg)
        if not issues:
            print("configuration ok")
            return 0
        for msg in issues:
            print("violation:", msg)
        return 1
    if args.command == "export-design":
        return export_design_command(cfg)
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
