"""Path-following semismooth Newton driver.

Inner loop: Newton steps on the stabilized system with residual-norm
backtracking and a fixed nonmonotone fallback step.  Outer loop: geometric
reduction of the regularization weights (gamma, delta) with a linear
extrapolation predictor between consecutive converged iterates.  A further
continuation layer increases the reduction factor nu and restarts from the
last successful iterate whenever an inner solve fails.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import fem
from .kernels import MultibangLevels, multibang_control_deriv
from .linsolve import SingularSystemError, solve_sparse
from .optsys import (Iterate, ProblemData, control_field, field_norm_sq,
                     multiplier_field, newton_matrix, residual, residual_norm,
                     solve_control_subproblem)

MU_RULES = ("auto", "inv-delta", "delta")
SOLVERS = ("reduced", "monolithic")


@dataclass
class SolverParams:
    """Algorithm parameters; defaults follow the reference experiments."""

    gamma0: float = 1e5
    delta0: float = 1e3
    nu: float = 0.8
    nu_max: float = 0.9999
    tol_r: float = 1e-3
    tol_F: float = 1e-5
    sigma_min: float = 1e-6
    sigma_nm: float = 1e-2
    max_inner: int = 50
    max_outer: int = 200
    mu_rule: str = "inv-delta"
    solver: str = "reduced"

    @classmethod
    def defaults_for(cls, levels: MultibangLevels, **overrides) -> "SolverParams":
        """Parameters with tol_r = 1e-3 (u_max - u_min), as used in the experiments."""
        overrides.setdefault("tol_r", 1e-3 * levels.top)
        return cls(**overrides)

    def validate(self) -> list[str]:
        issues = []
        if self.gamma0 <= 0.0:
            issues.append("gamma0 must be positive")
        if self.delta0 <= 0.0:
            issues.append("delta0 must be positive")
        if not 0.0 < self.nu < 1.0:
            issues.append("nu must lie in (0, 1)")
        # equality is reachable by the continuation's final attempt
        if not (self.nu <= self.nu_max < 1.0):
            issues.append("nu_max must lie in [nu, 1)")
        if self.tol_r <= 0.0:
            issues.append("tol_r must be positive")
        if self.tol_F <= 0.0:
            issues.append("tol_F must be positive")
        if not 0.0 < self.sigma_min <= 1.0:
            issues.append("sigma_min must lie in (0, 1]")
        if not 0.0 < self.sigma_nm <= 1.0:
            issues.append("sigma_nm must lie in (0, 1]")
        if self.max_inner < 1:
            issues.append("max_inner must be at least 1")
        if self.max_outer < 1:
            issues.append("max_outer must be at least 1")
        if self.mu_rule not in MU_RULES:
            issues.append(f"mu_rule must be one of {MU_RULES}")
        if self.solver not in SOLVERS:
            issues.append(f"solver must be one of {SOLVERS}")
        return issues

    def mu_of(self, delta: float) -> float:
        """Stabilization weight for the (3,3) Newton block.

        'inv-delta' is the plain rule mu = 1/delta; 'delta' is the
        accelerated large-weight variant mu = delta, paired with folding the
        stabilization into the residual so the Newton derivative is exact
        (that variant tracks a perturbed system and is unsuitable near
        convergence); 'auto' uses the accelerated pairing while delta > 1 and
        the plain rule afterwards.
        """
        if self.mu_rule == "inv-delta":
            return 1.0 / delta
        if self.mu_rule == "delta":
            return delta
        return delta if delta > 1.0 else 1.0 / delta

    def mu_shift_of(self, delta: float) -> float:
        """Residual modification weight (0 keeps the plain system)."""
        if self.mu_rule == "delta":
            return delta
        if self.mu_rule == "auto" and delta > 1.0:
            return delta
        return 0.0


@dataclass
class InnerStep:
    """One accepted Newton step."""

    j: int
    norm_before: float
    sigma: float
    backtracks: int
    nonmonotone: bool
    norm_after: float
    subsolver_iterations: int = 0


@dataclass
class OuterRecord:
    k: int
    gamma: float
    delta: float
    inner_steps: list
    norm_start: float
    norm_final: float
    converged: bool
    r_k: Optional[float] = None
    failure: Optional[str] = None
    predictor_fallback: bool = False


@dataclass
class RestartRecord:
    after_outer: int
    nu_new: float
    gamma_base: float
    delta_base: float


@dataclass
class RunLog:
    """Chronological solver trace; serializable as text lines and as JSON."""

    records: list = field(default_factory=list)

    def add(self, rec) -> None:
        self.records.append(rec)

    @property
    def outer_records(self) -> list:
        return [r for r in self.records if isinstance(r, OuterRecord)]

    @property
    def restart_records(self) -> list:
        return [r for r in self.records if isinstance(r, RestartRecord)]

    def to_text_lines(self) -> list[str]:
        lines = []
        for rec in self.records:
            if isinstance(rec, RestartRecord):
                lines.append(f"restart after_outer={rec.after_outer} "
                             f"nu={rec.nu_new:.17g} gamma_base={rec.gamma_base:.17g} "
                             f"delta_base={rec.delta_base:.17g}")
                continue
            lines.append(f"outer k={rec.k} gamma={rec.gamma:.17g} "
                         f"delta={rec.delta:.17g} normF0={rec.norm_start:.17g}")
            for s in rec.inner_steps:
                flag = " nonmonotone" if s.nonmonotone else ""
                lines.append(f"  inner j={s.j} normF={s.norm_before:.17g} "
                             f"sigma={s.sigma:.17g} backtracks={s.backtracks}"
                             f"{flag} -> {s.norm_after:.17g}")
            status = "ok" if rec.converged else f"FAIL({rec.failure})"
            rk = "None" if rec.r_k is None else f"{rec.r_k:.17g}"
            lines.append(f"outer k={rec.k} done inner_iters={len(rec.inner_steps)} "
                         f"normF={rec.norm_final:.17g} r_k={rk} status={status}")
        return lines

    def summary(self) -> dict:
        outers = []
        for rec in self.outer_records:
            outers.append({
                "k": rec.k,
                "gamma": rec.gamma,
                "delta": rec.delta,
                "inner_iterations": len(rec.inner_steps),
                "norm_final": rec.norm_final,
                "converged": rec.converged,
                "r_k": rec.r_k,
                "sigmas": [s.sigma for s in rec.inner_steps],
                "nonmonotone_steps": sum(s.nonmonotone for s in rec.inner_steps),
            })
        restarts = [{"after_outer": r.after_outer, "nu_new": r.nu_new,
                     "gamma_base": r.gamma_base, "delta_base": r.delta_base}
                    for r in self.restart_records]
        return {"outer": outers, "restarts": restarts}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


class InnerFailure(Exception):
    """Inner Newton loop did not reach the residual tolerance."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class PathResult:
    zeta: Iterate
    u: np.ndarray
    q: np.ndarray
    log: RunLog
    converged: bool
    gamma_final: float
    delta_final: float
    nu_final: float
    outer_iterations: int
    status: str = "converged"
    iterate_history: Optional[list] = None


def path_norm(data: ProblemData, dzeta: Iterate, du: np.ndarray,
              dq: np.ndarray) -> float:
    """L2 norm of the concatenated fields (zeta, u, q)."""
    sq = (field_norm_sq(data, dzeta.y) + field_norm_sq(data, dzeta.p)
          + float(dzeta.psi @ (data.psi_mass * dzeta.psi))
          + field_norm_sq(data, du) + field_norm_sq(data, dq))
    return float(np.sqrt(max(sq, 0.0)))


def inner_newton(data: ProblemData, zeta0: Iterate, gamma: float, delta: float,
                 params: SolverParams, record: OuterRecord) -> Iterate:
    """Semismooth Newton loop at fixed (gamma, delta).

    Accepts the first halved step length that strictly decreases the residual
    norm; if backtracking reaches sigma_min without decrease, takes the fixed
    nonmonotone step.  Raises InnerFailure when the iteration cap is hit or a
    Newton system is singular.

    The default 'reduced' solver eliminates the control/dual subsystem
    exactly at every trial point and performs Newton steps on the
    state/adjoint pair only; 'monolithic' takes full stabilized Newton steps
    on the stacked unknown as spelled out by the Newton-step equation.
    """
    if params.solver == "monolithic":
        return _inner_monolithic(data, zeta0, gamma, delta, params, record)
    return _inner_reduced(data, zeta0, gamma, delta, params, record)


def _inner_monolithic(data: ProblemData, zeta0: Iterate, gamma: float,
                      delta: float, params: SolverParams,
                      record: OuterRecord) -> Iterate:
    mu = params.mu_of(delta)
    mu_shift = params.mu_shift_of(delta)
    zeta = zeta0.copy()
    r = residual(data, zeta, gamma, delta, mu_shift)
    norm_r = residual_norm(data, r)
    record.norm_start = norm_r
    j = 0
    while norm_r > params.tol_F:
        if j >= params.max_inner:
            record.norm_final = norm_r
            raise InnerFailure(f"max_inner={params.max_inner} exceeded")
        J = newton_matrix(data, zeta, gamma, delta, mu)
        try:
            step_vec = solve_sparse(J, -r)
        except SingularSystemError as exc:
            record.norm_final = norm_r
            raise InnerFailure(f"singular Newton system: {exc}") from exc
        step = Iterate.from_vector(data.mesh, step_vec)

        sigma = 1.0
        backtracks = 0
        nonmonotone = False
        while True:
            trial = Iterate(zeta.y + sigma * step.y, zeta.p + sigma * step.p,
                            zeta.psi + sigma * step.psi)
            r_trial = residual(data, trial, gamma, delta, mu_shift)
            norm_trial = residual_norm(data, r_trial)
            if norm_trial < norm_r:
                break
            sigma = sigma / 2.0
            backtracks += 1
            if sigma < params.sigma_min:
                sigma = params.sigma_nm
                nonmonotone = True
                trial = Iterate(zeta.y + sigma * step.y,
                                zeta.p + sigma * step.p,
                                zeta.psi + sigma * step.psi)
                r_trial = residual(data, trial, gamma, delta, mu_shift)
                norm_trial = residual_norm(data, r_trial)
                break

        record.inner_steps.append(InnerStep(j, norm_r, sigma, backtracks,
                                            nonmonotone, norm_trial))
        zeta, r, norm_r = trial, r_trial, norm_trial
        j += 1
    record.norm_final = norm_r
    record.converged = True
    return zeta


def _reduced_newton_matrix(data: ProblemData, y: np.ndarray, p: np.ndarray,
                           u: np.ndarray, q: np.ndarray,
                           gamma: float) -> sp.csr_matrix:
    """State/adjoint block of the Newton derivative with the control chain
    rule evaluated at the eliminated subsystem's solution."""
    mesh = data.mesh
    n = mesh.n_vertices
    A_u = fem.assemble_stiffness(mesh, u + data.levels.shift)
    B_y = fem.assemble_coupling(mesh, y)
    B_p = fem.assemble_coupling(mesh, p)
    gprime = multibang_control_deriv(q, gamma, data.levels)
    scale = sp.diags(-gprime / (data.alpha * data.lumped))
    E_y = (scale @ B_p).tocsr()
    E_p = (scale @ B_y).tocsr()
    C_p = B_p.T.tocsr()
    C_y = B_y.T.tocsr()
    J = sp.bmat([[C_p @ E_y + data.mass, C_p @ E_p + A_u],
                 [C_y @ E_y + A_u, C_y @ E_p]], format="csr")
    keep = np.ones(2 * n)
    bidx = mesh.boundary_indices
    keep[bidx] = 0.0
    keep[n + bidx] = 0.0
    pin = sp.coo_matrix((np.ones(2 * len(bidx)),
                         (np.concatenate([bidx, n + bidx]),
                          np.concatenate([bidx, n + bidx]))),
                        shape=(2 * n, 2 * n))
    return (sp.diags(keep) @ J + pin).tocsr()


def _inner_reduced(data: ProblemData, zeta0: Iterate, gamma: float,
                   delta: float, params: SolverParams,
                   record: OuterRecord) -> Iterate:
    mesh = data.mesh
    n = mesh.n_vertices
    sub_tol = 0.2 * params.tol_F

    def eliminate(y, p, warm_u, warm_psi, budget, tol):
        a = fem.coupling_apply(mesh, y, p)
        res = solve_control_subproblem(data, a, gamma, delta, warm_u=warm_u,
                                       warm_psi=warm_psi, tol=tol,
                                       max_iter=budget)
        return res

    warm_u = control_field(data, zeta0, gamma)
    sub = eliminate(zeta0.y, zeta0.p, warm_u, zeta0.psi, budget=600, tol=sub_tol)
    if sub.consistency > sub_tol:
        record.norm_final = np.inf
        raise InnerFailure("control subproblem did not converge at start")
    zeta = Iterate(zeta0.y.copy(), zeta0.p.copy(), sub.psi)
    u, q = sub.u, sub.q
    cp_total = sub.iterations
    r = residual(data, zeta, gamma, delta)
    norm_r = residual_norm(data, r)
    record.norm_start = norm_r
    j = 0
    while norm_r > params.tol_F:
        if j >= params.max_inner:
            record.norm_final = norm_r
            raise InnerFailure(f"max_inner={params.max_inner} exceeded")
        J = _reduced_newton_matrix(data, zeta.y, zeta.p, u, q, gamma)
        try:
            step_vec = solve_sparse(J, -r[:2 * n])
        except SingularSystemError as exc:
            record.norm_final = norm_r
            raise InnerFailure(f"singular Newton system: {exc}") from exc
        s_y, s_p = step_vec[:n], step_vec[n:]

        # crude elimination suffices while the residual is large
        trial_tol = max(sub_tol, 0.1 * norm_r)
        sigma = 1.0
        backtracks = 0
        nonmonotone = False
        cp_step = 0
        while True:
            ty = zeta.y + sigma * s_y
            tp = zeta.p + sigma * s_p
            sub = eliminate(ty, tp, u, zeta.psi, budget=400, tol=trial_tol)
            cp_step += sub.iterations
            trial = Iterate(ty, tp, sub.psi)
            r_trial = residual(data, trial, gamma, delta)
            norm_trial = residual_norm(data, r_trial)
            acceptable = sub.consistency <= trial_tol
            if acceptable and norm_trial < norm_r:
                break
            sigma = sigma / 2.0
            backtracks += 1
            if sigma < params.sigma_min:
                sigma = params.sigma_nm
                nonmonotone = True
                ty = zeta.y + sigma * s_y
                tp = zeta.p + sigma * s_p
                sub = eliminate(ty, tp, u, zeta.psi, budget=600, tol=trial_tol)
                cp_step += sub.iterations
                if sub.consistency > trial_tol:
                    record.norm_final = norm_r
                    raise InnerFailure("control subproblem did not converge")
                trial = Iterate(ty, tp, sub.psi)
                r_trial = residual(data, trial, gamma, delta)
                norm_trial = residual_norm(data, r_trial)
                break

        record.inner_steps.append(InnerStep(j, norm_r, sigma, backtracks,
                                            nonmonotone, norm_trial, cp_step))
        zeta, r, norm_r = trial, r_trial, norm_trial
        u, q = sub.u, sub.q
        cp_total += cp_step
        j += 1
    record.norm_final = norm_r
    record.converged = True
    return zeta


def path_follow(data: ProblemData, params: SolverParams,
                zeta0: Optional[Iterate] = None, log: Optional[RunLog] = None,
                keep_iterates: bool = False, outer_offset: int = 0) -> PathResult:
    """Outer regularization path at fixed nu.

    Weights follow gamma_k = gamma0 nu^k and delta_k = delta0 nu^k (evaluated
    as powers so the geometric law holds bitwise).  Stops once two consecutive
    iterate distances r_k fall below tol_r.  An inner failure or the outer cap
    ends the path with converged=False; the last successful iterate is
    returned so a continuation layer can restart from it.
    """
    issues = params.validate()
    if issues:
        raise ValueError("; ".join(issues))
    log = log if log is not None else RunLog()
    zeta_start = zeta0.copy() if zeta0 is not None else Iterate.zero(data.mesh)
    history = [] if keep_iterates else None

    prev: Optional[tuple] = None       # (zeta_opt, u_opt, q_opt) at k-1
    last_success: Optional[tuple] = None  # (zeta_opt, gamma_k, delta_k)
    r_prev = params.tol_r + 1.0        # r_{k-1}, seeded above tolerance
    k = 0
    status = "converged"
    converged = False
    gamma = params.gamma0
    delta = params.delta0
    while True:
        if k >= params.max_outer:
            status = f"max_outer={params.max_outer} exceeded"
            break
        gamma = params.gamma0 * params.nu ** k
        delta = params.delta0 * params.nu ** k
        record = OuterRecord(k=outer_offset + k, gamma=gamma, delta=delta,
                             inner_steps=[], norm_start=np.nan,
                             norm_final=np.nan, converged=False)
        log.add(record)
        try:
            zeta_opt = inner_newton(data, zeta_start, gamma, delta, params, record)
        except InnerFailure as exc:
            # the extrapolated start is only an accelerator: retry once from
            # the last converged iterate before escalating the continuation
            if prev is not None and not record.predictor_fallback:
                record.failure = f"predictor start failed: {exc.reason}"
                record.predictor_fallback = True
                record.inner_steps = []
                try:
                    zeta_opt = inner_newton(data, prev[0], gamma, delta,
                                            params, record)
                except InnerFailure as exc2:
                    record.failure = exc2.reason
                    status = f"inner failure at k={outer_offset + k}: {exc2.reason}"
                    break
            else:
                record.failure = exc.reason
                status = f"inner failure at k={outer_offset + k}: {exc.reason}"
                break
        q_opt = multiplier_field(data, zeta_opt)
        u_opt = control_field(data, zeta_opt, gamma)
        last_success = (zeta_opt, gamma, delta)

        if k >= 1:
            zp, up, qp = prev
            diff = Iterate(zeta_opt.y - zp.y, zeta_opt.p - zp.p,
                           zeta_opt.psi - zp.psi)
            r_k = path_norm(data, diff, u_opt - up, q_opt - qp)
            zeta_start = Iterate((1.0 + params.nu) * zeta_opt.y - params.nu * zp.y,
                                 (1.0 + params.nu) * zeta_opt.p - params.nu * zp.p,
                                 (1.0 + params.nu) * zeta_opt.psi - params.nu * zp.psi)
        else:
            r_k = params.tol_r + 1.0
            zeta_start = zeta_opt.copy()
        record.r_k = r_k
        if keep_iterates:
            history.append({"k": outer_offset + k, "gamma": gamma, "delta": delta,
                            "zeta_opt": zeta_opt.copy(), "u_opt": u_opt.copy(),
                            "q_opt": q_opt.copy(), "predictor": zeta_start.copy(),
                            "r_k": r_k})
        prev = (zeta_opt.copy(), u_opt, q_opt)
        k += 1
        if r_k <= params.tol_r and r_prev <= params.tol_r:
            converged = True
            break
        r_prev = r_k

    if last_success is None:
        zeta_out = zeta_start
        gamma_out, delta_out = gamma, delta
        u_out = control_field(data, zeta_out, gamma_out)
        q_out = multiplier_field(data, zeta_out)
    else:
        zeta_out, gamma_out, delta_out = last_success
        u_out, q_out = u_opt, q_opt
    return PathResult(zeta=zeta_out, u=u_out, q=q_out, log=log,
                      converged=converged, gamma_final=gamma_out,
                      delta_final=delta_out, nu_final=params.nu,
                      outer_iterations=k, status=status if not converged else "converged",
                      iterate_history=history)


def nu_continuation(data: ProblemData, params: SolverParams,
                    zeta0: Optional[Iterate] = None,
                    log: Optional[RunLog] = None) -> PathResult:
    """Restart wrapper: on inner failure, move nu halfway toward 1 (capped at
    nu_max) and resume the path from the last successful iterate and weights.

    Gives up once a failure occurs at nu >= nu_max, returning the best
    iterate found with converged=False.  Running out of the outer budget is
    terminal as well, since a larger nu only slows the weight reduction.
    """
    log = log if log is not None else RunLog()
    nu = params.nu
    base_zeta = zeta0.copy() if zeta0 is not None else Iterate.zero(data.mesh)
    base_gamma, base_delta = params.gamma0, params.delta0
    offset = 0
    while True:
        attempt = replace(params, nu=nu, gamma0=base_gamma, delta0=base_delta)
        result = path_follow(data, attempt, base_zeta, log, outer_offset=offset)
        result = replace(result, nu_final=nu)
        if result.converged or result.status.startswith("max_outer"):
            return result
        if not result.status.startswith("inner failure"):
            return result
        offset += result.outer_iterations + 1
        # resume from the last iterate (and weights) that did converge
        base_zeta = result.zeta.copy()
        base_gamma, base_delta = result.gamma_final, result.delta_final
        if nu >= params.nu_max:
            return replace(result, status=result.status + "; nu_max reached")
        nu = min(0.5 * (1.0 + nu), params.nu_max)
        log.add(RestartRecord(after_outer=offset - 1, nu_new=nu,
                              gamma_base=base_gamma, delta_base=base_delta))
