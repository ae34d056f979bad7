"""Reduced regularized optimality system.

The unknown is the stacked iterate zeta = (y, p, psi): state, adjoint, and the
per-element TV dual variable.  The coefficient multiplier q and the control u
are induced fields,

    q(zeta) = -(1/alpha) Ml^{-1} (B(y) p + beta D^T psi),
    u(zeta) = control_map(q(zeta)),

and the root problem is the three-block residual: adjoint equation, state
equation, and the element-wise consistency D u(zeta) = shrink(psi).  Boundary
rows of the first two blocks pin y resp. p to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import fem
from .kernels import (MultibangLevels, multibang_control_deriv,
                      multibang_control_map, multibang_penalty_box,
                      tv_dual_source, tv_shrink, tv_shrink_jac)
from .linsolve import SingularSystemError, solve_sparse
from .mesh import TriMesh


@dataclass
class Iterate:
    """Stacked unknown (y, p, psi) of the reduced system."""

    y: np.ndarray
    p: np.ndarray
    psi: np.ndarray

    @classmethod
    def zero(cls, mesh: TriMesh) -> "Iterate":
        return cls(np.zeros(mesh.n_vertices), np.zeros(mesh.n_vertices),
                   np.zeros(2 * mesh.n_triangles))

    @classmethod
    def from_vector(cls, mesh: TriMesh, vec: np.ndarray) -> "Iterate":
        n = mesh.n_vertices
        if len(vec) != 2 * n + 2 * mesh.n_triangles:
            raise ValueError("vector length does not match mesh")
        return cls(vec[:n].copy(), vec[n:2 * n].copy(), vec[2 * n:].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.y, self.p, self.psi])

    def copy(self) -> "Iterate":
        return Iterate(self.y.copy(), self.p.copy(), self.psi.copy())


@dataclass
class ProblemData:
    """Mesh, desired levels, target and source fields, and penalty weights."""

    mesh: TriMesh
    levels: MultibangLevels
    z: np.ndarray
    f: np.ndarray
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        n = self.mesh.n_vertices
        if len(self.z) != n or len(self.f) != n:
            raise ValueError("z and f must be nodal fields on the mesh")

    # mesh-dependent operators, assembled once and reused
    @cached_property
    def mass(self) -> sp.csr_matrix:
        return fem.assemble_mass(self.mesh)

    @cached_property
    def lumped(self) -> np.ndarray:
        return fem.lumped_mass_diag(self.mesh)

    @cached_property
    def psi_mass(self) -> np.ndarray:
        return fem.psi_mass_diag(self.mesh)

    @cached_property
    def grad_op(self) -> sp.csr_matrix:
        return fem.assemble_gradient(self.mesh)

    @cached_property
    def _interior_scale(self) -> sp.csr_matrix:
        keep = (~self.mesh.boundary_mask).astype(float)
        return sp.diags(keep)

    @cached_property
    def _mass_rhs_z(self) -> np.ndarray:
        return self.mass @ self.z

    @cached_property
    def _mass_rhs_f(self) -> np.ndarray:
        return self.mass @ self.f


def multiplier_field(data: ProblemData, zeta: Iterate) -> np.ndarray:
    """q(zeta), with the lumped-mass inverse scaling built in."""
    v = fem.coupling_apply(data.mesh, zeta.y, zeta.p)
    if data.beta != 0.0:
        v = v + data.beta * (data.grad_op.T @ zeta.psi)
    return -v / (data.alpha * data.lumped)


def control_field(data: ProblemData, zeta: Iterate, gamma: float) -> np.ndarray:
    """u(zeta): componentwise regularized control map applied to q(zeta)."""
    return multibang_control_map(multiplier_field(data, zeta), gamma, data.levels)


def residual(data: ProblemData, zeta: Iterate, gamma: float, delta: float,
             mu_shift: float = 0.0) -> np.ndarray:
    """Stacked residual of the regularized optimality system.

    mu_shift adds -mu_shift * Mpsi @ psi to the third block (used only by the
    accelerated large-weight variant; 0 gives the plain system).
    """
    mesh = data.mesh
    u = control_field(data, zeta, gamma)
    A = fem.assemble_stiffness(mesh, u + data.levels.shift)
    r1 = A @ zeta.p + data.mass @ zeta.y - data._mass_rhs_z
    r2 = A @ zeta.y - data._mass_rhs_f
    bnd = mesh.boundary_mask
    r1[bnd] = zeta.y[bnd]
    r2[bnd] = zeta.p[bnd]
    r3 = data.grad_op @ u - tv_shrink(zeta.psi.reshape(-1, 2), delta).ravel()
    if mu_shift != 0.0:
        r3 = r3 - mu_shift * data.psi_mass * zeta.psi
    return np.concatenate([r1, r2, r3])


def residual_norm(data: ProblemData, r: np.ndarray) -> float:
    """Mass-weighted norm treating the blocks as finite element coefficients."""
    n = data.mesh.n_vertices
    ry, rp, rpsi = r[:n], r[n:2 * n], r[2 * n:]
    sq = (ry @ (data.mass @ ry) + rp @ (data.mass @ rp)
          + rpsi @ (data.psi_mass * rpsi))
    return float(np.sqrt(max(sq, 0.0)))


def field_norm_sq(data: ProblemData, vec: np.ndarray) -> float:
    """Squared L2 norm of a nodal P1 field."""
    return float(vec @ (data.mass @ vec))


def _block_diag_2x2(blocks: np.ndarray) -> sp.csr_matrix:
    """Block-diagonal sparse matrix from an (m, 2, 2) stack."""
    m = blocks.shape[0]
    two = 2 * np.arange(m)
    rows = np.column_stack([two, two, two + 1, two + 1]).ravel()
    cols = np.column_stack([two, two + 1, two, two + 1]).ravel()
    mat = sp.coo_matrix((blocks.reshape(m, 4).ravel(), (rows, cols)),
                        shape=(2 * m, 2 * m))
    mat.eliminate_zeros()
    return mat.tocsr()


def newton_matrix(data: ProblemData, zeta: Iterate, gamma: float, delta: float,
                  mu: float) -> sp.csr_matrix:
    """Stabilized Newton derivative of the residual at zeta.

    Blocks follow the chain rule through q(zeta) and u(zeta); the (3,3) block
    carries the -mu * Mpsi stabilization that removes the structural kernel
    present while every |psi_T| <= 1.  mu = 0 yields the raw matrix.
    """
    mesh = data.mesh
    n = mesh.n_vertices
    q = multiplier_field(data, zeta)
    u = multibang_control_map(q, gamma, data.levels)
    gprime = multibang_control_deriv(q, gamma, data.levels)

    A_u = fem.assemble_stiffness(mesh, u + data.levels.shift)
    B_y = fem.assemble_coupling(mesh, zeta.y)
    B_p = fem.assemble_coupling(mesh, zeta.p)
    D = data.grad_op

    # E_* = d u(zeta) / d(y, p, psi); rows vanish off the ramp set
    scale = sp.diags(-gprime / (data.alpha * data.lumped))
    E_y = (scale @ B_p).tocsr()
    E_p = (scale @ B_y).tocsr()
    C_p = B_p.T.tocsr()
    C_y = B_y.T.tocsr()

    shrink_jac = tv_shrink_jac(zeta.psi.reshape(-1, 2), delta)  # (m, 2, 2)
    E_psipsi = _block_diag_2x2(shrink_jac)

    if data.beta != 0.0:
        E_psi = (data.beta * scale @ D.T).tocsr()
        b13 = C_p @ E_psi
        b23 = C_y @ E_psi
        b33 = D @ E_psi - E_psipsi
    else:
        npsi = 2 * mesh.n_triangles
        b13 = sp.csr_matrix((n, npsi))
        b23 = sp.csr_matrix((n, npsi))
        b33 = -E_psipsi
    if mu != 0.0:
        b33 = b33 - mu * sp.diags(data.psi_mass)

    J = sp.bmat([
        [C_p @ E_y + data.mass, C_p @ E_p + A_u, b13],
        [C_y @ E_y + A_u, C_y @ E_p, b23],
        [D @ E_y, D @ E_p, b33],
    ], format="csr")

    # boundary rows of blocks 1 and 2 become identity rows on y resp. p
    nz = J.shape[0]
    keep = np.ones(nz)
    bidx = mesh.boundary_indices
    keep[bidx] = 0.0
    keep[n + bidx] = 0.0
    pin = sp.coo_matrix((np.ones(2 * len(bidx)),
                         (np.concatenate([bidx, n + bidx]),
                          np.concatenate([bidx, n + bidx]))), shape=(nz, nz))
    return (sp.diags(keep) @ J + pin).tocsr()


@dataclass
class SubproblemResult:
    u: np.ndarray
    psi: np.ndarray
    q: np.ndarray
    iterations: int
    consistency: float  # weighted norm of D u - shrink(psi)


def _conjugate_value(s, gamma: float, levels: MultibangLevels) -> np.ndarray:
    """sup over t of s t - box_penalty(t) - gamma/2 t^2, componentwise."""
    t = multibang_control_map(s, gamma, levels)
    return s * t - multibang_penalty_box(t, levels) - 0.5 * gamma * t * t


def solve_control_subproblem(data: ProblemData, a: np.ndarray, gamma: float,
                             delta: float, warm_u=None, warm_psi=None,
                             tol: float = 1e-6,
                             max_iter: int = 100) -> SubproblemResult:
    """Exactly eliminate the (q, u, psi) subsystem at fixed (y, p).

    For a = coupling vector of the current state/adjoint pair, solves the
    strictly convex problem

        min_u  <a, u> + alpha (penalty + gamma/2 |u|^2_lumped)
                      + beta (TV + delta/2 |D u|^2)

    whose optimality conditions are the third to fifth equations of the
    regularized system.  beta = 0 separates and is solved in closed form.
    beta > 0 minimizes the smooth convex dual in the scaled TV dual variable
    by a damped Newton method: the dual gradient equals the consistency
    defect D u - shrink(psi), so the stopping test is exactly the residual
    block this elimination leaves inexact.
    """
    alpha, beta = data.alpha, data.beta
    d = data.lumped
    lv = data.levels
    D = data.grad_op

    if beta == 0.0:
        q = -a / (alpha * d)
        u = multibang_control_map(q, gamma, lv)
        psi = tv_dual_source((D @ u).reshape(-1, 2), delta).ravel()
        return SubproblemResult(u, psi, q, 0, 0.0)

    sqrt_mhat = np.sqrt(data.psi_mass)
    npsi = 2 * data.mesh.n_triangles
    psi = warm_psi.copy() if warm_psi is not None else np.zeros(npsi)

    def dual_state(psi):
        q = -(a + beta * (D.T @ psi)) / (alpha * d)
        u = multibang_control_map(q, gamma, lv)
        shrink = tv_shrink(psi.reshape(-1, 2), delta).ravel()
        grad = -(D @ u) + shrink  # the consistency defect of the fifth block
        excess = np.maximum(np.linalg.norm(psi.reshape(-1, 2), axis=1) - 1.0, 0.0)
        value = (float(np.dot(alpha * d, _conjugate_value(q, gamma, lv)))
                 + beta * float(np.sum(excess ** 2)) / (2.0 * delta))
        return q, u, grad, value

    q, u, grad, value = dual_state(psi)
    gap = float(np.linalg.norm(sqrt_mhat * grad))
    it = 0
    while gap > tol and it < max_iter:
        gprime = multibang_control_deriv(q, gamma, lv)
        curv = sp.diags(beta * gprime / (alpha * d))
        H = (D @ curv @ D.T
             + _block_diag_2x2(tv_shrink_jac(psi.reshape(-1, 2), delta)))
        # blocks still inside the unit ball carry no shrink curvature; give
        # them the scale that moves them across the ball in one step
        nrm = np.linalg.norm(psi.reshape(-1, 2), axis=1)
        gblk = np.linalg.norm(grad.reshape(-1, 2), axis=1)
        crossing = np.where(nrm <= 1.0, gblk, 0.0)
        reg = 1e-10 * max(float(H.diagonal().max()), 1e-12)
        H = (H + sp.diags(np.repeat(crossing, 2) + reg)).tocsr()
        try:
            step = solve_sparse(H, -grad)
        except SingularSystemError:
            H = (H + (1e6 * reg + 1e-12) * sp.eye(npsi)).tocsr()
            try:
                step = solve_sparse(H, -grad)
            except SingularSystemError:
                break
        slope = beta * float(grad @ step)
        sigma = 1.0
        for _ in range(40):
            trial = psi + sigma * step
            q_t, u_t, grad_t, value_t = dual_state(trial)
            gap_t = float(np.linalg.norm(sqrt_mhat * grad_t))
            if value_t <= value + 1e-4 * sigma * slope or gap_t <= 0.9 * gap:
                break
            sigma *= 0.5
        psi, q, u, grad, value = trial, q_t, u_t, grad_t, value_t
        gap = gap_t
        it += 1
    return SubproblemResult(u, psi, q, it, gap)


def objective_terms(data: ProblemData, u: np.ndarray):
    """(tracking, penalty integral, discrete TV, total) for a control field.

    Controls outside [0, u_m] make the penalty (and the total) infinite.
    """
    u = np.asarray(u, dtype=float)
    gvals = multibang_penalty_box(u, data.levels)
    ghat = float(np.dot(data.lumped, gvals)) if np.all(np.isfinite(gvals)) else np.inf
    if not np.isfinite(ghat):
        return np.inf, np.inf, np.inf, np.inf
    du = (data.grad_op @ u).reshape(-1, 2)
    tv = float(np.linalg.norm(du, axis=1).sum())
    y = fem.solve_state(data.mesh, u + data.levels.shift, data.f)
    diff = y - data.z
    tracking = 0.5 * field_norm_sq(data, diff)
    total = tracking + data.alpha * ghat + data.beta * tv
    return tracking, ghat, tv, total


def objective(data: ProblemData, u: np.ndarray) -> float:
    return objective_terms(data, u)[3]
