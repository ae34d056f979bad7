"""P1 finite element operators on triangle meshes and the state/adjoint solves.

Fields are plain numpy coefficient vectors: nodal values of length n_vertices
for P1 functions, or per-element 2-vectors flattened to length 2*n_triangles
(block j occupying entries 2j, 2j+1) for piecewise-constant vector fields.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .linsolve import solve_sparse
from .mesh import TriMesh


class CoercivityError(ValueError):
    """Raised when a diffusion coefficient is not strictly positive."""


def _scatter_indices(mesh: TriMesh):
    """COO (row, col) index arrays for 3x3 element blocks."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return rows, cols


def assemble_mass(mesh: TriMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix: element blocks (|T|/12) [[2,1,1],[1,2,1],[1,1,2]]."""
    n = mesh.n_vertices
    base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    blocks = mesh.areas[:, None, None] * base
    rows, cols = _scatter_indices(mesh)
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def lumped_mass_diag(mesh: TriMesh) -> np.ndarray:
    """Diagonal d_i = integral of the i-th nodal basis = sum of |T|/3 over T owning i."""
    contrib = np.repeat(mesh.areas / 3.0, 3)
    return np.bincount(mesh.triangles.ravel(), weights=contrib,
                       minlength=mesh.n_vertices)


def assemble_lumped_mass(mesh: TriMesh) -> sp.csr_matrix:
    return sp.diags(lumped_mass_diag(mesh)).tocsr()


def assemble_stiffness(mesh: TriMesh, w: np.ndarray) -> sp.csr_matrix:
    """Stiffness matrix of the form (w grad y, grad v) with P1 coefficient w.

    P1 gradients are constant per element, so the element integral is exact
    with the vertex mean of w times |T| times the gradient products.
    """
    n = mesh.n_vertices
    g = mesh.element_gradients()
    wbar = np.asarray(w)[mesh.triangles].mean(axis=1)
    blocks = (wbar * mesh.areas)[:, None, None] * np.einsum("mid,mjd->mij", g, g)
    rows, cols = _scatter_indices(mesh)
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_gradient(mesh: TriMesh) -> sp.csr_matrix:
    """Element-gradient operator of shape (2 n_triangles, n_vertices).

    Block row j maps nodal values to |T_j| grad(u)|_{T_j}, i.e. the pairing
    of grad u with the characteristic function of T_j.
    """
    m, n = mesh.n_triangles, mesh.n_vertices
    g = mesh.element_gradients() * mesh.areas[:, None, None]  # (m, 3, 2)
    rows = np.empty((m, 3, 2), dtype=np.int64)
    rows[:, :, 0] = (2 * np.arange(m))[:, None]
    rows[:, :, 1] = rows[:, :, 0] + 1
    cols = np.repeat(mesh.triangles[:, :, None], 2, axis=2)
    return sp.coo_matrix((g.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(2 * m, n)).tocsr()


def psi_mass_diag(mesh: TriMesh) -> np.ndarray:
    """Diagonal of the piecewise-constant vector mass matrix: |T_j| per component."""
    return np.repeat(mesh.areas, 2)


def assemble_psi_mass(mesh: TriMesh) -> sp.csr_matrix:
    return sp.diags(psi_mass_diag(mesh)).tocsr()


def assemble_coupling(mesh: TriMesh, y: np.ndarray) -> sp.csr_matrix:
    """Matrix of the bilinear form ((grad y . grad v), w) in (w, v).

    Shape (n_vertices, n_vertices); applied to an adjoint vector it yields the
    nodal pairing of grad y . grad p against each P1 basis function, which is
    the gradient of the tracking term with respect to the coefficient.
    """
    n = mesh.n_vertices
    g = mesh.element_gradients()
    gy = np.einsum("mi,mid->md", np.asarray(y)[mesh.triangles], g)  # grad y per element
    vals = np.einsum("md,mjd->mj", gy, g) * (mesh.areas / 3.0)[:, None]  # (m, 3)
    # the same row value lands on each of the element's three vertices
    blocks = np.repeat(vals[:, None, :], 3, axis=1)
    rows, cols = _scatter_indices(mesh)
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def coupling_apply(mesh: TriMesh, y: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Matrix-free evaluation of assemble_coupling(mesh, y) @ p.

    Symmetric in (y, p) because the integrand grad y . grad p is.
    """
    g = mesh.element_gradients()
    tri_vals_y = np.asarray(y)[mesh.triangles]
    tri_vals_p = np.asarray(p)[mesh.triangles]
    gy = np.einsum("mi,mid->md", tri_vals_y, g)
    gp = np.einsum("mi,mid->md", tri_vals_p, g)
    per_elem = np.einsum("md,md->m", gy, gp) * (mesh.areas / 3.0)
    out = np.bincount(mesh.triangles.ravel(),
                      weights=np.repeat(per_elem, 3),
                      minlength=mesh.n_vertices)
    return out


def apply_dirichlet(A: sp.csr_matrix, mesh: TriMesh) -> sp.csr_matrix:
    """Replace boundary rows and columns by identity (homogeneous data)."""
    keep = sp.diags((~mesh.boundary_mask).astype(float))
    bnd = sp.diags(mesh.boundary_mask.astype(float))
    return (keep @ A @ keep + bnd).tocsr()


def solve_state(mesh: TriMesh, w: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Solve (w grad y, grad v) = (f, v) with zero boundary values.

    The right-hand side uses the consistent mass matrix applied to the nodal
    interpolant of f.
    """
    w = np.asarray(w, dtype=float)
    if w.min() <= 0.0:
        raise CoercivityError("diffusion coefficient must be strictly positive")
    A = apply_dirichlet(assemble_stiffness(mesh, w), mesh)
    rhs = assemble_mass(mesh) @ np.asarray(f, dtype=float)
    rhs[mesh.boundary_mask] = 0.0
    return solve_sparse(A, rhs)


def solve_adjoint(mesh: TriMesh, w: np.ndarray, y: np.ndarray,
                  z: np.ndarray) -> np.ndarray:
    """Solve the companion equation with right-hand side (z - y, v)."""
    return solve_state(mesh, w, np.asarray(z, dtype=float) - np.asarray(y, dtype=float))
