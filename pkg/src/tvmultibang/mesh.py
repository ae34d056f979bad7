"""Uniform triangulations of axis-aligned rectangles and P1 interpolation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass
class RectGrid:
    """Structured-grid metadata kept for fast point location."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int


@dataclass
class TriMesh:
    """Conforming triangulation: vertices, triangles (CCW), areas, boundary flags.

    Immutable after construction; safe to share read-only.
    """

    vertices: np.ndarray      # (n_vertices, 2)
    triangles: np.ndarray     # (n_triangles, 3) vertex indices, CCW
    areas: np.ndarray         # (n_triangles,)
    boundary_mask: np.ndarray  # (n_vertices,) bool
    grid: Optional[RectGrid] = None
    _gradients: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "TriMesh":
        """Build a mesh from raw arrays, deriving areas and boundary flags.

        The boundary is detected topologically: an edge incident to exactly
        one triangle is a boundary edge.
        """
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        signed = 0.5 * cross2(b - a, c - a)
        if np.any(signed <= 0.0):
            raise ValueError("triangles must be counterclockwise with positive area")
        edges = edge_counts(triangles)
        bmask = np.zeros(len(vertices), dtype=bool)
        for (i, j), cnt in edges.items():
            if cnt == 1:
                bmask[i] = True
                bmask[j] = True
        return cls(vertices, triangles, signed, bmask)

    def element_gradients(self) -> np.ndarray:
        """Per-triangle gradients of the three P1 basis functions, (n_tri, 3, 2)."""
        if self._gradients is None:
            v = self.vertices[self.triangles]       # (M, 3, 2)
            # grad(lambda_i) = rot90(v_k - v_j) / (2A) for cyclic (i, j, k)
            g = np.empty_like(v)
            for i in range(3):
                d = v[:, (i + 2) % 3] - v[:, (i + 1) % 3]
                g[:, i, 0] = -d[:, 1]
                g[:, i, 1] = d[:, 0]
            g /= (2.0 * self.areas)[:, None, None]
            self._gradients = g
        return self._gradients

    def locate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map points to (triangle index, barycentric coordinates).

        Only available for meshes built by build_rect_mesh.
        """
        if self.grid is None:
            raise ValueError("point location requires a structured rectangle mesh")
        g = self.grid
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        hx = (g.xmax - g.xmin) / g.nx
        hy = (g.ymax - g.ymin) / g.ny
        ci = np.clip(((pts[:, 0] - g.xmin) / hx).astype(int), 0, g.nx - 1)
        cj = np.clip(((pts[:, 1] - g.ymin) / hy).astype(int), 0, g.ny - 1)
        xi = (pts[:, 0] - (g.xmin + ci * hx)) / hx
        eta = (pts[:, 1] - (g.ymin + cj * hy)) / hy
        lower = xi >= eta  # cells are split along the lower-left -> upper-right diagonal
        tri = 2 * (cj * g.nx + ci) + np.where(lower, 0, 1)
        # barycentric w.r.t. the triangle's own vertex order
        lam = np.empty((len(pts), 3))
        lam[lower, 0] = 1.0 - xi[lower]
        lam[lower, 1] = xi[lower] - eta[lower]
        lam[lower, 2] = eta[lower]
        up = ~lower
        lam[up, 0] = 1.0 - eta[up]
        lam[up, 1] = xi[up]
        lam[up, 2] = eta[up] - xi[up]
        return tri, lam


def cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """z-component of the cross product of stacked 2-vectors."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def edge_counts(triangles: np.ndarray) -> dict:
    """Count how many triangles share each undirected edge."""
    counts: dict = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    return counts


def build_rect_mesh(xmin: float, xmax: float, ymin: float, ymax: float,
                    nx: int, ny: int) -> TriMesh:
    """Uniform triangulation of (xmin,xmax) x (ymin,ymax) with nx x ny cells.

    Each cell is split into two triangles along its lower-left to upper-right
    diagonal, both oriented counterclockwise.  Vertices are numbered row by
    row (x fastest), triangles cell by cell (lower triangle first).
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts nx, ny must be at least 1")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("invalid rectangle extents")
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)            # row j = constant y
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    v00 = cj * (nx + 1) + ci
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    areas = 0.5 * cross2(b - a, c - a)

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    bmask = ((ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)).ravel()

    return TriMesh(vertices, triangles, areas, bmask,
                   grid=RectGrid(xmin, xmax, ymin, ymax, nx, ny))


def interpolate(mesh: TriMesh, fn: Callable[[float, float], float]) -> np.ndarray:
    """Nodal interpolation: coefficient i equals fn evaluated at vertex i."""
    return np.array([fn(x, y) for x, y in mesh.vertices], dtype=float)


def eval_p1(mesh: TriMesh, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the P1 function with the given nodal coefficients at points."""
    tri, lam = mesh.locate(points)
    vals = coeffs[mesh.triangles[tri]]
    return np.einsum("ij,ij->i", vals, lam)
