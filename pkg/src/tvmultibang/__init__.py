"""Reconstruction of piecewise-structured elliptic diffusion coefficients.

Solves the TV-regularized multi-bang control problem

    min_u  1/2 ||y - z||^2  +  alpha * G(u)  +  beta * TV(u)
    s.t.   -div((u + u_min) grad y) = f,   y = 0 on the boundary,

on P1 finite elements over a rectangle, where G is a pointwise penalty
promoting a prescribed set of coefficient values.  The regularized
optimality system is solved by a semismooth Newton method with
path-following in the Moreau-Yosida weights.
"""

from .mesh import TriMesh, build_rect_mesh, interpolate
from .kernels import MultibangLevels
from .optsys import Iterate, ProblemData
from .pathfollow import SolverParams, PathResult, path_follow, nu_continuation
from .scenarios import Scenario, example1, example2, make_target

__version__ = "0.1.0"

__all__ = [
    "TriMesh",
    "build_rect_mesh",
    "interpolate",
    "MultibangLevels",
    "Iterate",
    "ProblemData",
    "SolverParams",
    "PathResult",
    "path_follow",
    "nu_continuation",
    "Scenario",
    "example1",
    "example2",
    "make_target",
    "__version__",
]
